#include "pnax/energy.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "pnax/errors.hpp"

namespace pnax {

namespace {

// Fractions arrive as decimals; snap them to a rational with a 10^9
// denominator so e.g. 0.2023 becomes exactly 2023/10000 after reduction.
Rat rat_from_decimal(double v) {
    if (!std::isfinite(v)) throw config_error("energy gain is not a finite number");
    const std::int64_t kScale = 1000000000;
    return Rat(std::llround(v * static_cast<double>(kScale)), kScale);
}

}  // namespace

EnergyTable EnergyTable::defaults() {
    EnergyTable t;
    t.set_gain(ApproxMode::pe(1), Rat(83, 1000));
    t.set_gain(ApproxMode::pe(2), Rat(2023, 10000));
    t.set_gain(ApproxMode::pe(3), Rat(366, 1000));
    t.set_gain(ApproxMode::ne(1), Rat(55, 1000));
    t.set_gain(ApproxMode::ne(2), Rat(1617, 10000));
    t.set_gain(ApproxMode::ne(3), Rat(318, 1000));
    t.validate();
    return t;
}

void EnergyTable::set_gain(ApproxMode mode, Rat g) {
    if (mode.is_exact() && g != Rat(0))
        throw config_error("ZE gain must be 0");
    gains_[mode.code()] = g;
}

void EnergyTable::validate() const {
    if (gains_[0] != Rat(0)) throw config_error("ZE gain must be 0");
    for (int code = 1; code < ApproxMode::kNumCodes; ++code) {
        const Rat g = gains_[code];
        if (g < Rat(0) || g >= Rat(1))
            throw config_error("energy gain for " + ApproxMode::from_code(code).str() +
                               " out of [0,1)");
    }
    for (ModeKind kind : {ModeKind::PE, ModeKind::NE}) {
        for (int z = 2; z <= 3; ++z) {
            if (gain(ApproxMode::make(kind, z)) < gain(ApproxMode::make(kind, z - 1)))
                throw config_error("energy gains must be non-decreasing in z");
        }
    }
}

EnergyTable EnergyTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open energy table: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw schema_error("energy table " + path.string() + ": " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "pnax-energy-table" || j.value("version", 0) != 1)
        throw schema_error("energy table " + path.string() +
                           ": expected format pnax-energy-table version 1");
    if (!j.contains("gains") || !j["gains"].is_object())
        throw schema_error("energy table " + path.string() + ": missing gains object");
    EnergyTable t;
    const auto& gains = j["gains"];
    for (const char* key : {"PE1", "PE2", "PE3", "NE1", "NE2", "NE3"}) {
        if (!gains.contains(key) || !gains[key].is_number())
            throw schema_error("energy table " + path.string() + ": missing numeric gain " + key);
        t.set_gain(ApproxMode::parse(key), rat_from_decimal(gains[key].get<double>()));
    }
    t.validate();
    return t;
}

MultCountProfile mult_count_profile(const QuantModel& model) {
    MultCountProfile profile;
    int h = model.input_shape.at(1), w = model.input_shape.at(2);
    for (int i = 0; i < static_cast<int>(model.layers.size()); ++i) {
        const Layer& layer = model.layers[i];
        if (const auto* conv = std::get_if<Conv2dLayer>(&layer)) {
            const int oh = (h + 2 * conv->pad_h - conv->kh) / conv->stride_h + 1;
            const int ow = (w + 2 * conv->pad_w - conv->kw) / conv->stride_w + 1;
            profile.push_back({i, conv->out_channels, conv->in_channels * conv->kh * conv->kw,
                               static_cast<std::int64_t>(oh) * ow});
            h = oh;
            w = ow;
        } else if (const auto* fc = std::get_if<FcLayer>(&layer)) {
            profile.push_back({i, fc->out_features, fc->in_features, 1});
            h = 1;
            w = 1;
        } else if (const auto* pool = std::get_if<PoolLayer>(&layer)) {
            h = (h - pool->kh) / pool->stride_h + 1;
            w = (w - pool->kw) / pool->stride_w + 1;
        }
        // relu and argmax multiply nothing and keep the shape
    }
    return profile;
}

Rat energy_of_assignment(const QuantModel& model, const CompiledAssignment& compiled,
                         const EnergyTable& table, const MultCountProfile& profile) {
    (void)model;
    Rat saved(0);
    std::int64_t total = 0;
    for (const LayerMultCount& lc : profile) {
        total += lc.per_weight * lc.filters * lc.positions;
        const CompiledLayerModes* modes = compiled.find(lc.layer_index);
        if (!modes) continue;  // whole layer exact
        if (modes->filters != lc.filters || modes->positions != lc.positions)
            throw input_error("assignment does not match multiplication profile at layer " +
                              std::to_string(lc.layer_index));
        std::array<std::int64_t, ApproxMode::kNumCodes> hist{};
        for (std::uint8_t code : modes->codes) ++hist[code];
        for (int code = 1; code < ApproxMode::kNumCodes; ++code) {
            if (hist[code] == 0) continue;
            saved += Rat(hist[code] * lc.per_weight) * table.gain(ApproxMode::from_code(code));
        }
    }
    for (const CompiledLayerModes& modes : compiled.layers) {
        bool known = false;
        for (const LayerMultCount& lc : profile) known = known || lc.layer_index == modes.layer_index;
        if (!known)
            throw input_error("assignment references layer " + std::to_string(modes.layer_index) +
                              " absent from the multiplication profile");
    }
    if (total == 0) throw config_error("model performs no multiplications");
    return saved / Rat(total);
}

Rat energy_of_assignment(const QuantModel& model, const ModeAssignment& assignment,
                         const EnergyTable& table) {
    return energy_of_assignment(model, compile_assignment(model, assignment), table,
                                mult_count_profile(model));
}

}  // namespace pnax
