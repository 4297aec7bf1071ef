#include "pnax/assignment.hpp"

#include <fstream>
#include <sstream>

#include "pnax/errors.hpp"

namespace pnax {

void ModeAssignment::clear_layer(int layer) {
    auto it = entries_.lower_bound({layer, 0, 0});
    while (it != entries_.end() && std::get<0>(it->first) == layer) it = entries_.erase(it);
}

std::string ModeAssignment::serialize(const std::string& model_name) const {
    std::ostringstream out;
    out << "pnax-assignment v1\n";
    out << "model " << model_name << "\n";
    out << "columns layer filter position mode\n";
    for (const auto& [key, mode] : entries_) {
        const auto& [layer, filter, pos] = key;
        out << layer << ' ' << filter << ' ' << pos << ' ' << mode.str() << '\n';
    }
    return out.str();
}

ModeAssignment ModeAssignment::deserialize(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "pnax-assignment v1")
        throw schema_error("assignment: missing 'pnax-assignment v1' header");
    ModeAssignment a;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("model ", 0) == 0 || line.rfind("columns ", 0) == 0) continue;
        std::istringstream ls(line);
        int layer, filter, pos;
        std::string mode_str;
        if (!(ls >> layer >> filter >> pos >> mode_str))
            throw schema_error("assignment line " + std::to_string(lineno) + ": expected 'layer filter position mode'");
        if (layer < 0 || filter < 0 || pos < 0)
            throw schema_error("assignment line " + std::to_string(lineno) + ": negative index");
        ApproxMode mode;
        try {
            mode = ApproxMode::parse(mode_str);
        } catch (const config_error& e) {
            throw schema_error("assignment line " + std::to_string(lineno) + ": " + e.what());
        }
        a.set(layer, filter, pos, mode);
    }
    return a;
}

void ModeAssignment::save(const std::filesystem::path& path, const std::string& model_name) const {
    std::ofstream out(path, std::ios::binary);  // binary: keep \n on all hosts
    if (!out) throw input_error("cannot write assignment file: " + path.string());
    out << serialize(model_name);
}

ModeAssignment ModeAssignment::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open assignment file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

std::uint64_t ModeAssignment::stable_hash() const {
    const std::string s = serialize("");
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

CompiledAssignment compile_assignment(const QuantModel& model, const ModeAssignment& assignment) {
    CompiledAssignment compiled;
    const auto refs = approximable_layers(model);
    compiled.layers.reserve(refs.size());
    for (const auto& ref : refs) {
        CompiledLayerModes lm;
        lm.layer_index = ref.layer_index;
        lm.filters = ref.filters;
        lm.positions = ref.positions;
        const std::size_t n = static_cast<std::size_t>(ref.filters) * ref.positions;
        lm.codes.assign(n, 0);
        lm.and_mask.assign(n, 0xFF);
        lm.or_mask.assign(n, 0x00);
        compiled.layers.push_back(std::move(lm));
    }

    for (const auto& [key, mode] : assignment.entries()) {
        const auto& [layer, filter, pos] = key;
        CompiledLayerModes* lm = nullptr;
        for (auto& l : compiled.layers)
            if (l.layer_index == layer) lm = &l;
        if (lm == nullptr)
            throw input_error("assignment names layer " + std::to_string(layer) +
                              " which is not an approximable layer of model");
        if (filter < 0 || filter >= lm->filters)
            throw input_error("assignment filter index " + std::to_string(filter) +
                              " out of range for layer " + std::to_string(layer));
        if (pos < 0 || pos >= lm->positions)
            throw input_error("assignment weight position " + std::to_string(pos) +
                              " out of range for layer " + std::to_string(layer));
        const std::size_t i = static_cast<std::size_t>(filter) * lm->positions + pos;
        lm->codes[i] = mode.code();
        lm->and_mask[i] = mode.and_mask();
        lm->or_mask[i] = mode.or_mask();
    }
    return compiled;
}

}  // namespace pnax
