#include "pnax/optimizer.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <set>
#include <unordered_map>

#include "pnax/errors.hpp"
#include "pnax/inference.hpp"
#include "pnax/partition.hpp"

namespace pnax {

FilterBalance balance_filter(std::span<const std::uint8_t> weights, int z) {
    std::array<std::vector<int>, 256> by_value;
    for (int p = 0; p < static_cast<int>(weights.size()); ++p)
        by_value[weights[p]].push_back(p);  // positions ascend per value

    FilterBalance fb;
    fb.modes.assign(weights.size(), ApproxMode::ze());
    std::vector<std::pair<int, int>> residues;  // (position, value)
    for (int v = 0; v < 256; ++v) {
        const auto& pos = by_value[v];
        if (pos.empty()) continue;
        const int half = static_cast<int>(pos.size() / 2);
        for (int i = 0; i < half; ++i) fb.modes[pos[i]] = ApproxMode::pe(z);
        for (int i = half; i < 2 * half; ++i) fb.modes[pos[i]] = ApproxMode::ne(z);
        if (pos.size() % 2 != 0) residues.emplace_back(pos.back(), v);
    }
    std::sort(residues.begin(), residues.end());
    fb.residue_positions.reserve(residues.size());
    fb.residue_values.reserve(residues.size());
    for (auto [p, v] : residues) {
        fb.residue_positions.push_back(p);
        fb.residue_values.push_back(static_cast<std::uint8_t>(v));
    }
    return fb;
}

std::vector<LayerBalance> balance_model(const QuantModel& model) {
    std::vector<LayerBalance> balances;
    for (const ApproxLayerRef& ref : approximable_layers(model)) {
        LayerBalance lb;
        lb.layer_index = ref.layer_index;
        lb.filters = ref.filters;
        lb.positions = ref.positions;
        lb.per_filter.reserve(ref.filters);
        for (int f = 0; f < ref.filters; ++f) {
            std::span<const std::uint8_t> row(
                ref.weights->data.data() + static_cast<std::size_t>(f) * ref.positions,
                static_cast<std::size_t>(ref.positions));
            lb.per_filter.push_back(balance_filter(row, 3));
        }
        balances.push_back(std::move(lb));
    }
    return balances;
}

ModeAssignment materialize_balanced(const std::vector<LayerBalance>& balances,
                                    const std::map<int, int>& layer_z) {
    for (const auto& [layer, z] : layer_z) {
        bool known = false;
        for (const LayerBalance& lb : balances) known = known || lb.layer_index == layer;
        if (!known) throw input_error("layer " + std::to_string(layer) + " has no balance data");
        if (z < 1 || z > 3) throw config_error("layer z must be in {1,2,3}");
    }
    ModeAssignment a;
    for (const LayerBalance& lb : balances) {
        auto it = layer_z.find(lb.layer_index);
        if (it == layer_z.end()) continue;
        const int z = it->second;
        for (int f = 0; f < lb.filters; ++f) {
            const FilterBalance& fb = lb.per_filter[f];
            for (int p = 0; p < lb.positions; ++p) {
                const ApproxMode m = fb.modes[p];
                if (!m.is_exact()) a.set(lb.layer_index, f, p, ApproxMode::make(m.kind(), z));
            }
        }
    }
    return a;
}

ModeAssignment apply_residues(const ModeAssignment& base,
                              const std::vector<LayerBalance>& balances, int residue_z) {
    ModeAssignment a = base;
    for (const LayerBalance& lb : balances) {
        for (int f = 0; f < lb.filters; ++f) {
            const FilterBalance& fb = lb.per_filter[f];
            if (fb.residue_values.empty()) continue;
            std::vector<std::int64_t> values(fb.residue_values.begin(), fb.residue_values.end());
            const PartitionSplit split = ldm_partition_indices(values);
            for (std::size_t i : split.indices_a)
                a.set(lb.layer_index, f, fb.residue_positions[i], ApproxMode::pe(residue_z));
            for (std::size_t i : split.indices_b)
                a.set(lb.layer_index, f, fb.residue_positions[i], ApproxMode::ne(residue_z));
        }
    }
    return a;
}

ModeAssignment fbs_assignment(const QuantModel& model, int z) {
    ModeAssignment a;
    for (const ApproxLayerRef& ref : approximable_layers(model)) {
        for (int f = 0; f < ref.filters; ++f) {
            const std::uint8_t* row =
                ref.weights->data.data() + static_cast<std::size_t>(f) * ref.positions;
            std::vector<std::int64_t> values(row, row + ref.positions);
            const PartitionSplit split = ldm_partition_indices(values);
            for (std::size_t i : split.indices_a)
                a.set(ref.layer_index, f, static_cast<int>(i), ApproxMode::pe(z));
            for (std::size_t i : split.indices_b)
                a.set(ref.layer_index, f, static_cast<int>(i), ApproxMode::ne(z));
        }
    }
    return a;
}

std::vector<FilterMoments> per_filter_error_stats(const QuantModel& model,
                                                  const ModeAssignment& assignment) {
    std::vector<FilterMoments> out;
    for (const ApproxLayerRef& ref : approximable_layers(model)) {
        for (int f = 0; f < ref.filters; ++f) {
            const std::uint8_t* row =
                ref.weights->data.data() + static_cast<std::size_t>(f) * ref.positions;
            WeightedModeList wml;
            wml.reserve(ref.positions);
            for (int p = 0; p < ref.positions; ++p)
                wml.push_back({row[p], assignment.get(ref.layer_index, f, p)});
            out.push_back({ref.layer_index, f, {conv_error_mean(wml), conv_error_variance(wml)}});
        }
    }
    return out;
}

Strategy parse_strategy(const std::string& name) {
    if (name == "five-step") return Strategy::FiveStep;
    if (name == "fbs") return Strategy::Fbs;
    throw config_error("unknown strategy '" + name + "' (expected five-step or fbs)");
}

std::string strategy_name(Strategy s) {
    return s == Strategy::FiveStep ? "five-step" : "fbs";
}

namespace {

struct Evaluation {
    double accuracy = 0.0;
    int correct = 0;
    double drop_pp = 0.0;
    Rat energy;
    bool valid = false;
};

// Shared state of one pipeline run: the evaluation subset, the baseline, a
// result cache keyed by the canonical assignment text, and the search log.
class SearchContext {
public:
    SearchContext(const QuantModel& model, const Dataset& dataset, const PipelineConfig& cfg)
        : model_(model),
          dataset_(dataset),
          cfg_(cfg),
          subset_(select_subset(dataset.count, cfg.subset, cfg.seed)),
          profile_(mult_count_profile(model)) {
        const Evaluation base = evaluate(ModeAssignment(), "baseline");
        base_correct_ = base.correct;
        base_accuracy_ = base.accuracy;
    }

    const QuantModel& model() const { return model_; }
    int eval_n() const { return static_cast<int>(subset_.size()); }
    int base_correct() const { return base_correct_; }
    double base_accuracy() const { return base_accuracy_; }

    Evaluation evaluate(const ModeAssignment& a, const std::string& label) {
        const std::string key = a.serialize("");
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            const CompiledAssignment compiled = compile_assignment(model_, a);
            const EvalResult er =
                evaluate_accuracy(model_, dataset_, compiled, subset_, cfg_.workers);
            Evaluation ev;
            ev.accuracy = er.accuracy;
            ev.correct = er.correct;
            ev.energy = energy_of_assignment(model_, compiled, cfg_.energy, profile_);
            it = cache_.emplace(key, ev).first;
        }
        Evaluation ev = it->second;
        if (base_correct_ < 0) {  // this is the baseline itself
            ev.drop_pp = 0.0;
            ev.valid = true;
        } else {
            // exact in doubles: both sides are small-integer products
            ev.drop_pp = (base_correct_ - ev.correct) * 100.0 / eval_n();
            ev.valid = (base_correct_ - ev.correct) * 100.0 <= cfg_.threshold_pp * eval_n();
        }
        log_.push_back({label, a.stable_hash(), static_cast<int>(a.approx_count()), ev.accuracy,
                        ev.drop_pp, to_double(ev.energy), ev.valid});
        return ev;
    }

    MappingSolution make_solution(const ModeAssignment& a, const Evaluation& ev) const {
        MappingSolution s;
        s.assignment = a;
        s.measured_accuracy = ev.accuracy;
        s.correct = ev.correct;
        s.accuracy_drop_pp = ev.drop_pp;
        s.energy_reduction = ev.energy;
        for (const FilterMoments& fm : per_filter_error_stats(model_, a)) {
            s.predicted_mean += fm.stats.mean;
            s.predicted_variance += fm.stats.variance;
        }
        return s;
    }

    std::vector<SearchLogEntry> take_log() { return std::move(log_); }

private:
    const QuantModel& model_;
    const Dataset& dataset_;
    PipelineConfig cfg_;
    std::vector<int> subset_;
    MultCountProfile profile_;
    int base_correct_ = -1;
    double base_accuracy_ = 0.0;
    std::unordered_map<std::string, Evaluation> cache_;
    std::vector<SearchLogEntry> log_;
};

void finalize(PipelineResult& r, std::vector<MappingSolution> all, SearchContext& ctx) {
    // all-ZE satisfies any threshold but is the fallback, never a solution
    std::erase_if(all, [](const MappingSolution& s) { return s.assignment.empty(); });

    std::vector<std::string> keys(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) keys[i] = all[i].assignment.serialize("");
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (all[x].energy_reduction != all[y].energy_reduction)
            return all[x].energy_reduction > all[y].energy_reduction;
        return keys[x] < keys[y];
    });
    r.solutions.clear();
    r.solutions.reserve(all.size());
    for (std::size_t i : order) r.solutions.push_back(std::move(all[i]));

    r.baseline_accuracy = ctx.base_accuracy();
    r.baseline_correct = ctx.base_correct();
    r.eval_n = ctx.eval_n();
    if (r.solutions.empty()) {
        r.status = PipelineStatus::NoSolution;
        MappingSolution fallback;
        fallback.measured_accuracy = ctx.base_accuracy();
        fallback.correct = ctx.base_correct();
        r.best = fallback;
    } else {
        r.status = PipelineStatus::Solved;
        r.best = r.solutions.front();
    }
    r.log = ctx.take_log();
}

PipelineResult run_five_step(SearchContext& ctx, const std::vector<LayerBalance>& balances) {
    PipelineResult r;

    // Step 1: solo-layer resilience at z=3.
    for (const LayerBalance& lb : balances) {
        const ModeAssignment a = materialize_balanced(balances, {{lb.layer_index, 3}});
        const Evaluation ev =
            ctx.evaluate(a, "step1 layer=" + std::to_string(lb.layer_index));
        r.resilience.push_back({lb.layer_index, ev.accuracy});
    }
    std::stable_sort(r.resilience.begin(), r.resilience.end(),
                     [](const LayerResilience& a, const LayerResilience& b) {
                         if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
                         return a.layer_index < b.layer_index;
                     });

    // Step 2: grow the z=3 prefix most-resilient-first until the drop budget
    // is exceeded; the violating layer is excluded.
    std::map<int, int> zmap;
    for (std::size_t k = 0; k < r.resilience.size(); ++k) {
        const int layer = r.resilience[k].layer_index;
        zmap[layer] = 3;
        const Evaluation ev = ctx.evaluate(materialize_balanced(balances, zmap),
                                           "step2 prefix=" + std::to_string(k + 1));
        if (!ev.valid) {
            zmap.erase(layer);
            break;
        }
        r.z3_layers.push_back(layer);
    }

    // Step 3: re-rank the leftover layers at z=2 on top of the fixed prefix,
    // then accumulate the same way.
    std::vector<LayerResilience> rank;
    for (const LayerBalance& lb : balances) {
        if (zmap.count(lb.layer_index)) continue;
        std::map<int, int> probe = zmap;
        probe[lb.layer_index] = 2;
        const Evaluation ev = ctx.evaluate(materialize_balanced(balances, probe),
                                           "step3-rank layer=" + std::to_string(lb.layer_index));
        rank.push_back({lb.layer_index, ev.accuracy});
    }
    std::stable_sort(rank.begin(), rank.end(), [](const LayerResilience& a, const LayerResilience& b) {
        if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
        return a.layer_index < b.layer_index;
    });
    for (std::size_t k = 0; k < rank.size(); ++k) {
        const int layer = rank[k].layer_index;
        zmap[layer] = 2;
        const Evaluation ev = ctx.evaluate(materialize_balanced(balances, zmap),
                                           "step3 prefix=" + std::to_string(k + 1));
        if (!ev.valid) {
            zmap.erase(layer);
            break;
        }
        r.z2_layers.push_back(layer);
    }

    // Step 4: stage the rest at z=1, then run the three demotion sweeps, each
    // starting from the staged map. Every valid configuration is retained.
    std::map<int, int> staged = zmap;
    for (const LayerBalance& lb : balances)
        if (!staged.count(lb.layer_index)) staged[lb.layer_index] = 1;

    std::set<std::string> seen;
    std::vector<MappingSolution> retained;
    const auto consider = [&](const ModeAssignment& a, const Evaluation& ev) {
        if (!ev.valid) return;
        if (!seen.insert(a.serialize("")).second) return;
        retained.push_back(ctx.make_solution(a, ev));
    };

    {
        const ModeAssignment a = materialize_balanced(balances, staged);
        consider(a, ctx.evaluate(a, "step4 staged"));
    }
    {
        std::map<int, int> cur = staged;
        for (auto it = r.z3_layers.rbegin(); it != r.z3_layers.rend(); ++it) {
            cur[*it] = 2;
            const ModeAssignment a = materialize_balanced(balances, cur);
            consider(a, ctx.evaluate(a, "step4a demote=" + std::to_string(*it)));
        }
    }
    {
        std::map<int, int> cur = staged;
        for (auto it = r.z2_layers.rbegin(); it != r.z2_layers.rend(); ++it) {
            cur[*it] = 1;
            const ModeAssignment a = materialize_balanced(balances, cur);
            consider(a, ctx.evaluate(a, "step4b demote=" + std::to_string(*it)));
        }
    }
    {
        std::map<int, int> cur = staged;
        for (auto it = r.z3_layers.rbegin(); it != r.z3_layers.rend(); ++it) {
            cur[*it] = 1;
            const ModeAssignment a = materialize_balanced(balances, cur);
            consider(a, ctx.evaluate(a, "step4c demote=" + std::to_string(*it)));
        }
    }

    // Step 5: graft LDM-partitioned residues onto every retained mapping,
    // escalating the residue z. Deduplication keeps residue-free models from
    // re-adding their own base.
    std::vector<MappingSolution> all = retained;
    for (const MappingSolution& base : retained) {
        for (int zr = 1; zr <= 3; ++zr) {
            const ModeAssignment a = apply_residues(base.assignment, balances, zr);
            const std::string key = a.serialize("");
            if (seen.count(key)) continue;
            const Evaluation ev = ctx.evaluate(a, "step5 z=" + std::to_string(zr));
            if (!ev.valid) continue;
            seen.insert(key);
            all.push_back(ctx.make_solution(a, ev));
        }
    }

    finalize(r, std::move(all), ctx);
    return r;
}

PipelineResult run_fbs(SearchContext& ctx) {
    PipelineResult r;
    std::set<std::string> seen;
    std::vector<MappingSolution> all;
    for (int z : {3, 2, 1}) {
        const ModeAssignment a = fbs_assignment(ctx.model(), z);
        const Evaluation ev = ctx.evaluate(a, "fbs z=" + std::to_string(z));
        if (!ev.valid) continue;
        if (!seen.insert(a.serialize("")).second) continue;
        all.push_back(ctx.make_solution(a, ev));
    }
    finalize(r, std::move(all), ctx);
    return r;
}

}  // namespace

PipelineResult run_pipeline(const QuantModel& model, const Dataset& dataset,
                            const PipelineConfig& config) {
    if (!(config.threshold_pp > 0)) throw config_error("accuracy-drop threshold must be positive");
    if (config.subset < 0) throw config_error("subset size must be non-negative");
    config.energy.validate();
    if (approximable_layers(model).empty())
        throw config_error("model has no layers that take approximate modes");

    SearchContext ctx(model, dataset, config);
    if (config.strategy == Strategy::Fbs) return run_fbs(ctx);
    const std::vector<LayerBalance> balances = balance_model(model);
    return run_five_step(ctx, balances);
}

}  // namespace pnax
