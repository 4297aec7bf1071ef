#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pnax/assignment.hpp"
#include "pnax/dataset.hpp"
#include "pnax/energy.hpp"
#include "pnax/error_analysis.hpp"
#include "pnax/model.hpp"
#include "pnax/rational.hpp"

namespace pnax {

// Filter-oriented error balancing: per distinct weight value with count c,
// floor(c/2) occurrences go to PE, floor(c/2) to NE, and an odd remainder
// stays exact and lands on the residue list. Occurrences are bound in
// ascending position order (PE block first, then NE, then the ZE leftover).
struct FilterBalance {
    std::vector<ApproxMode> modes;             // one per weight position
    std::vector<std::uint8_t> residue_values;  // position-ascending
    std::vector<int> residue_positions;
};

FilterBalance balance_filter(std::span<const std::uint8_t> weights, int z);

// Balance structure of every approximable layer (computed once; the PE/NE/ZE
// split does not depend on z).
struct LayerBalance {
    int layer_index = -1;
    int filters = 0;
    int positions = 0;
    std::vector<FilterBalance> per_filter;
};

std::vector<LayerBalance> balance_model(const QuantModel& model);

// Assignment with each listed layer balanced at its z; layers absent from
// layer_z stay fully exact. Residue positions stay ZE.
ModeAssignment materialize_balanced(const std::vector<LayerBalance>& balances,
                                    const std::map<int, int>& layer_z);

// Copy of `base` with every filter's residues split by LDM and mapped at
// residue_z: larger-sum side to PE, the other to NE.
ModeAssignment apply_residues(const ModeAssignment& base,
                              const std::vector<LayerBalance>& balances, int residue_z);

// Whole-multiset LDM per filter at a single z (the filter-balanced-sets
// baseline): larger-sum side to PE, the other to NE, no residues.
ModeAssignment fbs_assignment(const QuantModel& model, int z);

// Predicted accumulated-error moments of one filter's weight row under an
// assignment (weights paired with their modes).
struct FilterMoments {
    int layer_index = 0;
    int filter = 0;
    MomentStats stats;
};

std::vector<FilterMoments> per_filter_error_stats(const QuantModel& model,
                                                  const ModeAssignment& assignment);

enum class Strategy { FiveStep, Fbs };

Strategy parse_strategy(const std::string& name);  // "five-step" | "fbs"
std::string strategy_name(Strategy s);

struct PipelineConfig {
    double threshold_pp = 1.0;  // accuracy-drop budget, percentage points
    Strategy strategy = Strategy::FiveStep;
    int subset = 0;  // evaluation subset size, 0 = whole dataset
    std::uint32_t seed = 0;
    int workers = 1;  // image-level parallelism only; results identical for any value
    EnergyTable energy = EnergyTable::defaults();
};

struct MappingSolution {
    ModeAssignment assignment;
    double measured_accuracy = 0.0;
    int correct = 0;
    double accuracy_drop_pp = 0.0;
    Rat predicted_mean;      // summed over all filters; exactly 0 before residues
    Rat predicted_variance;  // summed over all filters
    Rat energy_reduction;
};

struct SearchLogEntry {
    std::string step;  // which move produced this candidate
    std::uint64_t hash = 0;
    int approx_positions = 0;
    double accuracy = 0.0;
    double drop_pp = 0.0;
    double energy = 0.0;
    bool valid = false;
};

struct LayerResilience {
    int layer_index = 0;
    double accuracy = 0.0;
};

enum class PipelineStatus { Solved, NoSolution };

struct PipelineResult {
    PipelineStatus status = PipelineStatus::NoSolution;
    double baseline_accuracy = 0.0;
    int baseline_correct = 0;
    int eval_n = 0;
    MappingSolution best;                     // all-ZE fallback when NoSolution
    std::vector<MappingSolution> solutions;   // energy descending, ties by serialization
    std::vector<LayerResilience> resilience;  // five-step only, accuracy descending
    std::vector<int> z3_layers;               // five-step: step-2 prefix, promotion order
    std::vector<int> z2_layers;               // five-step: step-3 additions, promotion order
    std::vector<SearchLogEntry> log;
};

PipelineResult run_pipeline(const QuantModel& model, const Dataset& dataset,
                            const PipelineConfig& config);

}  // namespace pnax
