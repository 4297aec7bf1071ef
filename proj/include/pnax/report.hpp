#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pnax/inference.hpp"
#include "pnax/model.hpp"
#include "pnax/optimizer.hpp"

namespace pnax {

// Everything written here is replayable: no timestamps, no environment
// details, no worker counts. Identical runs must produce identical bytes.

struct RunParams {
    std::string model_name;
    std::string strategy;
    double threshold_pp = 0.0;
    int subset = 0;
    std::uint32_t seed = 0;
};

void write_baseline_report(const std::filesystem::path& path, const std::string& model_name,
                           int subset, std::uint32_t seed, const std::vector<int>& subset_indices,
                           const EvalResult& eval, const Dataset& dataset);

void write_solution_json(const std::filesystem::path& path, const RunParams& params,
                         const PipelineResult& result, const std::string& assignment_file);

void write_pareto_csv(const std::filesystem::path& path, const RunParams& params,
                      const std::vector<MappingSolution>& solutions);

void write_search_log_csv(const std::filesystem::path& path, const RunParams& params,
                          const std::vector<SearchLogEntry>& log);

struct ThresholdOutcome {
    double threshold_pp = 0.0;
    std::string strategy;
    bool solved = false;
    double energy = 0.0;   // best solution, 0 when unsolved
    double drop_pp = 0.0;  // best solution, 0 when unsolved
};

void write_energy_by_threshold_csv(const std::filesystem::path& path, const std::string& model_name,
                                   int subset, std::uint32_t seed,
                                   const std::vector<ThresholdOutcome>& rows);

// The chart is derived strictly from the CSV written above (re-read here), so
// chart and table can never disagree.
void write_energy_chart_svg(const std::filesystem::path& csv_path,
                            const std::filesystem::path& svg_path);

struct LayerPrediction {
    int layer_index = 0;
    Rat mean;
    Rat variance;
};

struct VerifyReport {
    std::string model_name;
    int subset = 0;
    std::uint32_t seed = 0;
    int n = 0;
    std::uint64_t assignment_hash = 0;
    int approx_positions = 0;
    int baseline_correct = 0;
    double baseline_accuracy = 0.0;
    int correct = 0;
    double accuracy = 0.0;
    double drop_pp = 0.0;
    Rat energy;
    std::vector<LayerPrediction> per_layer;
    bool checked_against_solution = false;
    bool matches = false;
    std::vector<std::string> mismatches;
};

void write_verify_report(const std::filesystem::path& path, const VerifyReport& report);

std::string format_hash(std::uint64_t hash);  // zero-padded 16-digit hex

}  // namespace pnax
