#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pnax/assignment.hpp"
#include "pnax/dataset.hpp"
#include "pnax/energy.hpp"
#include "pnax/errors.hpp"
#include "pnax/inference.hpp"
#include "pnax/model.hpp"
#include "pnax/optimizer.hpp"
#include "pnax/quantize.hpp"
#include "pnax/report.hpp"

namespace fs = std::filesystem;

namespace {

// Exit codes: 0 success, 2 no solution / replay mismatch, 3 bad input or
// config, 4 violated internal invariant.
constexpr int kExitOk = 0;
constexpr int kExitNoSolution = 2;
constexpr int kExitInput = 3;
constexpr int kExitInternal = 4;

struct CommonOpts {
    std::string model_path;
    std::string dataset_dir;
    int subset = 0;
    std::uint32_t seed = 0;
    int workers = 1;
    std::string energy_table_path;
    std::string out_dir = ".";
};

void add_eval_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--model", o.model_path, "quantized model manifest (JSON)")->required();
    cmd->add_option("--dataset", o.dataset_dir,
                    "directory containing images.idx and labels.idx")
        ->required();
    cmd->add_option("--subset", o.subset, "evaluation subset size (0 = whole set)");
    cmd->add_option("--seed", o.seed, "subset selection seed");
    cmd->add_option("--workers", o.workers,
                    "threads for image-level evaluation (never affects results)");
    cmd->add_option("--out", o.out_dir, "output directory");
}

pnax::Dataset load_dataset_dir(const std::string& dir) {
    return pnax::load_dataset(fs::path(dir) / "images.idx", fs::path(dir) / "labels.idx");
}

pnax::EnergyTable load_energy_table(const std::string& path) {
    return path.empty() ? pnax::EnergyTable::defaults() : pnax::EnergyTable::load(path);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

int cmd_quantize(const std::string& float_path, const std::string& out_manifest) {
    const pnax::FloatModel fm = pnax::load_float_model(float_path);
    const pnax::QuantModel qm = pnax::quantize_model(fm);
    if (const fs::path dir = fs::path(out_manifest).parent_path(); !dir.empty())
        fs::create_directories(dir);
    pnax::save_quant_model(qm, out_manifest);
    std::cout << "quantized '" << qm.name << "' (" << qm.layers.size() << " layers) -> "
              << out_manifest << "\n";
    return kExitOk;
}

int cmd_evaluate(const CommonOpts& o) {
    const pnax::QuantModel model = pnax::load_quant_model(o.model_path);
    const pnax::Dataset dataset = load_dataset_dir(o.dataset_dir);
    const std::vector<int> subset = pnax::select_subset(dataset.count, o.subset, o.seed);
    const pnax::EvalResult eval = pnax::evaluate_accuracy(
        model, dataset, pnax::compile_assignment(model, {}), subset, o.workers);

    fs::create_directories(o.out_dir);
    const fs::path report = fs::path(o.out_dir) / "baseline.json";
    pnax::write_baseline_report(report, model.name, o.subset, o.seed, subset, eval, dataset);
    std::cout << "baseline: " << eval.correct << "/" << eval.n << " correct ("
              << fmt_double(eval.accuracy * 100.0) << "%), report " << report.string() << "\n";
    return kExitOk;
}

int cmd_map(const CommonOpts& o, std::vector<double> thresholds, const std::string& strategy) {
    const pnax::QuantModel model = pnax::load_quant_model(o.model_path);
    const pnax::Dataset dataset = load_dataset_dir(o.dataset_dir);

    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    pnax::PipelineConfig pc;
    pc.strategy = pnax::parse_strategy(strategy);
    pc.subset = o.subset;
    pc.seed = o.seed;
    pc.workers = o.workers;
    pc.energy = load_energy_table(o.energy_table_path);

    fs::create_directories(o.out_dir);
    std::vector<pnax::ThresholdOutcome> outcomes;
    bool any_unsolved = false;
    for (double t : thresholds) {
        pc.threshold_pp = t;
        const pnax::PipelineResult result = pnax::run_pipeline(model, dataset, pc);

        const fs::path dir = fs::path(o.out_dir) / ("thr_" + fmt_double(t));
        fs::create_directories(dir);
        result.best.assignment.save(dir / "best.assignment", model.name);

        pnax::RunParams params{model.name, strategy, t, o.subset, o.seed};
        pnax::write_solution_json(dir / "best_solution.json", params, result, "best.assignment");
        pnax::write_pareto_csv(dir / "pareto.csv", params, result.solutions);
        pnax::write_search_log_csv(dir / "search_log.csv", params, result.log);

        const bool solved = result.status == pnax::PipelineStatus::Solved;
        any_unsolved = any_unsolved || !solved;
        outcomes.push_back({t, strategy, solved,
                            solved ? pnax::to_double(result.best.energy_reduction) : 0.0,
                            solved ? result.best.accuracy_drop_pp : 0.0});
        if (solved) {
            std::cout << "threshold " << fmt_double(t) << "%: "
                      << fmt_double(pnax::to_double(result.best.energy_reduction) * 100.0)
                      << "% energy reduction at " << fmt_double(result.best.accuracy_drop_pp)
                      << "pp drop (" << result.solutions.size() << " valid mappings)\n";
        } else {
            std::cout << "threshold " << fmt_double(t)
                      << "%: no valid mapping, wrote all-exact fallback\n";
        }
    }

    const fs::path csv = fs::path(o.out_dir) / "energy_by_threshold.csv";
    pnax::write_energy_by_threshold_csv(csv, model.name, o.subset, o.seed, outcomes);
    pnax::write_energy_chart_svg(csv, fs::path(o.out_dir) / "energy_chart.svg");
    return any_unsolved ? kExitNoSolution : kExitOk;
}

int cmd_verify(const CommonOpts& o, const std::string& assignment_path,
               std::string solution_path, bool subset_given, bool seed_given) {
    const pnax::QuantModel model = pnax::load_quant_model(o.model_path);
    const pnax::Dataset dataset = load_dataset_dir(o.dataset_dir);
    const pnax::ModeAssignment assignment = pnax::ModeAssignment::load(assignment_path);

    // a sibling best_solution.json is picked up automatically
    if (solution_path.empty()) {
        const fs::path sibling = fs::path(assignment_path).parent_path() / "best_solution.json";
        if (fs::exists(sibling)) solution_path = sibling.string();
    }

    nlohmann::json stored;
    if (!solution_path.empty()) {
        std::ifstream in(solution_path, std::ios::binary);
        if (!in) throw pnax::input_error("cannot open solution file: " + solution_path);
        try {
            in >> stored;
        } catch (const nlohmann::json::exception& e) {
            throw pnax::schema_error("solution file " + solution_path + ": " + e.what());
        }
        if (stored.value("format", "") != "pnax-solution" || stored.value("version", 0) != 1)
            throw pnax::schema_error("solution file " + solution_path +
                                     ": expected format pnax-solution version 1");
    }

    pnax::VerifyReport rep;
    rep.model_name = model.name;
    rep.subset = o.subset;
    rep.seed = o.seed;
    if (!stored.is_null()) {
        // replay under the stored evaluation config unless overridden
        if (!subset_given) rep.subset = stored.value("subset", 0);
        if (!seed_given) rep.seed = stored.value("seed", 0u);
    }

    pnax::CompiledAssignment compiled;
    try {
        compiled = pnax::compile_assignment(model, assignment);
    } catch (const pnax::input_error& e) {
        throw pnax::schema_error(std::string("assignment does not fit model: ") + e.what());
    }

    const std::vector<int> subset = pnax::select_subset(dataset.count, rep.subset, rep.seed);
    const pnax::EvalResult base = pnax::evaluate_accuracy(
        model, dataset, pnax::compile_assignment(model, {}), subset, o.workers);
    const pnax::EvalResult eval =
        pnax::evaluate_accuracy(model, dataset, compiled, subset, o.workers);

    rep.n = eval.n;
    rep.assignment_hash = assignment.stable_hash();
    rep.approx_positions = static_cast<int>(assignment.approx_count());
    rep.baseline_correct = base.correct;
    rep.baseline_accuracy = base.accuracy;
    rep.correct = eval.correct;
    rep.accuracy = eval.accuracy;
    rep.drop_pp = (base.correct - eval.correct) * 100.0 / eval.n;
    rep.energy = pnax::energy_of_assignment(model, compiled, load_energy_table(o.energy_table_path),
                                            pnax::mult_count_profile(model));

    // per-layer sums of the per-filter predicted moments
    for (const pnax::FilterMoments& fm : pnax::per_filter_error_stats(model, assignment)) {
        if (rep.per_layer.empty() || rep.per_layer.back().layer_index != fm.layer_index)
            rep.per_layer.push_back({fm.layer_index, pnax::Rat(0), pnax::Rat(0)});
        rep.per_layer.back().mean += fm.stats.mean;
        rep.per_layer.back().variance += fm.stats.variance;
    }

    if (!stored.is_null()) {
        rep.checked_against_solution = true;
        auto mismatch = [&rep](const std::string& what) { rep.mismatches.push_back(what); };
        if (stored.value("model", "") != model.name)
            mismatch("model name: stored '" + stored.value("model", "") + "', loaded '" +
                     model.name + "'");
        const auto& best = stored.at("best");
        if (best.value("hash", "") != pnax::format_hash(rep.assignment_hash))
            mismatch("assignment hash: stored " + best.value("hash", "") + ", replayed " +
                     pnax::format_hash(rep.assignment_hash));
        if (best.value("correct", -1) != rep.correct)
            mismatch("correct count: stored " + std::to_string(best.value("correct", -1)) +
                     ", replayed " + std::to_string(rep.correct));
        if (stored.at("baseline").value("correct", -1) != rep.baseline_correct)
            mismatch("baseline correct count: stored " +
                     std::to_string(stored.at("baseline").value("correct", -1)) + ", replayed " +
                     std::to_string(rep.baseline_correct));
        if (best.value("energy_reduction_exact", "") != pnax::to_string(rep.energy))
            mismatch("energy reduction: stored " + best.value("energy_reduction_exact", "") +
                     ", replayed " + pnax::to_string(rep.energy));
        rep.matches = rep.mismatches.empty();
    }

    fs::create_directories(o.out_dir);
    const fs::path report = fs::path(o.out_dir) / "verify_report.json";
    pnax::write_verify_report(report, rep);

    std::cout << "replayed " << rep.correct << "/" << rep.n << " correct ("
              << fmt_double(rep.drop_pp) << "pp drop), energy "
              << fmt_double(pnax::to_double(rep.energy) * 100.0) << "%, report "
              << report.string() << "\n";
    if (rep.checked_against_solution) {
        if (rep.matches) {
            std::cout << "solution file matches exactly\n";
        } else {
            for (const std::string& m : rep.mismatches) std::cout << "MISMATCH " << m << "\n";
            return kExitNoSolution;
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bit-accurate simulator and mode-mapping optimizer for the three-mode "
                 "(exact / positive-error / negative-error) approximate multiplier"};
    app.require_subcommand(1);

    std::string float_path, quant_out;
    CLI::App* quantize = app.add_subcommand(
        "quantize", "8-bit post-training quantization of a calibrated float model");
    quantize->add_option("--float-model", float_path, "float model manifest (JSON)")->required();
    quantize->add_option("--out", quant_out, "output manifest path")->required();

    CommonOpts eval_opts;
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "measure baseline accuracy and write golden predictions");
    add_eval_flags(evaluate, eval_opts);

    CommonOpts map_opts;
    std::vector<double> thresholds;
    std::string strategy = "five-step";
    CLI::App* map_cmd = app.add_subcommand(
        "map", "search mode assignments that hold the accuracy drop within a threshold");
    add_eval_flags(map_cmd, map_opts);
    map_cmd->add_option("--threshold", thresholds,
                        "accuracy-drop thresholds in percentage points (default 0.5 0.75 1.0)");
    map_cmd->add_option("--strategy", strategy, "five-step or fbs")
        ->check(CLI::IsMember({"five-step", "fbs"}));
    map_cmd->add_option("--energy-table", map_opts.energy_table_path,
                        "energy gain override file (JSON)");

    CommonOpts verify_opts;
    std::string assignment_path, solution_path;
    CLI::App* verify =
        app.add_subcommand("verify", "replay an assignment file and audit its stored metrics");
    add_eval_flags(verify, verify_opts);
    verify->add_option("--assignment", assignment_path, "assignment file to replay")->required();
    verify->add_option("--solution", solution_path,
                       "solution JSON to audit against (default: sibling best_solution.json)");
    verify->add_option("--energy-table", verify_opts.energy_table_path,
                       "energy gain override file (JSON)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (app.got_subcommand(quantize)) return cmd_quantize(float_path, quant_out);
        if (app.got_subcommand(evaluate)) return cmd_evaluate(eval_opts);
        if (app.got_subcommand(map_cmd)) {
            if (thresholds.empty()) thresholds = {0.5, 0.75, 1.0};
            return cmd_map(map_opts, thresholds, strategy);
        }
        if (app.got_subcommand(verify))
            return cmd_verify(verify_opts, assignment_path, solution_path,
                              verify->count("--subset") > 0, verify->count("--seed") > 0);
        return kExitInput;
    } catch (const pnax::internal_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const pnax::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const pnax::input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const pnax::schema_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
