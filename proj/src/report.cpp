#include "pnax/report.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pnax/errors.hpp"

namespace pnax {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path.string());
    return out;
}

void dump_json(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

std::string run_params_comment(const RunParams& p) {
    return "# model=" + p.model_name + " strategy=" + p.strategy +
           " threshold_pp=" + fmt_double(p.threshold_pp) + " subset=" + std::to_string(p.subset) +
           " seed=" + std::to_string(p.seed);
}

}  // namespace

std::string format_hash(std::uint64_t hash) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, hash);
    return buf;
}

void write_baseline_report(const std::filesystem::path& path, const std::string& model_name,
                           int subset, std::uint32_t seed, const std::vector<int>& subset_indices,
                           const EvalResult& eval, const Dataset& dataset) {
    int classes = 0;
    for (std::uint8_t l : dataset.labels) classes = std::max(classes, l + 1);

    std::vector<int> class_n(classes, 0), class_correct(classes, 0);
    for (std::size_t k = 0; k < subset_indices.size(); ++k) {
        const int label = dataset.labels[subset_indices[k]];
        ++class_n[label];
        if (eval.predictions[k] == label) ++class_correct[label];
    }

    json per_class = json::array();
    for (int c = 0; c < classes; ++c) {
        per_class.push_back({{"label", c},
                             {"n", class_n[c]},
                             {"correct", class_correct[c]},
                             {"accuracy", class_n[c] ? double(class_correct[c]) / class_n[c] : 0.0}});
    }

    json j{{"format", "pnax-baseline-report"},
           {"version", 1},
           {"model", model_name},
           {"subset", subset},
           {"seed", seed},
           {"n", eval.n},
           {"correct", eval.correct},
           {"accuracy", eval.accuracy},
           {"per_class", per_class},
           {"subset_indices", subset_indices},
           {"predictions", eval.predictions}};
    dump_json(path, j);
}

namespace {

json solution_entry(const MappingSolution& s) {
    return json{{"hash", format_hash(s.assignment.stable_hash())},
                {"approx_positions", static_cast<int>(s.assignment.approx_count())},
                {"correct", s.correct},
                {"measured_accuracy", s.measured_accuracy},
                {"accuracy_drop_pp", s.accuracy_drop_pp},
                {"energy_reduction", to_double(s.energy_reduction)},
                {"energy_reduction_exact", to_string(s.energy_reduction)},
                {"predicted_mean", to_string(s.predicted_mean)},
                {"predicted_variance", to_string(s.predicted_variance)}};
}

}  // namespace

void write_solution_json(const std::filesystem::path& path, const RunParams& params,
                         const PipelineResult& result, const std::string& assignment_file) {
    json solutions = json::array();
    for (const MappingSolution& s : result.solutions) solutions.push_back(solution_entry(s));

    json resilience = json::array();
    for (const LayerResilience& lr : result.resilience)
        resilience.push_back({{"layer", lr.layer_index}, {"accuracy", lr.accuracy}});

    json best = solution_entry(result.best);
    best["assignment_file"] = assignment_file;

    json j{{"format", "pnax-solution"},
           {"version", 1},
           {"model", params.model_name},
           {"strategy", params.strategy},
           {"threshold_pp", params.threshold_pp},
           {"subset", params.subset},
           {"seed", params.seed},
           {"baseline",
            {{"n", result.eval_n},
             {"correct", result.baseline_correct},
             {"accuracy", result.baseline_accuracy}}},
           {"status", result.status == PipelineStatus::Solved ? "solved" : "no-solution"},
           {"best", best},
           {"solutions", solutions},
           {"resilience", resilience},
           {"z3_layers", result.z3_layers},
           {"z2_layers", result.z2_layers}};
    dump_json(path, j);
}

void write_pareto_csv(const std::filesystem::path& path, const RunParams& params,
                      const std::vector<MappingSolution>& solutions) {
    auto out = open_out(path);
    out << "# pnax-csv v1 pareto\n" << run_params_comment(params) << "\n";
    out << "rank,hash,approx_positions,correct,accuracy,drop_pp,energy,energy_exact,"
           "predicted_mean,predicted_variance\n";
    int rank = 1;
    for (const MappingSolution& s : solutions) {
        out << rank++ << ',' << format_hash(s.assignment.stable_hash()) << ','
            << s.assignment.approx_count() << ',' << s.correct << ','
            << fmt_double(s.measured_accuracy) << ',' << fmt_double(s.accuracy_drop_pp) << ','
            << fmt_double(to_double(s.energy_reduction)) << ',' << to_string(s.energy_reduction)
            << ',' << to_string(s.predicted_mean) << ',' << to_string(s.predicted_variance)
            << '\n';
    }
}

void write_search_log_csv(const std::filesystem::path& path, const RunParams& params,
                          const std::vector<SearchLogEntry>& log) {
    auto out = open_out(path);
    out << "# pnax-csv v1 search-log\n" << run_params_comment(params) << "\n";
    out << "step,hash,approx_positions,accuracy,drop_pp,energy,valid\n";
    for (const SearchLogEntry& e : log) {
        out << e.step << ',' << format_hash(e.hash) << ',' << e.approx_positions << ','
            << fmt_double(e.accuracy) << ',' << fmt_double(e.drop_pp) << ','
            << fmt_double(e.energy) << ',' << (e.valid ? 1 : 0) << '\n';
    }
}

void write_energy_by_threshold_csv(const std::filesystem::path& path,
                                   const std::string& model_name, int subset, std::uint32_t seed,
                                   const std::vector<ThresholdOutcome>& rows) {
    auto out = open_out(path);
    out << "# pnax-csv v1 energy-by-threshold\n";
    out << "# model=" << model_name << " subset=" << subset << " seed=" << seed << "\n";
    out << "threshold_pp,strategy,status,energy,drop_pp\n";
    for (const ThresholdOutcome& r : rows) {
        out << fmt_double(r.threshold_pp) << ',' << r.strategy << ','
            << (r.solved ? "solved" : "no-solution") << ',' << fmt_double(r.energy) << ','
            << fmt_double(r.drop_pp) << '\n';
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

}  // namespace

void write_energy_chart_svg(const std::filesystem::path& csv_path,
                            const std::filesystem::path& svg_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw input_error("cannot read " + csv_path.string());

    std::string line, params_comment;
    std::vector<ThresholdOutcome> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# model=", 0) == 0) params_comment = line.substr(2);
            continue;
        }
        if (!header_seen) {
            if (line != "threshold_pp,strategy,status,energy,drop_pp")
                throw schema_error(csv_path.string() + ": unexpected column header");
            header_seen = true;
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 5) throw schema_error(csv_path.string() + ": malformed row");
        ThresholdOutcome r;
        r.threshold_pp = std::stod(f[0]);
        r.strategy = f[1];
        r.solved = f[2] == "solved";
        r.energy = std::stod(f[3]);
        r.drop_pp = std::stod(f[4]);
        rows.push_back(r);
    }
    if (!header_seen) throw schema_error(csv_path.string() + ": missing column header");
    if (rows.empty()) throw input_error(csv_path.string() + ": no data rows to chart");

    bool multi_strategy = false;
    for (const auto& r : rows) multi_strategy = multi_strategy || r.strategy != rows[0].strategy;

    const double width = 640, height = 400;
    const double left = 64, right = 20, top = 48, bottom = 56;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double ymax_pct = 5.0;
    for (const auto& r : rows) ymax_pct = std::max(ymax_pct, r.energy * 100.0);
    ymax_pct = std::ceil(ymax_pct / 5.0) * 5.0;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "  <desc>multiplier energy reduction by accuracy-drop threshold; "
        << svg_escape(params_comment) << "</desc>\n";
    svg << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
    svg << "  <text x=\"" << width / 2
        << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
        << "Multiplier energy reduction vs. accuracy-drop threshold"
        << (multi_strategy ? "" : " (" + svg_escape(rows[0].strategy) + ")") << "</text>\n";

    // horizontal grid with y labels, 5 bands
    for (int g = 0; g <= 5; ++g) {
        const double val = ymax_pct * g / 5.0;
        const double y = top + plot_h * (1.0 - double(g) / 5.0);
        svg << "  <line x1=\"" << left << "\" y1=\"" << fmt1(y) << "\" x2=\"" << left + plot_w
            << "\" y2=\"" << fmt1(y) << "\" stroke=\"" << (g == 0 ? "#404040" : "#d8d8d8")
            << "\" stroke-width=\"1\"/>\n";
        svg << "  <text x=\"" << left - 8 << "\" y=\"" << fmt1(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt1(val)
            << "%</text>\n";
    }

    const double slot = plot_w / rows.size();
    const double bar_w = slot * 0.55;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const ThresholdOutcome& r = rows[i];
        const double cx = left + slot * (i + 0.5);
        const double bar_h = r.solved ? plot_h * (r.energy * 100.0 / ymax_pct) : 0.0;
        const double x = cx - bar_w / 2;
        const double y = top + plot_h - bar_h;
        svg << "  <rect x=\"" << fmt1(x) << "\" y=\"" << fmt1(y) << "\" width=\"" << fmt1(bar_w)
            << "\" height=\"" << fmt1(bar_h) << "\" fill=\""
            << (r.solved ? "#4878a8" : "#c0c0c0") << "\"/>\n";
        svg << "  <text x=\"" << fmt1(cx) << "\" y=\"" << fmt1(y - 6)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << (r.solved ? fmt1(r.energy * 100.0) + "%" : "no solution") << "</text>\n";
        std::string label = fmt_double(r.threshold_pp) + "%";
        if (multi_strategy) label += " " + r.strategy;
        svg << "  <text x=\"" << fmt1(cx) << "\" y=\"" << fmt1(top + plot_h + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << svg_escape(label) << "</text>\n";
    }
    svg << "  <text x=\"" << width / 2 << "\" y=\"" << height - 14
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << "accuracy-drop threshold (percentage points)</text>\n";
    svg << "</svg>\n";

    auto out = open_out(svg_path);
    out << svg.str();
}

void write_verify_report(const std::filesystem::path& path, const VerifyReport& r) {
    json per_layer = json::array();
    for (const LayerPrediction& lp : r.per_layer)
        per_layer.push_back({{"layer", lp.layer_index},
                             {"predicted_mean", to_string(lp.mean)},
                             {"predicted_variance", to_string(lp.variance)}});

    json comparison;
    if (r.checked_against_solution) {
        comparison = json{{"checked", true}, {"matches", r.matches}, {"mismatches", r.mismatches}};
    } else {
        comparison = json{{"checked", false}};
    }

    json j{{"format", "pnax-verify-report"},
           {"version", 1},
           {"model", r.model_name},
           {"subset", r.subset},
           {"seed", r.seed},
           {"n", r.n},
           {"assignment_hash", format_hash(r.assignment_hash)},
           {"approx_positions", r.approx_positions},
           {"baseline", {{"correct", r.baseline_correct}, {"accuracy", r.baseline_accuracy}}},
           {"measured", {{"correct", r.correct}, {"accuracy", r.accuracy}, {"drop_pp", r.drop_pp}}},
           {"energy_reduction", to_double(r.energy)},
           {"energy_reduction_exact", to_string(r.energy)},
           {"per_layer", per_layer},
           {"comparison", comparison}};
    dump_json(path, j);
}

}  // namespace pnax
