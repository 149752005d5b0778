// fatesim/report.hpp - run artifacts: trace CSVs, summary JSON, comparison
// reports, and the coverage-over-steps SVG chart
#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fatesim/runner.hpp"
#include "fatesim/stats.hpp"

namespace fatesim {

// Shortest decimal form that round-trips, so reloaded CSVs reproduce the
// original doubles exactly.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string run_id(const RunRecord& rec) {
    return rec.algorithm + "-" + std::to_string(rec.seed);
}

inline std::string trace_csv_name(const RunRecord& rec) {
    return "trace_" + rec.algorithm + "_seed" + std::to_string(rec.seed) + ".csv";
}

inline void write_trace_csv(const std::filesystem::path& path, const RunRecord& rec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "run_id,step,episode,node,action_slot,string_index,mode,reward,coverage,crash_flag\n";
    const std::string id = run_id(rec);
    for (const TraceRow& row : rec.trace) {
        out << id << ',' << row.step << ',' << row.episode << ',' << row.node << ','
            << row.action.slot << ',' << row.action.string_index << ',' << row.action.mode << ','
            << format_double(row.reward) << ',' << format_double(row.coverage) << ','
            << (row.crash ? 1 : 0) << '\n';
    }
}

// Reads back the coverage column of a trace CSV.
inline std::vector<double> read_trace_coverage(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> coverage;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t start = 0;
        std::string field;
        for (int col = 0; col <= 8; ++col) {
            std::size_t comma = line.find(',', start);
            field = line.substr(start, comma - start);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        double v = 0.0;
        auto res = std::from_chars(field.data(), field.data() + field.size(), v);
        if (res.ec != std::errc{}) throw std::runtime_error("bad coverage field in " + path.string());
        coverage.push_back(v);
    }
    return coverage;
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["model"] = cfg.model_source;
    j["algorithms"] = cfg.algorithms;
    j["overrides"] = cfg.overrides;
    j["steps"] = cfg.steps;
    j["episode_length"] = cfg.episode_length;
    j["repetitions"] = cfg.repetitions;
    j["base_seed"] = cfg.base_seed;
    j["out_dir"] = cfg.out_dir;
    j["parallelism"] = cfg.parallelism;
    j["alpha"] = cfg.alpha;
    j["rewards"] = {{"gamma1", cfg.rewards.gamma1},
                    {"gamma2", cfg.rewards.gamma2},
                    {"gamma3", cfg.rewards.gamma3}};
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.model_source = j.value("model", cfg.model_source);
    cfg.algorithms = j.value("algorithms", cfg.algorithms);
    cfg.overrides = j.value("overrides", nlohmann::json::object());
    cfg.steps = j.value("steps", cfg.steps);
    cfg.episode_length = j.value("episode_length", cfg.episode_length);
    cfg.repetitions = j.value("repetitions", cfg.repetitions);
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.parallelism = j.value("parallelism", cfg.parallelism);
    cfg.alpha = j.value("alpha", cfg.alpha);
    if (j.contains("rewards")) {
        cfg.rewards.gamma1 = j["rewards"].value("gamma1", cfg.rewards.gamma1);
        cfg.rewards.gamma2 = j["rewards"].value("gamma2", cfg.rewards.gamma2);
        cfg.rewards.gamma3 = j["rewards"].value("gamma3", cfg.rewards.gamma3);
    }
    return cfg;
}

// summary.json: resolved config plus one entry per run (a failed run keeps
// its slot, marked with the error).
inline nlohmann::ordered_json summary_to_json(const ExperimentConfig& cfg,
                                              const std::string& preset_label,
                                              const std::vector<RunOutcome>& outcomes) {
    nlohmann::ordered_json j;
    j["config"] = config_to_json(cfg);
    j["preset"] = preset_label;
    j["runs"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const RunOutcome& o = outcomes[i];
        nlohmann::ordered_json r;
        r["run_index"] = i;
        r["algorithm"] = o.record.algorithm;
        r["seed"] = o.record.seed;
        if (o.failed) {
            r["failed"] = true;
            r["error"] = o.error;
        } else {
            r["failed"] = false;
            r["csv"] = trace_csv_name(o.record);
            r["auc"] = auc(o.record.coverage);
            r["final_coverage"] = o.record.coverage.back();
            r["episodes"] = o.record.episodes;
            r["unique_crashes"] = o.record.crashes.size();
            r["duration_seconds"] = o.record.duration_seconds;
        }
        j["runs"].push_back(std::move(r));
    }
    return j;
}

inline nlohmann::ordered_json report_to_json(const ComparisonReport& report) {
    nlohmann::ordered_json j;
    j["alpha"] = report.alpha;
    j["winner"] = report.winner;
    j["mean_auc"] = nlohmann::ordered_json::object();
    for (const auto& [name, mean] : report.mean_auc) j["mean_auc"][name] = mean;
    j["auc"] = nlohmann::ordered_json::object();
    for (const auto& [name, aucs] : report.auc_by_algorithm) j["auc"][name] = aucs;
    j["pairwise"] = nlohmann::ordered_json::array();
    for (const PairwiseComparison& pc : report.pairwise) {
        nlohmann::ordered_json p;
        p["algorithm"] = pc.algorithm;
        p["p_value"] = pc.p_value;
        p["significant"] = pc.significant;
        if (pc.effect) {
            p["a12"] = pc.effect->a12;
            p["magnitude"] = to_string(pc.effect->magnitude);
        }
        j["pairwise"].push_back(std::move(p));
    }
    return j;
}

inline std::string render_report_text(const ComparisonReport& report) {
    std::ostringstream out;
    out << "winner: " << report.winner << "  (alpha = " << report.alpha << ")\n";
    out << "algorithm      runs   mean AUC\n";
    for (const auto& [name, aucs] : report.auc_by_algorithm) {
        out << "  " << name;
        for (std::size_t i = name.size(); i < 13; ++i) out << ' ';
        out << aucs.size() << "     " << format_double(report.mean_auc.at(name));
        if (name == report.winner) out << "   <- winner";
        out << '\n';
    }
    out << "winner vs rest (Holm-Bonferroni corrected):\n";
    for (const PairwiseComparison& pc : report.pairwise) {
        out << "  vs " << pc.algorithm << ": p = " << format_double(pc.p_value);
        if (pc.significant && pc.effect) {
            out << "  significant, A12 = " << format_double(pc.effect->a12) << " ("
                << to_string(pc.effect->magnitude) << ")";
        } else {
            out << "  not significant";
        }
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Coverage-over-steps chart with a standard-error band per algorithm
// ---------------------------------------------------------------------------

inline std::string svg_coverage_chart(const std::vector<RunOutcome>& outcomes, int steps) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};
    // Per-algorithm mean and SEM over runs for each step.
    std::map<std::string, std::vector<const RunRecord*>> groups;
    for (const RunOutcome& o : outcomes)
        if (!o.failed) groups[o.record.algorithm].push_back(&o.record);

    const double width = 860, height = 520;
    const double left = 70, right = 30, top = 40, bottom = 60;
    const double plot_w = width - left - right, plot_h = height - top - bottom;
    auto x_of = [&](double step) { return left + step / std::max(1, steps - 1) * plot_w; };
    auto y_of = [&](double cov) { return top + (100.0 - cov) / 100.0 * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // Axes and grid.
    for (int g = 0; g <= 10; ++g) {
        double y = y_of(g * 10.0);
        svg << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + plot_w
            << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << g * 10 << "</text>\n";
    }
    for (int g = 0; g <= 8; ++g) {
        double sx = static_cast<double>(steps) * g / 8.0;
        svg << "<text x=\"" << x_of(sx) << "\" y=\"" << top + plot_h + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << static_cast<int>(sx)
            << "</text>\n";
    }
    svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 16
        << "\" text-anchor=\"middle\" font-size=\"13\">steps</text>\n";
    svg << "<text x=\"18\" y=\"" << top + plot_h / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
        << top + plot_h / 2 << ")\">activity coverage (%)</text>\n";

    int stride = std::max(1, steps / 800);
    int color = 0;
    double legend_y = top + 6;
    for (const auto& [name, runs] : groups) {
        const char* stroke = palette[color % 6];
        ++color;
        std::ostringstream mean_points, band;
        std::vector<std::pair<double, double>> upper, lower;
        for (int s = 0; s < steps; s += stride) {
            double sum = 0.0, sq = 0.0;
            for (const RunRecord* r : runs) {
                double c = r->coverage[static_cast<std::size_t>(s)];
                sum += c;
                sq += c * c;
            }
            double n = static_cast<double>(runs.size());
            double mean = sum / n;
            double var = std::max(0.0, sq / n - mean * mean);
            double sem = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
            mean_points << x_of(s) << ',' << y_of(mean) << ' ';
            upper.push_back({x_of(s), y_of(std::min(100.0, mean + sem))});
            lower.push_back({x_of(s), y_of(std::max(0.0, mean - sem))});
        }
        band << "M";
        for (const auto& [x, y] : upper) band << x << ',' << y << ' ';
        for (auto it = lower.rbegin(); it != lower.rend(); ++it)
            band << "L" << it->first << ',' << it->second << ' ';
        band << "Z";
        svg << "<path d=\"" << band.str() << "\" fill=\"" << stroke
            << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
        svg << "<polyline points=\"" << mean_points.str() << "\" fill=\"none\" stroke=\"" << stroke
            << "\" stroke-width=\"1.5\"/>\n";
        svg << "<rect x=\"" << left + plot_w - 130 << "\" y=\"" << legend_y - 9
            << "\" width=\"14\" height=\"4\" fill=\"" << stroke << "\"/>\n";
        svg << "<text x=\"" << left + plot_w - 110 << "\" y=\"" << legend_y
            << "\" font-size=\"12\">" << name << "</text>\n";
        legend_y += 18;
    }
    svg << "</svg>\n";
    return svg.str();
}

// ---------------------------------------------------------------------------
// Directory-level artifact round trip
// ---------------------------------------------------------------------------

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

// Writes all artifacts of a completed matrix into cfg.out_dir.
// Returns true when every run succeeded.
inline bool write_artifacts(const ExperimentConfig& cfg, const std::string& preset_label,
                            const std::vector<RunOutcome>& outcomes) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    bool all_ok = true;
    for (const RunOutcome& o : outcomes) {
        if (o.failed) {
            all_ok = false;
            continue;
        }
        write_trace_csv(fs::path(cfg.out_dir) / trace_csv_name(o.record), o.record);
    }
    write_text_file(fs::path(cfg.out_dir) / "summary.json",
                    summary_to_json(cfg, preset_label, outcomes).dump(2) + "\n");

    std::map<std::string, std::vector<double>> aucs;
    for (const RunOutcome& o : outcomes)
        if (!o.failed) aucs[o.record.algorithm].push_back(auc(o.record.coverage));
    bool comparable = aucs.size() >= 2;
    for (const auto& [name, list] : aucs)
        if (list.size() < 2) comparable = false;
    if (comparable) {
        ComparisonReport report = compare(aucs, cfg.alpha);
        write_text_file(fs::path(cfg.out_dir) / "report.json", report_to_json(report).dump(2) + "\n");
        write_text_file(fs::path(cfg.out_dir) / "report.txt", render_report_text(report));
    }
    write_text_file(fs::path(cfg.out_dir) / "coverage.svg", svg_coverage_chart(outcomes, cfg.steps));
    return all_ok;
}

// Rebuilds the comparison report from stored artifacts (the `stats` command).
inline ComparisonReport report_from_directory(const std::filesystem::path& dir) {
    std::ifstream in(dir / "summary.json");
    if (!in) throw std::runtime_error("no summary.json in " + dir.string());
    nlohmann::json summary = nlohmann::json::parse(in);
    double alpha = summary.at("config").value("alpha", 0.05);
    std::map<std::string, std::vector<double>> aucs;
    for (const auto& run : summary.at("runs")) {
        if (run.value("failed", false)) continue;
        std::vector<double> coverage = read_trace_coverage(dir / run.at("csv").get<std::string>());
        aucs[run.at("algorithm").get<std::string>()].push_back(auc(coverage));
    }
    return compare(aucs, alpha);
}

}  // namespace fatesim
