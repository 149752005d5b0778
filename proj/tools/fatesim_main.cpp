// fatesim - FSM app-model benchmark harness CLI
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fatesim/model.hpp"
#include "fatesim/report.hpp"
#include "fatesim/runner.hpp"
#include "fatesim/stats.hpp"
#include "fatesim/synthetic.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitUsage = 2;

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t comma = s.find(',', start);
        if (comma == std::string::npos) {
            if (start < s.size()) out.push_back(s.substr(start));
            break;
        }
        if (comma > start) out.push_back(s.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

// "--set ddpg.random_exploration=0.5" -> overrides["ddpg"]["random_exploration"] = 0.5
void apply_override(nlohmann::json& overrides, const std::string& spec) {
    std::size_t dot = spec.find('.');
    std::size_t eq = spec.find('=');
    if (dot == std::string::npos || eq == std::string::npos || eq < dot)
        throw std::invalid_argument("override must look like algo.knob=value: " + spec);
    std::string algo = spec.substr(0, dot);
    std::string knob = spec.substr(dot + 1, eq - dot - 1);
    std::string value = spec.substr(eq + 1);
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(value);
    } catch (const nlohmann::json::parse_error&) {
        parsed = value;  // plain string
    }
    overrides[algo][knob] = parsed;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void warn_desk_scale(int repetitions) {
    if (repetitions < 30)
        std::cerr << "warning: " << repetitions
                  << " repetitions is a desk-scale preset; statistical conclusions need 30+\n";
}

int cmd_run(fatesim::ExperimentConfig cfg) {
    warn_desk_scale(cfg.repetitions);
    fatesim::AppModel model = fatesim::resolve_model(cfg.model_source);
    fatesim::validate_experiment_config(cfg);
    std::vector<fatesim::RunOutcome> outcomes = fatesim::run_matrix(model, cfg, cfg.model_source);
    bool all_ok = fatesim::write_artifacts(cfg, cfg.model_source, outcomes);
    int failures = 0;
    for (const auto& o : outcomes)
        if (o.failed) ++failures;
    std::cout << "completed " << outcomes.size() - failures << "/" << outcomes.size()
              << " runs; artifacts in " << cfg.out_dir << "\n";
    if (failures) {
        for (const auto& o : outcomes)
            if (o.failed)
                std::cerr << "run " << o.record.algorithm << " seed " << o.record.seed
                          << " failed: " << o.error << "\n";
    }
    return all_ok ? kExitOk : kExitRunFailure;
}

int cmd_validate(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }
    try {
        fatesim::AppModel model = fatesim::parse_model(text);
        auto diags = fatesim::validate_model(model);
        for (const auto& d : diags)
            std::cout << (d.severity == fatesim::Diagnostic::Severity::Error ? "error: " : "warning: ")
                      << d.message << "\n";
        if (fatesim::has_errors(diags)) return kExitRunFailure;
        std::cout << "ok: " << model.nodes.size() << " nodes, pool of "
                  << model.string_pool.size() << " strings\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cout << "error: " << e.what() << "\n";
        return kExitRunFailure;
    }
}

int cmd_gen(const std::string& preset, const std::string& out_path, std::uint64_t seed) {
    auto cfg = fatesim::preset_by_name(preset);
    if (!cfg) {
        std::cerr << "unknown preset '" << preset << "'; available:\n";
        for (const auto& [name, c] : fatesim::list_presets()) std::cerr << "  " << name << "\n";
        return kExitUsage;
    }
    cfg->seed = seed;
    std::string text = fatesim::serialize_model(fatesim::generate(*cfg));
    if (out_path == "-") {
        std::cout << text;
    } else {
        fatesim::write_text_file(out_path, text);
        std::cout << "wrote " << out_path << "\n";
    }
    return kExitOk;
}

int cmd_stats(const std::string& in_dir, std::optional<double> alpha) {
    fatesim::ComparisonReport report = fatesim::report_from_directory(in_dir);
    if (alpha) {
        report = fatesim::compare(report.auc_by_algorithm, *alpha);
    }
    fatesim::write_text_file(std::filesystem::path(in_dir) / "report.json",
                             fatesim::report_to_json(report).dump(2) + "\n");
    fatesim::write_text_file(std::filesystem::path(in_dir) / "report.txt",
                             fatesim::render_report_text(report));
    std::cout << fatesim::render_report_text(report);
    return kExitOk;
}

int cmd_sweep(const std::string& grid_name, fatesim::ExperimentConfig cfg) {
    warn_desk_scale(cfg.repetitions);
    std::vector<fatesim::GridEntry> grid = fatesim::study1_grid(grid_name);
    fatesim::AppModel model = fatesim::resolve_model(cfg.model_source);

    std::map<std::string, std::vector<double>> auc_by_config;
    bool any_failed = false;
    std::uint64_t seed = cfg.base_seed;
    for (const fatesim::GridEntry& entry : grid) {
        fatesim::ExperimentConfig sub = cfg;
        sub.algorithms = {grid_name};
        sub.overrides = nlohmann::json{{grid_name, entry.overrides}};
        sub.base_seed = seed;
        seed += static_cast<std::uint64_t>(cfg.repetitions);
        sub.out_dir = (std::filesystem::path(cfg.out_dir) / entry.label).string();
        auto outcomes = fatesim::run_matrix(model, sub, cfg.model_source);
        if (!fatesim::write_artifacts(sub, cfg.model_source, outcomes)) any_failed = true;
        for (const auto& o : outcomes)
            if (!o.failed) auc_by_config[entry.label].push_back(fatesim::auc(o.record.coverage));
        std::cout << grid_name << " " << entry.label << " " << entry.overrides.dump() << " done\n";
    }
    if (cfg.repetitions >= 2) {
        fatesim::ComparisonReport report = fatesim::compare(auc_by_config, cfg.alpha);
        fatesim::write_text_file(std::filesystem::path(cfg.out_dir) / "sweep_report.json",
                                 fatesim::report_to_json(report).dump(2) + "\n");
        fatesim::write_text_file(std::filesystem::path(cfg.out_dir) / "sweep_report.txt",
                                 fatesim::render_report_text(report));
        std::cout << fatesim::render_report_text(report);
    }
    return any_failed ? kExitRunFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FSM app-model simulator and RL exploration benchmark"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run an algorithm matrix on a model");
    std::string run_preset, run_model, run_config_file, run_out, run_algos = "random,qlearn,ddpg,td3,sac";
    int run_reps = 30, run_steps = 4000, run_episode = 250, run_parallel = 0;
    std::uint64_t run_seed = 0;
    double run_alpha = 0.05;
    std::vector<std::string> run_overrides;
    run->add_option("--preset", run_preset, "suite preset, e.g. social/20_str");
    run->add_option("--model", run_model, "model JSON file");
    run->add_option("--config", run_config_file, "experiment config JSON file");
    run->add_option("--algos", run_algos, "comma-separated algorithm list");
    run->add_option("--reps", run_reps, "repetitions per algorithm");
    run->add_option("--seed", run_seed, "base seed (run i uses base_seed + i)");
    run->add_option("--steps", run_steps, "environment steps per run");
    run->add_option("--episode-len", run_episode, "steps per episode");
    run->add_option("--out", run_out, "output directory");
    run->add_option("--parallel", run_parallel, "worker threads (0 = hardware)");
    run->add_option("--alpha", run_alpha, "significance level");
    run->add_option("--set", run_overrides, "hyperparameter override algo.knob=value");

    // validate
    auto* validate = app.add_subcommand("validate", "validate a model file");
    std::string validate_path;
    validate->add_option("model", validate_path, "model JSON file")->required();

    // gen
    auto* gen = app.add_subcommand("gen", "emit a suite preset as model JSON");
    std::string gen_preset, gen_out = "-";
    std::uint64_t gen_seed = 1;
    gen->add_option("--preset", gen_preset, "preset name")->required();
    gen->add_option("--out", gen_out, "output file ('-' for stdout)");
    gen->add_option("--seed", gen_seed, "string-pool generation seed");

    // stats
    auto* stats = app.add_subcommand("stats", "recompute the comparison report from stored runs");
    std::string stats_dir;
    double stats_alpha = -1.0;
    stats->add_option("--in", stats_dir, "directory with summary.json + trace CSVs")->required();
    stats->add_option("--alpha", stats_alpha, "override significance level");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a Study-1 hyperparameter grid");
    std::string sweep_grid, sweep_preset, sweep_out = "fatesim-sweep";
    int sweep_reps = 60, sweep_steps = 4000, sweep_episode = 250, sweep_parallel = 0;
    std::uint64_t sweep_seed = 0;
    sweep->add_option("--grid", sweep_grid, "one of: ddpg, td3, sac, qlearn")->required();
    sweep->add_option("--preset", sweep_preset, "suite preset or model file")->required();
    sweep->add_option("--reps", sweep_reps, "repetitions per configuration");
    sweep->add_option("--seed", sweep_seed, "base seed");
    sweep->add_option("--steps", sweep_steps, "environment steps per run");
    sweep->add_option("--episode-len", sweep_episode, "steps per episode");
    sweep->add_option("--out", sweep_out, "output directory");
    sweep->add_option("--parallel", sweep_parallel, "worker threads (0 = hardware)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) {
            fatesim::ExperimentConfig cfg;
            if (!run_config_file.empty())
                cfg = fatesim::config_from_json(nlohmann::json::parse(read_file(run_config_file)));
            if (run->count("--preset")) cfg.model_source = run_preset;
            if (run->count("--model")) cfg.model_source = run_model;
            if (run->count("--algos") || cfg.algorithms.empty())
                cfg.algorithms = split_csv(run_algos);
            if (run->count("--reps")) cfg.repetitions = run_reps;
            if (run->count("--seed")) cfg.base_seed = run_seed;
            if (run->count("--steps")) cfg.steps = run_steps;
            if (run->count("--episode-len")) cfg.episode_length = run_episode;
            if (run->count("--out")) cfg.out_dir = run_out;
            if (run->count("--parallel")) cfg.parallelism = run_parallel;
            if (run->count("--alpha")) cfg.alpha = run_alpha;
            for (const std::string& o : run_overrides) apply_override(cfg.overrides, o);
            if (const char* env_out = std::getenv("FATESIM_OUT")) cfg.out_dir = env_out;
            if (cfg.model_source.empty())
                throw std::invalid_argument("one of --preset, --model or --config is required");
            return cmd_run(std::move(cfg));
        }
        if (validate->parsed()) return cmd_validate(validate_path);
        if (gen->parsed()) return cmd_gen(gen_preset, gen_out, gen_seed);
        if (stats->parsed())
            return cmd_stats(stats_dir,
                             stats_alpha >= 0 ? std::optional<double>(stats_alpha) : std::nullopt);
        if (sweep->parsed()) {
            fatesim::ExperimentConfig cfg;
            cfg.model_source = sweep_preset;
            cfg.repetitions = sweep_reps;
            cfg.base_seed = sweep_seed;
            cfg.steps = sweep_steps;
            cfg.episode_length = sweep_episode;
            cfg.out_dir = sweep_out;
            cfg.parallelism = sweep_parallel;
            if (const char* env_out = std::getenv("FATESIM_OUT")) cfg.out_dir = env_out;
            return cmd_sweep(sweep_grid, std::move(cfg));
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRunFailure;
    }
    return kExitUsage;
}
