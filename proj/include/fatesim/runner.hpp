// fatesim/runner.hpp - seeded experiment runs and the benchmark matrix
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fatesim/agents.hpp"
#include "fatesim/env.hpp"
#include "fatesim/model.hpp"
#include "fatesim/synthetic.hpp"

namespace fatesim {

struct TraceRow {
    int step = 0;
    int episode = 0;
    std::string node;  // node the action was taken in
    DiscreteAction action;
    double reward = 0.0;
    double coverage = 0.0;
    bool crash = false;
};

struct RunRecord {
    std::string algorithm;
    std::string preset;
    std::uint64_t seed = 0;
    std::vector<double> coverage;  // after each step, nondecreasing
    std::vector<double> rewards;
    std::set<CrashIdentity> crashes;
    int episodes = 0;
    double duration_seconds = 0.0;
    std::vector<TraceRow> trace;
};

// Executes one seeded run of `steps` environment steps. Episode accounting
// and coverage monotonicity are asserted on every run.
inline RunRecord run_experiment(const AppModel& model, const std::string& algorithm,
                                const nlohmann::json& overrides, std::uint64_t seed,
                                int steps = 4000, int episode_length = 250,
                                RewardParams rewards = {}, const std::string& preset = "") {
    auto t0 = std::chrono::steady_clock::now();

    SimEnv env(model, rewards, episode_length);
    AgentContext ctx;
    ctx.obs_dim = static_cast<int>(model.nodes.size()) + model.max_widget_slots;
    ctx.widget_slots = model.max_widget_slots;
    ctx.pool_size = static_cast<int>(model.string_pool.size());
    std::unique_ptr<Agent> agent = make_agent(algorithm, ctx, overrides, seed);

    RunRecord rec;
    rec.algorithm = algorithm;
    rec.preset = preset;
    rec.seed = seed;
    rec.coverage.reserve(static_cast<std::size_t>(steps));
    rec.rewards.reserve(static_cast<std::size_t>(steps));
    rec.trace.reserve(static_cast<std::size_t>(steps));

    Observation obs = env.reset(seed);
    rec.episodes = 1;
    int episode = 0;

    for (int step = 0; step < steps; ++step) {
        std::string source_node = env.current_node();
        ActionChoice choice = agent->act(obs, true);
        DiscreteAction executed =
            choice.continuous ? decode_action(*choice.continuous, obs, ctx.pool_size)
                              : choice.discrete;
        StepResult result = env.step(executed);

        StepFeedback fb;
        fb.obs = obs;
        fb.continuous = choice.continuous.value_or(ContinuousAction{});
        fb.executed = executed;
        fb.reward = result.reward;
        fb.next_obs = result.observation;
        fb.terminal = result.crash.has_value();
        agent->learn(fb);

        double cov = env.coverage();
        rec.coverage.push_back(cov);
        rec.rewards.push_back(result.reward);
        rec.trace.push_back({step, episode, source_node, executed, result.reward, cov,
                             result.crash.has_value()});
        if (result.crash) rec.crashes.insert(*result.crash);

        if (result.episode_done && step + 1 < steps) {
            obs = env.reset(seed);
            ++rec.episodes;
            ++episode;
        } else {
            obs = result.observation;
        }
    }

    for (std::size_t i = 1; i < rec.coverage.size(); ++i)
        if (rec.coverage[i] < rec.coverage[i - 1])
            throw std::logic_error("coverage decreased within a run");
    if (rec.crashes.empty()) {
        int expected = (steps + episode_length - 1) / episode_length;
        if (rec.episodes != expected)
            throw std::logic_error("crash-free run produced " + std::to_string(rec.episodes) +
                                   " episodes, expected " + std::to_string(expected));
    }

    rec.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

// ---------------------------------------------------------------------------
// Experiment matrix
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string model_source;  // preset name or model file path
    std::vector<std::string> algorithms;
    nlohmann::json overrides = nlohmann::json::object();  // {algorithm: {knob: value}}
    int steps = 4000;
    int episode_length = 250;
    int repetitions = 30;
    std::uint64_t base_seed = 0;
    std::string out_dir = "fatesim-out";
    int parallelism = 0;  // 0 = hardware concurrency
    double alpha = 0.05;
    RewardParams rewards;
};

inline void validate_experiment_config(const ExperimentConfig& cfg) {
    if (cfg.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (cfg.steps < cfg.episode_length)
        throw std::invalid_argument("steps must be >= episode length");
    if (cfg.algorithms.empty()) throw std::invalid_argument("no algorithms selected");
    if (!cfg.rewards.valid())
        throw std::invalid_argument("reward params must satisfy gamma1 >> gamma2 >> gamma3 > 0");
    AgentContext probe{2, 1, 1};
    for (const std::string& algo : cfg.algorithms) {
        nlohmann::json o = cfg.overrides.value(algo, nlohmann::json::object());
        make_agent(algo, probe, o, 0);  // throws on unknown names or knobs
    }
    for (auto it = cfg.overrides.begin(); it != cfg.overrides.end(); ++it) {
        if (std::find(cfg.algorithms.begin(), cfg.algorithms.end(), it.key()) ==
                cfg.algorithms.end() &&
            std::find(algorithm_names().begin(), algorithm_names().end(), it.key()) ==
                algorithm_names().end())
            throw std::invalid_argument("overrides name unknown algorithm '" + it.key() + "'");
    }
}

struct RunOutcome {
    bool failed = false;
    std::string error;
    RunRecord record;
};

// Runs algorithms x repetitions. Run i of algorithm a (listed order) has
// index a*reps+i and seed base_seed + index, so any run can be re-executed
// alone. Results are independent of the parallelism degree.
inline std::vector<RunOutcome> run_matrix(const AppModel& model, const ExperimentConfig& cfg,
                                          const std::string& preset_label) {
    validate_experiment_config(cfg);
    struct Job {
        std::string algorithm;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const std::string& algo : cfg.algorithms)
        for (int rep = 0; rep < cfg.repetitions; ++rep)
            jobs.push_back({algo, cfg.base_seed + jobs.size()});

    std::vector<RunOutcome> outcomes(jobs.size());
    unsigned workers = cfg.parallelism > 0 ? static_cast<unsigned>(cfg.parallelism)
                                           : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            RunOutcome& out = outcomes[i];
            try {
                nlohmann::json overrides =
                    cfg.overrides.value(jobs[i].algorithm, nlohmann::json::object());
                out.record = run_experiment(model, jobs[i].algorithm, overrides, jobs[i].seed,
                                            cfg.steps, cfg.episode_length, cfg.rewards,
                                            preset_label);
            } catch (const std::exception& e) {
                out.failed = true;
                out.error = e.what();
                out.record.algorithm = jobs[i].algorithm;
                out.record.seed = jobs[i].seed;
                out.record.preset = preset_label;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    return outcomes;
}

// Loads a model from a suite preset name ("social/20_str") or a JSON file.
inline AppModel resolve_model(const std::string& source) {
    if (auto preset = preset_by_name(source)) return generate(*preset);
    std::ifstream in(source);
    if (!in) throw std::runtime_error("'" + source + "' is neither a preset nor a readable file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    AppModel model = parse_model(text);
    auto diags = validate_model(model);
    if (has_errors(diags)) {
        std::string msg = "model '" + source + "' failed validation:";
        for (const Diagnostic& d : diags)
            if (d.severity == Diagnostic::Severity::Error) msg += "\n  " + d.message;
        throw std::runtime_error(msg);
    }
    return model;
}

// ---------------------------------------------------------------------------
// Study-1 hyperparameter grids
// ---------------------------------------------------------------------------

struct GridEntry {
    std::string label;
    nlohmann::json overrides;
};

inline std::vector<GridEntry> study1_grid(const std::string& algorithm) {
    std::vector<GridEntry> out;
    auto label = [](int i) { return "cfg" + std::to_string(i); };
    if (algorithm == "ddpg") {
        int i = 1;
        for (double re : {0.5, 0.6, 0.7, 0.8})
            for (int ts : {5, 25})
                out.push_back({label(i++), {{"random_exploration", re}, {"nb_train_steps", ts}}});
        return out;
    }
    if (algorithm == "td3") {
        int i = 1;
        for (double re : {0.5, 0.6, 0.7, 0.8})
            for (int tf : {25, 100})
                out.push_back({label(i++), {{"random_exploration", re}, {"train_frequency", tf}}});
        return out;
    }
    if (algorithm == "sac") {
        int i = 1;
        for (int tui : {1, 2, 5, 10})
            for (int tf : {1, 5})
                out.push_back({label(i++),
                               {{"target_update_interval", tui}, {"train_frequency", tf}}});
        return out;
    }
    if (algorithm == "qlearn") {
        int i = 1;
        for (double gamma : {0.99, 0.9})
            for (double eps : {0.5, 0.6, 0.7, 0.8})
                out.push_back({label(i++),
                               {{"epsilon", eps}, {"gamma", gamma}, {"alpha", 0.628}}});
        return out;
    }
    throw std::invalid_argument("no hyperparameter grid for '" + algorithm + "'");
}

}  // namespace fatesim
