// experiment runs, the matrix, artifacts, grids
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fatesim/report.hpp"
#include "fatesim/runner.hpp"
#include "fixtures.hpp"

using namespace fatesim;
namespace fs = std::filesystem;

namespace {

AppModel crash_fixture() {
    const char* doc = R"({
      "global_vars": [],
      "nodes": [
        {"node_id": "a", "transitions": [
          {"transition_id": 0, "type": "button", "active": true, "guard": null, "set": null, "destination": "b"},
          {"transition_id": 1, "type": "button", "active": true, "guard": null, "set": null, "destination": "a", "crash": true}]},
        {"node_id": "b", "transitions": [
          {"transition_id": 0, "type": "button", "active": true, "guard": null, "set": null, "destination": "a"}]}],
      "initial_node": "a", "string_pool": ["x"], "max_widget_slots": 2})";
    return parse_model(doc);
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("fatesim_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

}  // namespace

TEST(RunExperiment, CoverageVectorShapeAndDeterminism) {
    AppModel model = testfx::chain_model(5, 2);
    RunRecord a = run_experiment(model, "random", {}, 3, 1000, 250);
    EXPECT_EQ(a.coverage.size(), 1000u);
    EXPECT_EQ(a.rewards.size(), 1000u);
    EXPECT_EQ(a.trace.size(), 1000u);
    for (std::size_t i = 1; i < a.coverage.size(); ++i)
        EXPECT_GE(a.coverage[i], a.coverage[i - 1]);
    RunRecord b = run_experiment(model, "random", {}, 3, 1000, 250);
    EXPECT_EQ(a.coverage, b.coverage);
    EXPECT_EQ(a.rewards, b.rewards);
    EXPECT_EQ(a.episodes, b.episodes);
}

TEST(RunExperiment, SingleNodeModelIsFullCoverageFromStepZero) {
    const char* doc = R"({
      "global_vars": [],
      "nodes": [{"node_id": "only", "transitions": [
        {"transition_id": 0, "type": "button", "active": true, "guard": null, "set": null, "destination": "only"}]}],
      "initial_node": "only", "string_pool": ["x"], "max_widget_slots": 1})";
    AppModel model = parse_model(doc);
    RunRecord rec = run_experiment(model, "random", {}, 1, 300, 100);
    EXPECT_DOUBLE_EQ(rec.coverage.front(), 100.0);
    EXPECT_DOUBLE_EQ(rec.coverage.back(), 100.0);
}

TEST(RunExperiment, SixteenEpisodesWithoutCrashes) {
    AppModel model = testfx::chain_model(4);
    RunRecord rec = run_experiment(model, "random", {}, 11, 4000, 250);
    EXPECT_EQ(rec.episodes, 16);
    EXPECT_TRUE(rec.crashes.empty());
    EXPECT_EQ(rec.trace.back().episode, 15);
}

TEST(RunExperiment, CrashesEndEpisodesEarlyAndAreRecorded) {
    AppModel model = crash_fixture();
    RunRecord rec = run_experiment(model, "random", {}, 5, 2000, 250);
    EXPECT_FALSE(rec.crashes.empty());
    EXPECT_GT(rec.episodes, 8);  // crashes shorten episodes, budget stays 2000
    EXPECT_EQ(rec.coverage.size(), 2000u);
    for (const CrashIdentity& c : rec.crashes) {
        EXPECT_EQ(c.node_id, "a");
        EXPECT_EQ(c.transition_id, 1);
    }
}

TEST(RunMatrix, SeedsAreBasePlusIndex) {
    AppModel model = testfx::chain_model(3);
    ExperimentConfig cfg;
    cfg.model_source = "chain";
    cfg.algorithms = {"random", "qlearn"};
    cfg.repetitions = 3;
    cfg.base_seed = 40;
    cfg.steps = 300;
    cfg.episode_length = 100;
    cfg.parallelism = 2;
    auto outcomes = run_matrix(model, cfg, "chain");
    ASSERT_EQ(outcomes.size(), 6u);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        EXPECT_FALSE(outcomes[i].failed);
        EXPECT_EQ(outcomes[i].record.seed, 40 + i);
        EXPECT_EQ(outcomes[i].record.algorithm, i < 3 ? "random" : "qlearn");
    }
}

TEST(RunMatrix, ParallelismDoesNotChangeResults) {
    AppModel model = testfx::chain_model(4, 2);
    ExperimentConfig cfg;
    cfg.model_source = "chain";
    cfg.algorithms = {"random", "qlearn"};
    cfg.repetitions = 2;
    cfg.base_seed = 7;
    cfg.steps = 500;
    cfg.episode_length = 125;
    cfg.parallelism = 1;
    auto serial = run_matrix(model, cfg, "chain");
    cfg.parallelism = 8;
    auto parallel = run_matrix(model, cfg, "chain");
    ASSERT_EQ(serial.size(), parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        EXPECT_EQ(serial[i].record.coverage, parallel[i].record.coverage);
        EXPECT_EQ(serial[i].record.rewards, parallel[i].record.rewards);
    }
}

TEST(RunConfig, ValidationRejectsBadConfigs) {
    ExperimentConfig cfg;
    cfg.algorithms = {"random"};
    cfg.repetitions = 0;
    EXPECT_THROW(validate_experiment_config(cfg), std::invalid_argument);
    cfg.repetitions = 1;
    cfg.steps = 100;
    cfg.episode_length = 250;
    EXPECT_THROW(validate_experiment_config(cfg), std::invalid_argument);
    cfg.steps = 4000;
    cfg.algorithms = {"quantum"};
    EXPECT_THROW(validate_experiment_config(cfg), std::invalid_argument);
    cfg.algorithms = {"ddpg"};
    cfg.overrides = {{"ddpg", {{"bad_knob", 1}}}};
    EXPECT_THROW(validate_experiment_config(cfg), std::invalid_argument);
    cfg.overrides = {{"ddpg", {{"nb_train_steps", 5}}}};
    EXPECT_NO_THROW(validate_experiment_config(cfg));
    cfg.overrides = {{"mystery", {{"x", 1}}}};
    EXPECT_THROW(validate_experiment_config(cfg), std::invalid_argument);
}

TEST(Artifacts, TraceCsvRoundTripsCoverageExactly) {
    TempDir dir;
    AppModel model = testfx::chain_model(5, 2);
    RunRecord rec = run_experiment(model, "qlearn", {}, 21, 700, 100);
    fs::path csv = dir.path / trace_csv_name(rec);
    write_trace_csv(csv, rec);
    std::vector<double> reloaded = read_trace_coverage(csv);
    ASSERT_EQ(reloaded.size(), rec.coverage.size());
    for (std::size_t i = 0; i < reloaded.size(); ++i)
        EXPECT_EQ(reloaded[i], rec.coverage[i]);  // bit-exact round trip
}

TEST(Artifacts, WriteAndReloadReportMatches) {
    TempDir dir;
    AppModel model = testfx::chain_model(5, 2);
    ExperimentConfig cfg;
    cfg.model_source = "chain";
    cfg.algorithms = {"random", "qlearn"};
    cfg.repetitions = 4;
    cfg.base_seed = 1;
    cfg.steps = 600;
    cfg.episode_length = 150;
    cfg.out_dir = (dir.path / "out").string();
    cfg.parallelism = 2;
    auto outcomes = run_matrix(model, cfg, "chain");
    EXPECT_TRUE(write_artifacts(cfg, "chain", outcomes));

    EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / "summary.json"));
    EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / "report.json"));
    EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / "report.txt"));
    EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / "coverage.svg"));

    // stats reload reproduces the in-memory comparison exactly
    std::map<std::string, std::vector<double>> aucs;
    for (const auto& o : outcomes) aucs[o.record.algorithm].push_back(auc(o.record.coverage));
    ComparisonReport original = compare(aucs, cfg.alpha);
    ComparisonReport reloaded = report_from_directory(cfg.out_dir);
    EXPECT_EQ(report_to_json(original).dump(), report_to_json(reloaded).dump());

    // summary embeds the resolved config
    std::ifstream in(fs::path(cfg.out_dir) / "summary.json");
    nlohmann::json summary = nlohmann::json::parse(in);
    EXPECT_EQ(summary["config"]["base_seed"], 1);
    EXPECT_EQ(summary["config"]["algorithms"].size(), 2u);
    EXPECT_EQ(summary["runs"].size(), 8u);
    for (const auto& run : summary["runs"]) EXPECT_FALSE(run["failed"].get<bool>());
}

TEST(Artifacts, SvgChartContainsAllAlgorithms) {
    AppModel model = testfx::chain_model(3);
    ExperimentConfig cfg;
    cfg.model_source = "chain";
    cfg.algorithms = {"random", "qlearn"};
    cfg.repetitions = 2;
    cfg.steps = 300;
    cfg.episode_length = 100;
    cfg.parallelism = 1;
    auto outcomes = run_matrix(model, cfg, "chain");
    std::string svg = svg_coverage_chart(outcomes, cfg.steps);
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find(">random<"), std::string::npos);
    EXPECT_NE(svg.find(">qlearn<"), std::string::npos);
    EXPECT_NE(svg.find("polyline"), std::string::npos);
}

TEST(ResolveModel, PresetNameOrFile) {
    AppModel preset = resolve_model("social/20_str");
    EXPECT_EQ(preset.string_pool.size(), 20u);

    TempDir dir;
    fs::path file = dir.path / "m.json";
    write_text_file(file, serialize_model(testfx::chain_model(3)));
    AppModel loaded = resolve_model(file.string());
    EXPECT_EQ(loaded.nodes.size(), 3u);

    EXPECT_THROW(resolve_model("social/33_str"), std::runtime_error);
}

TEST(Grids, Study1Definitions) {
    auto ddpg = study1_grid("ddpg");
    ASSERT_EQ(ddpg.size(), 8u);
    EXPECT_EQ(ddpg[0].overrides["random_exploration"], 0.5);
    EXPECT_EQ(ddpg[0].overrides["nb_train_steps"], 5);
    EXPECT_EQ(ddpg[1].overrides["nb_train_steps"], 25);
    EXPECT_EQ(ddpg[7].overrides["random_exploration"], 0.8);

    auto td3 = study1_grid("td3");
    ASSERT_EQ(td3.size(), 8u);
    EXPECT_EQ(td3[0].overrides["train_frequency"], 25);
    EXPECT_EQ(td3[1].overrides["train_frequency"], 100);

    auto sac = study1_grid("sac");
    ASSERT_EQ(sac.size(), 8u);
    EXPECT_EQ(sac[0].overrides["target_update_interval"], 1);
    EXPECT_EQ(sac[7].overrides["train_frequency"], 5);
    EXPECT_EQ(sac[7].overrides["target_update_interval"], 10);

    auto qlearn = study1_grid("qlearn");
    ASSERT_EQ(qlearn.size(), 8u);
    EXPECT_EQ(qlearn[0].overrides["epsilon"], 0.5);
    EXPECT_EQ(qlearn[0].overrides["gamma"], 0.99);
    EXPECT_EQ(qlearn[4].overrides["gamma"], 0.9);
    EXPECT_EQ(qlearn[0].overrides["alpha"], 0.628);

    EXPECT_THROW(study1_grid("random"), std::invalid_argument);

    // every grid entry names known knobs
    for (const char* algo : {"ddpg", "td3", "sac", "qlearn"}) {
        for (const GridEntry& entry : study1_grid(algo)) {
            AgentContext probe{2, 1, 1};
            EXPECT_NO_THROW(make_agent(algo, probe, entry.overrides, 0)) << algo << entry.label;
        }
    }
}

TEST(ConfigJson, RoundTrip) {
    ExperimentConfig cfg;
    cfg.model_source = "bank/40_str";
    cfg.algorithms = {"sac", "random"};
    cfg.overrides = {{"sac", {{"train_frequency", 2}}}};
    cfg.steps = 2000;
    cfg.episode_length = 200;
    cfg.repetitions = 12;
    cfg.base_seed = 77;
    cfg.parallelism = 3;
    cfg.alpha = 0.01;
    ExperimentConfig back = config_from_json(config_to_json(cfg));
    EXPECT_EQ(back.model_source, cfg.model_source);
    EXPECT_EQ(back.algorithms, cfg.algorithms);
    EXPECT_EQ(back.overrides, cfg.overrides);
    EXPECT_EQ(back.steps, cfg.steps);
    EXPECT_EQ(back.episode_length, cfg.episode_length);
    EXPECT_EQ(back.repetitions, cfg.repetitions);
    EXPECT_EQ(back.base_seed, cfg.base_seed);
    EXPECT_EQ(back.parallelism, cfg.parallelism);
    EXPECT_EQ(back.alpha, cfg.alpha);
}
