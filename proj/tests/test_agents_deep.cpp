// DDPG, TD3, SAC: update mechanics, exploration mix, determinism
#include <gtest/gtest.h>

#include <cmath>

#include "fatesim/agents.hpp"
#include "fatesim/runner.hpp"
#include "fixtures.hpp"

using namespace fatesim;

namespace {

Observation obs_of(std::vector<std::uint8_t> onehot, std::vector<std::uint8_t> mask) {
    Observation o;
    o.activity_onehot = std::move(onehot);
    o.widget_mask = std::move(mask);
    return o;
}

TransitionRecord fixed_transition(int obs_dim) {
    TransitionRecord t;
    t.state.assign(static_cast<std::size_t>(obs_dim), 0.0);
    t.state[0] = 1.0;
    t.action = {0.2, -0.4, 0.6};
    t.reward = 1000.0;
    t.next_state.assign(static_cast<std::size_t>(obs_dim), 0.0);
    t.next_state[1] = 1.0;
    t.done = false;
    return t;
}

}  // namespace

TEST(Ddpg, CriticLossStrictlyDecreasesOnFrozenBuffer) {
    AgentContext ctx{6, 3, 4};
    DdpgConfig cfg;
    cfg.random_exploration = 0.0;
    DdpgAgent agent(ctx, cfg, 7);
    agent.buffer().push(fixed_transition(ctx.obs_dim));

    std::vector<double> losses;
    for (int i = 0; i < 51; ++i) {
        agent.train_round();
        losses.push_back(agent.last_critic_loss());
    }
    for (std::size_t i = 1; i < 50; ++i)
        EXPECT_LT(losses[i], losses[i - 1]) << "iteration " << i;
}

TEST(Ddpg, ExplorationMixMatchesRandomExploration) {
    AgentContext ctx{6, 3, 4};
    DdpgConfig cfg;
    cfg.random_exploration = 0.7;
    cfg.exploration_noise = 0.0;  // policy draws are exactly pi(s)
    DdpgAgent agent(ctx, cfg, 11);
    Observation obs = obs_of({1, 0, 0}, {1, 1, 1});
    std::vector<double> policy = agent.actor().forward(obs.as_input());

    const int draws = 10000;
    int random_draws = 0;
    for (int i = 0; i < draws; ++i) {
        ContinuousAction a = *agent.act(obs, true).continuous;
        bool is_policy = true;
        for (int k = 0; k < 3; ++k)
            if (a.v[static_cast<std::size_t>(k)] != policy[static_cast<std::size_t>(k)])
                is_policy = false;
        if (!is_policy) ++random_draws;
    }
    double sigma = std::sqrt(0.7 * 0.3 * draws);
    EXPECT_NEAR(random_draws, 0.7 * draws, 3.0 * sigma);
}

TEST(Ddpg, FullRandomExplorationIsUniformOnCube) {
    AgentContext ctx{6, 3, 4};
    DdpgConfig cfg;
    cfg.random_exploration = 1.0;
    DdpgAgent agent(ctx, cfg, 13);
    Observation obs = obs_of({1, 0, 0}, {1, 1, 1});
    const int draws = 9000;
    std::array<int, 3> below_zero{0, 0, 0};
    std::array<double, 3> sums{0.0, 0.0, 0.0};
    for (int i = 0; i < draws; ++i) {
        ContinuousAction a = *agent.act(obs, true).continuous;
        for (int k = 0; k < 3; ++k) {
            double v = a.v[static_cast<std::size_t>(k)];
            ASSERT_GE(v, -1.0);
            ASSERT_LE(v, 1.0);
            if (v < 0.0) ++below_zero[static_cast<std::size_t>(k)];
            sums[static_cast<std::size_t>(k)] += v;
        }
    }
    for (int k = 0; k < 3; ++k) {
        double sigma = std::sqrt(0.25 * draws);
        EXPECT_NEAR(below_zero[static_cast<std::size_t>(k)], draws / 2.0, 3.0 * sigma);
        // mean of U(-1,1): sd of the sample mean = (1/sqrt(3)) / sqrt(n)
        EXPECT_NEAR(sums[static_cast<std::size_t>(k)] / draws, 0.0,
                    3.0 / (std::sqrt(3.0) * std::sqrt(static_cast<double>(draws))));
    }
}

TEST(Td3, ActorFrozenUntilPolicyDelay) {
    AgentContext ctx{6, 3, 4};
    Td3Config cfg;
    cfg.train_frequency = 1;
    cfg.policy_delay = 2;
    cfg.random_exploration = 0.0;
    Td3Agent agent(ctx, cfg, 17);
    agent.buffer().push(fixed_transition(ctx.obs_dim));

    auto actor_before = agent.actor().weights();
    auto critic_before = agent.critic1().weights();
    agent.train_round();  // lone critic update
    EXPECT_EQ(agent.actor().weights(), actor_before);
    EXPECT_NE(agent.critic1().weights(), critic_before);
    agent.train_round();  // second round: actor moves
    EXPECT_NE(agent.actor().weights(), actor_before);
    EXPECT_EQ(agent.critic_updates(), 2);
}

TEST(Td3, TargetTracksTheSmallerCritic) {
    AgentContext ctx{4, 1, 2};
    Td3Config cfg;
    cfg.tau = 0.0;                 // freeze targets so the regression target is constant
    cfg.target_noise_sigma = 0.0;  // and deterministic
    cfg.policy_delay = 1000000;    // keep the actor out of the picture
    cfg.batch_size = 8;
    Td3Agent agent(ctx, cfg, 19);

    // Make target critic 2 sit exactly 5 below target critic 1.
    agent.critic2_target() = agent.critic1_target();
    agent.critic2_target().biases().back()[0] -= 5.0;

    TransitionRecord t = fixed_transition(ctx.obs_dim);
    t.reward = 0.0;
    agent.buffer().push(t);

    std::vector<double> next_action = agent.actor_target().forward(t.next_state);
    std::vector<double> sa_next = t.next_state;
    sa_next.insert(sa_next.end(), next_action.begin(), next_action.end());
    double q1t = agent.critic1_target().forward(sa_next)[0];
    double q2t = agent.critic2_target().forward(sa_next)[0];
    EXPECT_NEAR(q2t, q1t - 5.0, 1e-12);
    double y = cfg.gamma * std::min(q1t, q2t);  // r = 0, d = 0

    for (int i = 0; i < 4000; ++i) agent.train_round();
    std::vector<double> sa = t.state;
    sa.insert(sa.end(), t.action.begin(), t.action.end());
    EXPECT_NEAR(agent.critic1().forward(sa)[0], y, 0.05);
    EXPECT_NEAR(agent.critic2().forward(sa)[0], y, 0.05);
}

TEST(Td3, IdenticalTwinsGiveDdpgTarget) {
    // min(x, x) = x: with equal target critics the clipped-double target
    // equals the single-critic target.
    AgentContext ctx{4, 1, 2};
    Td3Config cfg;
    cfg.tau = 0.0;
    cfg.target_noise_sigma = 0.0;
    cfg.policy_delay = 1000000;
    cfg.batch_size = 4;
    Td3Agent agent(ctx, cfg, 23);
    agent.critic2_target() = agent.critic1_target();

    TransitionRecord t = fixed_transition(ctx.obs_dim);
    t.reward = 2.0;
    agent.buffer().push(t);

    std::vector<double> next_action = agent.actor_target().forward(t.next_state);
    std::vector<double> sa_next = t.next_state;
    sa_next.insert(sa_next.end(), next_action.begin(), next_action.end());
    double y = t.reward + cfg.gamma * agent.critic1_target().forward(sa_next)[0];

    for (int i = 0; i < 4000; ++i) agent.train_round();
    std::vector<double> sa = t.state;
    sa.insert(sa.end(), t.action.begin(), t.action.end());
    EXPECT_NEAR(agent.critic1().forward(sa)[0], y, 0.05);
}

TEST(Sac, EntropyTermVanishesAtZeroCoefficient) {
    AgentContext ctx{4, 1, 2};
    SacConfig cfg;
    cfg.entropy_coefficient = 0.0;
    SacAgent agent(ctx, cfg, 29);
    EXPECT_DOUBLE_EQ(agent.bellman_target(3.0, false, 10.0, -1.7), 3.0 + cfg.gamma * 10.0);
    cfg.entropy_coefficient = 0.2;
    SacAgent with_entropy(ctx, cfg, 29);
    EXPECT_DOUBLE_EQ(with_entropy.bellman_target(3.0, false, 10.0, -1.7),
                     3.0 + cfg.gamma * (10.0 + 0.2 * 1.7));
    EXPECT_DOUBLE_EQ(with_entropy.bellman_target(3.0, true, 10.0, -1.7), 3.0);
}

TEST(Sac, SquashedLogProbAlwaysFinite) {
    AgentContext ctx{4, 1, 2};
    SacAgent agent(ctx, SacConfig{}, 31);
    // Saturate the head with huge weights; the log-std clamp keeps the
    // density finite even for fully saturated tanh samples.
    for (double& w : agent.actor().weights().back()) w *= 500.0;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> state{double(i % 3), double(i % 5), 1.0, -1.0};
        auto s = agent.sample_squashed(state);
        EXPECT_TRUE(std::isfinite(s.log_prob));
        for (double a : s.action) {
            EXPECT_GE(a, -1.0);
            EXPECT_LE(a, 1.0);
        }
    }
}

TEST(Sac, MeanActionWhenExplorationOff) {
    AgentContext ctx{5, 2, 3};
    SacAgent agent(ctx, SacConfig{}, 37);
    Observation obs = obs_of({0, 1, 0}, {1, 1});
    ContinuousAction a1 = *agent.act(obs, false).continuous;
    ContinuousAction a2 = *agent.act(obs, false).continuous;
    EXPECT_EQ(a1.v, a2.v);
    std::vector<double> head = agent.actor().forward(obs.as_input());
    for (int k = 0; k < 3; ++k)
        EXPECT_DOUBLE_EQ(a1.v[static_cast<std::size_t>(k)],
                         std::tanh(head[static_cast<std::size_t>(k)]));
}

// Two-armed bandit with equal rewards: entropy regularization keeps the
// sign distribution of action dimension 0 from collapsing.
TEST(Sac, BanditPolicyKeepsEntropyAboveHalfNat) {
    AgentContext ctx{2, 1, 1};
    SacConfig cfg;
    cfg.train_frequency = 1;
    cfg.target_update_interval = 1;
    SacAgent agent(ctx, cfg, 41);

    std::vector<double> state{1.0, 0.0};
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // Both arms (sign of dim 0) yield the same reward.
    for (int i = 0; i < 256; ++i) {
        TransitionRecord t;
        t.state = state;
        t.action = {u(rng), u(rng), u(rng)};
        t.reward = 1.0;
        t.next_state = state;
        t.done = true;
        agent.buffer().push(t);
    }
    for (int i = 0; i < 2000; ++i) agent.train_round();

    double p = agent.sign_probability(state);
    double entropy = 0.0;
    if (p > 0.0 && p < 1.0) entropy = -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
    EXPECT_GT(entropy, 0.5) << "p(arm0) = " << p;
}

TEST(DeepAgents, SeedDeterminismOnChainRuns) {
    AppModel model = testfx::chain_model(4, 3);
    for (const char* algo : {"ddpg", "td3", "sac"}) {
        RunRecord a = run_experiment(model, algo, {}, 77, 600, 50);
        RunRecord b = run_experiment(model, algo, {}, 77, 600, 50);
        EXPECT_EQ(a.rewards, b.rewards) << algo;
        EXPECT_EQ(a.coverage, b.coverage) << algo;
        RunRecord c = run_experiment(model, algo, {}, 78, 600, 50);
        EXPECT_NE(a.rewards, c.rewards) << algo;
    }
}

TEST(DeepAgents, ExecutedSlotsAlwaysAvailable) {
    AppModel model = testfx::chain_model(4, 3);
    for (const char* algo : {"ddpg", "td3", "sac"}) {
        RunRecord rec = run_experiment(model, algo, {}, 5, 400, 50);
        for (const TraceRow& row : rec.trace) {
            if (row.action.slot >= model.max_widget_slots) continue;  // system slots
            const Node* node = model.find_node(row.node);
            ASSERT_LT(static_cast<std::size_t>(row.action.slot), node->transitions.size())
                << algo;
        }
    }
}

TEST(MakeAgent, UnknownKnobsRejected) {
    AgentContext ctx{4, 1, 2};
    EXPECT_THROW(make_agent("ddpg", ctx, {{"typo_knob", 1}}, 0), std::invalid_argument);
    EXPECT_THROW(make_agent("qlearn", ctx, {{"learning_rate", 0.1}}, 0), std::invalid_argument);
    EXPECT_THROW(make_agent("nope", ctx, {}, 0), std::invalid_argument);
    EXPECT_NO_THROW(make_agent("sac", ctx, {{"entropy_coefficient", 0.1}}, 0));
    auto agent = make_agent("td3", ctx, {{"train_frequency", 3}}, 0);
    EXPECT_EQ(agent->name(), "td3");
}
