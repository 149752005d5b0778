// fatesim/agents.hpp - exploration strategies: Random, tabular Q-Learning,
// DDPG, TD3, SAC behind one agent interface
#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "fatesim/env.hpp"
#include "fatesim/mlp.hpp"
#include "fatesim/replay.hpp"

namespace fatesim {

// Sizing information an agent needs about its environment.
struct AgentContext {
    int obs_dim = 0;
    int widget_slots = 0;  // max_widget_slots of the model
    int pool_size = 0;

    int slot_count() const { return widget_slots + 2; }
};

// What an agent emits: deep agents produce the continuous triple, tabular
// ones a decoded action directly.
struct ActionChoice {
    std::optional<ContinuousAction> continuous;
    DiscreteAction discrete;
};

// One step of experience handed back to the agent after the environment ran.
struct StepFeedback {
    Observation obs;
    ContinuousAction continuous;  // raw emitted action (deep agents)
    DiscreteAction executed;      // action the environment actually ran
    double reward = 0.0;
    Observation next_obs;
    bool terminal = false;  // true final state (crash); episode timeouts bootstrap
};

class Agent {
public:
    virtual ~Agent() = default;
    virtual std::string name() const = 0;
    virtual ActionChoice act(const Observation& obs, bool explore = true) = 0;
    virtual void learn(const StepFeedback& fb) = 0;
};

namespace detail {

// Widget slots with mask bit 1, plus the two always-available system slots.
inline std::vector<int> available_slots(const Observation& obs) {
    std::vector<int> slots;
    for (std::size_t i = 0; i < obs.widget_mask.size(); ++i)
        if (obs.widget_mask[i]) slots.push_back(static_cast<int>(i));
    slots.push_back(static_cast<int>(obs.widget_mask.size()));
    slots.push_back(static_cast<int>(obs.widget_mask.size()) + 1);
    return slots;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Random
// ---------------------------------------------------------------------------

class RandomAgent : public Agent {
public:
    RandomAgent(AgentContext ctx, std::uint64_t seed) : ctx_(ctx), rng_(seed) {}

    std::string name() const override { return "random"; }

    ActionChoice act(const Observation& obs, bool = true) override {
        std::vector<int> slots = detail::available_slots(obs);
        std::uniform_int_distribution<std::size_t> slot_pick(0, slots.size() - 1);
        std::uniform_int_distribution<int> string_pick(0, ctx_.pool_size - 1);
        std::uniform_int_distribution<int> mode_pick(0, 1);
        DiscreteAction a;
        a.slot = slots[slot_pick(rng_)];
        a.string_index = string_pick(rng_);
        a.mode = mode_pick(rng_);
        return {std::nullopt, a};
    }

    void learn(const StepFeedback&) override {}

private:
    AgentContext ctx_;
    std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Tabular Q-Learning
// ---------------------------------------------------------------------------

struct QLearnConfig {
    double epsilon = 0.8;
    double gamma = 0.9;
    double alpha = 0.628;
};

class QLearningAgent : public Agent {
public:
    QLearningAgent(AgentContext ctx, QLearnConfig cfg, std::uint64_t seed)
        : ctx_(ctx), cfg_(cfg), rng_(seed) {}

    std::string name() const override { return "qlearn"; }

    ActionChoice act(const Observation& obs, bool explore = true) override {
        double roll = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        if (explore && roll < cfg_.epsilon) {
            std::vector<DiscreteAction> actions = available_actions(obs);
            std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
            return {std::nullopt, actions[pick(rng_)]};
        }
        return {std::nullopt, greedy(obs)};
    }

    // Argmax of Q over available actions; ties go to the lowest action key.
    DiscreteAction greedy(const Observation& obs) const {
        DiscreteAction best;
        double best_value = -std::numeric_limits<double>::infinity();
        for (const DiscreteAction& a : available_actions(obs)) {
            double v = value(obs, a);
            if (v > best_value) {
                best_value = v;
                best = a;
            }
        }
        return best;
    }

    void learn(const StepFeedback& fb) override {
        update(fb.obs, fb.executed, fb.reward, fb.next_obs, fb.terminal);
    }

    // Q(s,a) <- Q(s,a) + alpha * (r + gamma * max_a' Q(s',a') - Q(s,a));
    // the max runs over actions available at s'. Returns the updated value.
    double update(const Observation& s, const DiscreteAction& a, double reward,
                  const Observation& next, bool terminal) {
        double max_next = 0.0;
        if (!terminal) {
            max_next = -std::numeric_limits<double>::infinity();
            for (const DiscreteAction& na : available_actions(next))
                max_next = std::max(max_next, value(next, na));
        }
        double target = reward + (terminal ? 0.0 : cfg_.gamma * max_next);
        double& q = table_[s.key()][a];
        q += cfg_.alpha * (target - q);
        return q;
    }

    double value(const Observation& obs, const DiscreteAction& a) const {
        auto state = table_.find(obs.key());
        if (state == table_.end()) return 0.0;
        auto entry = state->second.find(a);
        return entry == state->second.end() ? 0.0 : entry->second;
    }

    std::vector<DiscreteAction> available_actions(const Observation& obs) const {
        std::vector<DiscreteAction> out;
        for (int slot : detail::available_slots(obs))
            for (int s = 0; s < ctx_.pool_size; ++s)
                for (int m = 0; m < 2; ++m) out.push_back({slot, s, m});
        return out;
    }

    const std::map<std::string, std::map<DiscreteAction, double>>& table() const { return table_; }
    const QLearnConfig& config() const { return cfg_; }

private:
    AgentContext ctx_;
    QLearnConfig cfg_;
    std::mt19937_64 rng_;
    // obs key -> action -> value; entries created lazily, default 0.
    std::map<std::string, std::map<DiscreteAction, double>> table_;
};

// ---------------------------------------------------------------------------
// Shared actor-critic machinery
// ---------------------------------------------------------------------------

namespace detail {

template <typename Seq>
inline void concat_into(std::vector<double>& out, const std::vector<double>& s, const Seq& a) {
    out.resize(s.size() + a.size());
    std::copy(s.begin(), s.end(), out.begin());
    std::copy(a.begin(), a.end(), out.begin() + static_cast<std::ptrdiff_t>(s.size()));
}

inline void clamp_unit(std::array<double, 3>& v) {
    for (double& x : v) x = std::clamp(x, -1.0, 1.0);
}

// log(1 - tanh(u)^2), computed without cancellation.
inline double log_one_minus_tanh_sq(double u) {
    auto softplus = [](double x) {
        return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    };
    return 2.0 * (std::log(2.0) - u - softplus(-2.0 * u));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// DDPG
// ---------------------------------------------------------------------------

struct DdpgConfig {
    double learning_rate = 0.0001;
    double gamma = 0.99;
    double tau = 0.005;
    double random_exploration = 0.7;
    int nb_train_steps = 10;  // update rounds per environment step
    double exploration_noise = 0.1;
    std::size_t buffer_capacity = 50000;
    int batch_size = 128;
};

class DdpgAgent : public Agent {
public:
    DdpgAgent(AgentContext ctx, DdpgConfig cfg, std::uint64_t seed)
        : ctx_(ctx),
          cfg_(cfg),
          rng_(seed),
          actor_(ctx.obs_dim, 3, OutputHead::Tanh, seed + 1),
          actor_target_(actor_),
          critic_(ctx.obs_dim + 3, 1, OutputHead::Linear, seed + 2),
          critic_target_(critic_),
          actor_opt_(actor_, cfg.learning_rate),
          critic_opt_(critic_, cfg.learning_rate),
          buffer_(cfg.buffer_capacity) {}

    std::string name() const override { return "ddpg"; }

    ActionChoice act(const Observation& obs, bool explore = true) override {
        ContinuousAction a;
        if (explore &&
            std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < cfg_.random_exploration) {
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            for (double& x : a.v) x = u(rng_);
            return {a, {}};
        }
        std::vector<double> out = actor_.forward(obs.as_input());
        std::copy(out.begin(), out.end(), a.v.begin());
        if (explore) {
            std::normal_distribution<double> noise(0.0, cfg_.exploration_noise);
            for (double& x : a.v) x += noise(rng_);
        }
        detail::clamp_unit(a.v);
        return {a, {}};
    }

    void learn(const StepFeedback& fb) override {
        buffer_.push({fb.obs.as_input(), fb.continuous.v, fb.reward, fb.next_obs.as_input(),
                      fb.terminal});
        if (buffer_.size() < static_cast<std::size_t>(cfg_.batch_size)) return;
        for (int i = 0; i < cfg_.nb_train_steps; ++i) train_round();
    }

    // One critic regression toward the bootstrapped target plus one actor
    // ascent step on Q(s, pi(s)), then soft target updates.
    void train_round() {
        auto batch = buffer_.sample(static_cast<std::size_t>(cfg_.batch_size), rng_);
        const double inv_b = 1.0 / static_cast<double>(batch.size());

        critic_.zero_like(critic_grads_);
        double loss = 0.0;
        for (const TransitionRecord* t : batch) {
            const std::vector<double>& next_action =
                actor_target_.forward_cached(t->next_state, scratch_a_);
            detail::concat_into(sa_, t->next_state, next_action);
            double q_next = critic_target_.forward_cached(sa_, scratch_b_)[0];
            double y = t->reward + cfg_.gamma * (t->done ? 0.0 : 1.0) * q_next;
            detail::concat_into(sa_, t->state, t->action);
            double q = critic_.forward_cached(sa_, critic_cache_)[0];
            double err = q - y;
            loss += err * err * inv_b;
            double dout[1] = {2.0 * err * inv_b};
            critic_.backward_into(critic_cache_, dout, critic_grads_);
        }
        last_critic_loss_ = loss;
        adam_step(critic_, critic_opt_, critic_grads_);

        actor_.zero_like(actor_grads_);
        for (const TransitionRecord* t : batch) {
            const std::vector<double>& action = actor_.forward_cached(t->state, actor_cache_);
            detail::concat_into(sa_, t->state, action);
            critic_.forward_cached(sa_, critic_cache_);
            double one[1] = {1.0};
            critic_.input_gradient(critic_cache_, one, dq_dinput_);
            // Ascend Q: feed -dQ/da (scaled by 1/B) back through the actor.
            double dout[3];
            for (int k = 0; k < 3; ++k)
                dout[k] = -dq_dinput_[static_cast<std::size_t>(ctx_.obs_dim + k)] * inv_b;
            actor_.backward_into(actor_cache_, dout, actor_grads_);
        }
        adam_step(actor_, actor_opt_, actor_grads_);

        soft_update(actor_target_, actor_, cfg_.tau);
        soft_update(critic_target_, critic_, cfg_.tau);
    }

    double last_critic_loss() const { return last_critic_loss_; }
    ReplayBuffer& buffer() { return buffer_; }
    Mlp& actor() { return actor_; }
    Mlp& actor_target() { return actor_target_; }
    Mlp& critic() { return critic_; }
    Mlp& critic_target() { return critic_target_; }
    const DdpgConfig& config() const { return cfg_; }

private:
    AgentContext ctx_;
    DdpgConfig cfg_;
    std::mt19937_64 rng_;
    Mlp actor_, actor_target_, critic_, critic_target_;
    AdamState actor_opt_, critic_opt_;
    ReplayBuffer buffer_;
    double last_critic_loss_ = 0.0;
    // training scratch, reused across rounds
    ForwardCache scratch_a_, scratch_b_, actor_cache_, critic_cache_;
    MlpGradients critic_grads_, actor_grads_;
    std::vector<double> sa_, dq_dinput_;
};

// ---------------------------------------------------------------------------
// TD3
// ---------------------------------------------------------------------------

struct Td3Config {
    double learning_rate = 0.0003;
    double gamma = 0.99;
    double tau = 0.005;
    double random_exploration = 0.8;
    int train_frequency = 10;  // environment steps between update rounds
    int policy_delay = 2;
    double target_noise_sigma = 0.2;
    double target_noise_clip = 0.5;
    double exploration_noise = 0.1;
    std::size_t buffer_capacity = 50000;
    int batch_size = 128;
};

class Td3Agent : public Agent {
public:
    Td3Agent(AgentContext ctx, Td3Config cfg, std::uint64_t seed)
        : ctx_(ctx),
          cfg_(cfg),
          rng_(seed),
          actor_(ctx.obs_dim, 3, OutputHead::Tanh, seed + 1),
          actor_target_(actor_),
          critic1_(ctx.obs_dim + 3, 1, OutputHead::Linear, seed + 2),
          critic1_target_(critic1_),
          critic2_(ctx.obs_dim + 3, 1, OutputHead::Linear, seed + 3),
          critic2_target_(critic2_),
          actor_opt_(actor_, cfg.learning_rate),
          critic1_opt_(critic1_, cfg.learning_rate),
          critic2_opt_(critic2_, cfg.learning_rate),
          buffer_(cfg.buffer_capacity) {}

    std::string name() const override { return "td3"; }

    ActionChoice act(const Observation& obs, bool explore = true) override {
        ContinuousAction a;
        if (explore &&
            std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < cfg_.random_exploration) {
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            for (double& x : a.v) x = u(rng_);
            return {a, {}};
        }
        std::vector<double> out = actor_.forward(obs.as_input());
        std::copy(out.begin(), out.end(), a.v.begin());
        if (explore) {
            std::normal_distribution<double> noise(0.0, cfg_.exploration_noise);
            for (double& x : a.v) x += noise(rng_);
        }
        detail::clamp_unit(a.v);
        return {a, {}};
    }

    void learn(const StepFeedback& fb) override {
        buffer_.push({fb.obs.as_input(), fb.continuous.v, fb.reward, fb.next_obs.as_input(),
                      fb.terminal});
        ++env_steps_;
        if (env_steps_ % cfg_.train_frequency != 0) return;
        if (buffer_.size() < static_cast<std::size_t>(cfg_.batch_size)) return;
        train_round();
    }

    // Clipped double Q with target policy smoothing; the actor and all
    // targets update only every policy_delay critic updates.
    void train_round() {
        auto batch = buffer_.sample(static_cast<std::size_t>(cfg_.batch_size), rng_);
        const double inv_b = 1.0 / static_cast<double>(batch.size());

        critic1_.zero_like(g1_);
        critic2_.zero_like(g2_);
        double loss = 0.0;
        const bool smoothing = cfg_.target_noise_sigma > 0.0;
        std::normal_distribution<double> noise(0.0, smoothing ? cfg_.target_noise_sigma : 1.0);
        for (const TransitionRecord* t : batch) {
            next_action_ = actor_target_.forward_cached(t->next_state, scratch_a_);
            for (double& x : next_action_) {
                double n = smoothing ? std::clamp(noise(rng_), -cfg_.target_noise_clip,
                                                  cfg_.target_noise_clip)
                                     : 0.0;
                x = std::clamp(x + n, -1.0, 1.0);
            }
            detail::concat_into(sa_, t->next_state, next_action_);
            double q_next = std::min(critic1_target_.forward_cached(sa_, scratch_a_)[0],
                                     critic2_target_.forward_cached(sa_, scratch_b_)[0]);
            double y = t->reward + cfg_.gamma * (t->done ? 0.0 : 1.0) * q_next;

            detail::concat_into(sa_, t->state, t->action);
            double q1 = critic1_.forward_cached(sa_, c1_cache_)[0];
            double q2 = critic2_.forward_cached(sa_, c2_cache_)[0];
            loss += ((q1 - y) * (q1 - y) + (q2 - y) * (q2 - y)) * inv_b;
            double d1[1] = {2.0 * (q1 - y) * inv_b};
            double d2[1] = {2.0 * (q2 - y) * inv_b};
            critic1_.backward_into(c1_cache_, d1, g1_);
            critic2_.backward_into(c2_cache_, d2, g2_);
        }
        last_critic_loss_ = loss;
        adam_step(critic1_, critic1_opt_, g1_);
        adam_step(critic2_, critic2_opt_, g2_);
        ++critic_updates_;

        if (critic_updates_ % cfg_.policy_delay != 0) return;

        actor_.zero_like(actor_grads_);
        for (const TransitionRecord* t : batch) {
            const std::vector<double>& action = actor_.forward_cached(t->state, actor_cache_);
            detail::concat_into(sa_, t->state, action);
            critic1_.forward_cached(sa_, c1_cache_);
            double one[1] = {1.0};
            critic1_.input_gradient(c1_cache_, one, dq_dinput_);
            double dout[3];
            for (int k = 0; k < 3; ++k)
                dout[k] = -dq_dinput_[static_cast<std::size_t>(ctx_.obs_dim + k)] * inv_b;
            actor_.backward_into(actor_cache_, dout, actor_grads_);
        }
        adam_step(actor_, actor_opt_, actor_grads_);

        soft_update(actor_target_, actor_, cfg_.tau);
        soft_update(critic1_target_, critic1_, cfg_.tau);
        soft_update(critic2_target_, critic2_, cfg_.tau);
    }

    double last_critic_loss() const { return last_critic_loss_; }
    ReplayBuffer& buffer() { return buffer_; }
    Mlp& actor() { return actor_; }
    Mlp& actor_target() { return actor_target_; }
    Mlp& critic1() { return critic1_; }
    Mlp& critic2() { return critic2_; }
    Mlp& critic1_target() { return critic1_target_; }
    Mlp& critic2_target() { return critic2_target_; }
    long critic_updates() const { return critic_updates_; }
    const Td3Config& config() const { return cfg_; }

private:
    AgentContext ctx_;
    Td3Config cfg_;
    std::mt19937_64 rng_;
    Mlp actor_, actor_target_, critic1_, critic1_target_, critic2_, critic2_target_;
    AdamState actor_opt_, critic1_opt_, critic2_opt_;
    ReplayBuffer buffer_;
    long env_steps_ = 0;
    long critic_updates_ = 0;
    double last_critic_loss_ = 0.0;
    ForwardCache scratch_a_, scratch_b_, actor_cache_, c1_cache_, c2_cache_;
    MlpGradients g1_, g2_, actor_grads_;
    std::vector<double> sa_, dq_dinput_, next_action_;
};

// ---------------------------------------------------------------------------
// SAC
// ---------------------------------------------------------------------------

struct SacConfig {
    double learning_rate = 0.0003;
    double gamma = 0.99;
    double tau = 0.005;
    int train_frequency = 5;          // environment steps between update rounds
    int target_update_interval = 10;  // critic updates between target syncs
    double entropy_coefficient = 0.2;
    std::size_t buffer_capacity = 50000;
    int batch_size = 128;
};

class SacAgent : public Agent {
public:
    SacAgent(AgentContext ctx, SacConfig cfg, std::uint64_t seed)
        : ctx_(ctx),
          cfg_(cfg),
          rng_(seed),
          actor_(ctx.obs_dim, 6, OutputHead::Gaussian, seed + 1),
          critic1_(ctx.obs_dim + 3, 1, OutputHead::Linear, seed + 2),
          critic1_target_(critic1_),
          critic2_(ctx.obs_dim + 3, 1, OutputHead::Linear, seed + 3),
          critic2_target_(critic2_),
          actor_opt_(actor_, cfg.learning_rate),
          critic1_opt_(critic1_, cfg.learning_rate),
          critic2_opt_(critic2_, cfg.learning_rate),
          buffer_(cfg.buffer_capacity) {}

    std::string name() const override { return "sac"; }

    ActionChoice act(const Observation& obs, bool explore = true) override {
        std::vector<double> head = actor_.forward(obs.as_input());
        ContinuousAction a;
        for (int k = 0; k < 3; ++k) {
            double mu = head[static_cast<std::size_t>(k)];
            if (explore) {
                double sigma = std::exp(head[static_cast<std::size_t>(3 + k)]);
                double xi = std::normal_distribution<double>(0.0, 1.0)(rng_);
                a.v[static_cast<std::size_t>(k)] = std::tanh(mu + sigma * xi);
            } else {
                a.v[static_cast<std::size_t>(k)] = std::tanh(mu);
            }
        }
        return {a, {}};
    }

    void learn(const StepFeedback& fb) override {
        buffer_.push({fb.obs.as_input(), fb.continuous.v, fb.reward, fb.next_obs.as_input(),
                      fb.terminal});
        ++env_steps_;
        if (env_steps_ % cfg_.train_frequency != 0) return;
        if (buffer_.size() < static_cast<std::size_t>(cfg_.batch_size)) return;
        train_round();
    }

    void train_round() {
        auto batch = buffer_.sample(static_cast<std::size_t>(cfg_.batch_size), rng_);
        const double inv_b = 1.0 / static_cast<double>(batch.size());
        const double alpha = cfg_.entropy_coefficient;

        critic1_.zero_like(g1_);
        critic2_.zero_like(g2_);
        double loss = 0.0;
        for (const TransitionRecord* t : batch) {
            SquashedSample next = sample_squashed(t->next_state);
            double q_next;
            {
                detail::concat_into(sa_, t->next_state, next.action);
                q_next = std::min(critic1_target_.forward_cached(sa_, scratch_a_)[0],
                                  critic2_target_.forward_cached(sa_, scratch_b_)[0]);
            }
            double y = bellman_target(t->reward, t->done, q_next, next.log_prob);

            detail::concat_into(sa_, t->state, t->action);
            double q1 = critic1_.forward_cached(sa_, c1_cache_)[0];
            double q2 = critic2_.forward_cached(sa_, c2_cache_)[0];
            loss += ((q1 - y) * (q1 - y) + (q2 - y) * (q2 - y)) * inv_b;
            double d1[1] = {2.0 * (q1 - y) * inv_b};
            double d2[1] = {2.0 * (q2 - y) * inv_b};
            critic1_.backward_into(c1_cache_, d1, g1_);
            critic2_.backward_into(c2_cache_, d2, g2_);
        }
        last_critic_loss_ = loss;
        adam_step(critic1_, critic1_opt_, g1_);
        adam_step(critic2_, critic2_opt_, g2_);

        // Actor: minimize alpha * log pi(a|s) - min_i Q_i(s, a) with a
        // reparameterized fresh sample a = tanh(mu + sigma * xi).
        actor_.zero_like(actor_grads_);
        std::normal_distribution<double> unit(0.0, 1.0);
        for (const TransitionRecord* t : batch) {
            const std::vector<double>& head = actor_.forward_cached(t->state, actor_cache_);
            std::array<double, 3> xi{}, u{}, action{}, sigma{};
            for (int k = 0; k < 3; ++k) {
                sigma[static_cast<std::size_t>(k)] = std::exp(head[static_cast<std::size_t>(3 + k)]);
                xi[static_cast<std::size_t>(k)] = unit(rng_);
                u[static_cast<std::size_t>(k)] = head[static_cast<std::size_t>(k)] +
                                                 sigma[static_cast<std::size_t>(k)] * xi[static_cast<std::size_t>(k)];
                action[static_cast<std::size_t>(k)] = std::tanh(u[static_cast<std::size_t>(k)]);
            }

            detail::concat_into(sa_, t->state, action);
            double q1 = critic1_.forward_cached(sa_, c1_cache_)[0];
            double q2 = critic2_.forward_cached(sa_, c2_cache_)[0];
            double one[1] = {1.0};
            if (q1 <= q2) critic1_.input_gradient(c1_cache_, one, dq_dinput_);
            else critic2_.input_gradient(c2_cache_, one, dq_dinput_);

            double dout[6];
            for (int k = 0; k < 3; ++k) {
                double th = action[static_cast<std::size_t>(k)];
                double dq_da = dq_dinput_[static_cast<std::size_t>(ctx_.obs_dim + k)];
                double dlogp_du = 2.0 * th;  // from the tanh correction term
                double da_du = 1.0 - th * th;
                // d/d mu
                dout[k] = (alpha * dlogp_du - dq_da * da_du) * inv_b;
                // d/d log_std: through u (chain xi * sigma) and the -log sigma term
                double du_dls = xi[static_cast<std::size_t>(k)] * sigma[static_cast<std::size_t>(k)];
                dout[3 + k] = (alpha * (dlogp_du * du_dls - 1.0) - dq_da * da_du * du_dls) * inv_b;
            }
            actor_.backward_into(actor_cache_, dout, actor_grads_);
        }
        adam_step(actor_, actor_opt_, actor_grads_);

        ++critic_updates_;
        if (critic_updates_ % cfg_.target_update_interval == 0) {
            soft_update(critic1_target_, critic1_, cfg_.tau);
            soft_update(critic2_target_, critic2_, cfg_.tau);
        }
    }

    struct SquashedSample {
        std::array<double, 3> action{};
        double log_prob = 0.0;
    };

    // y = r + gamma (1-d) (min-Q' - alpha_H log pi(a'|s')); the entropy term
    // vanishes at alpha_H = 0.
    double bellman_target(double reward, bool done, double q_next, double log_prob) const {
        return reward + cfg_.gamma * (done ? 0.0 : 1.0) *
                            (q_next - cfg_.entropy_coefficient * log_prob);
    }

    // Sample a = tanh(u), u ~ N(mu, sigma), with its log-density. The log-std
    // clamp keeps the result finite for any state.
    SquashedSample sample_squashed(const std::vector<double>& state) {
        const std::vector<double>& head = actor_.forward_cached(state, sample_cache_);
        SquashedSample out;
        constexpr double half_log_two_pi = 0.9189385332046727;
        for (int k = 0; k < 3; ++k) {
            double mu = head[static_cast<std::size_t>(k)];
            double log_std = head[static_cast<std::size_t>(3 + k)];
            double sigma = std::exp(log_std);
            double xi = std::normal_distribution<double>(0.0, 1.0)(rng_);
            double u = mu + sigma * xi;
            out.action[static_cast<std::size_t>(k)] = std::tanh(u);
            out.log_prob += -0.5 * xi * xi - half_log_two_pi - log_std -
                            detail::log_one_minus_tanh_sq(u);
        }
        return out;
    }

    // P(arm 0) of the induced sign distribution at a state, dimension 0;
    // tanh preserves sign, so this is Phi(-mu / sigma).
    double sign_probability(const std::vector<double>& state) {
        std::vector<double> head = actor_.forward(state);
        double mu = head[0];
        double sigma = std::exp(head[3]);
        return 0.5 * std::erfc(mu / (sigma * std::sqrt(2.0)));
    }

    double last_critic_loss() const { return last_critic_loss_; }
    ReplayBuffer& buffer() { return buffer_; }
    Mlp& actor() { return actor_; }
    Mlp& critic1() { return critic1_; }
    Mlp& critic2() { return critic2_; }
    Mlp& critic1_target() { return critic1_target_; }
    Mlp& critic2_target() { return critic2_target_; }
    const SacConfig& config() const { return cfg_; }

private:
    AgentContext ctx_;
    SacConfig cfg_;
    std::mt19937_64 rng_;
    Mlp actor_, critic1_, critic1_target_, critic2_, critic2_target_;
    AdamState actor_opt_, critic1_opt_, critic2_opt_;
    ReplayBuffer buffer_;
    long env_steps_ = 0;
    long critic_updates_ = 0;
    double last_critic_loss_ = 0.0;
    ForwardCache scratch_a_, scratch_b_, actor_cache_, c1_cache_, c2_cache_, sample_cache_;
    MlpGradients g1_, g2_, actor_grads_;
    std::vector<double> sa_, dq_dinput_;
};

// ---------------------------------------------------------------------------
// Factory with named hyperparameter overrides
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void apply_knob(const nlohmann::json& overrides, const char* key, T& out,
                std::vector<std::string>& unknown) {
    if (overrides.contains(key)) out = overrides.at(key).get<T>();
    (void)unknown;
}

inline void reject_unknown(const nlohmann::json& overrides,
                           std::initializer_list<const char*> known,
                           const std::string& algorithm) {
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) { ok = true; break; }
        if (!ok)
            throw std::invalid_argument("unknown " + algorithm + " hyperparameter '" + it.key() + "'");
    }
}

}  // namespace detail

inline const std::vector<std::string>& algorithm_names() {
    static const std::vector<std::string> names{"random", "qlearn", "ddpg", "td3", "sac"};
    return names;
}

inline std::unique_ptr<Agent> make_agent(const std::string& algorithm, const AgentContext& ctx,
                                         const nlohmann::json& overrides, std::uint64_t seed) {
    std::vector<std::string> unknown;
    if (algorithm == "random") {
        detail::reject_unknown(overrides, {}, algorithm);
        return std::make_unique<RandomAgent>(ctx, seed);
    }
    if (algorithm == "qlearn") {
        detail::reject_unknown(overrides, {"epsilon", "gamma", "alpha"}, algorithm);
        QLearnConfig cfg;
        detail::apply_knob(overrides, "epsilon", cfg.epsilon, unknown);
        detail::apply_knob(overrides, "gamma", cfg.gamma, unknown);
        detail::apply_knob(overrides, "alpha", cfg.alpha, unknown);
        return std::make_unique<QLearningAgent>(ctx, cfg, seed);
    }
    if (algorithm == "ddpg") {
        detail::reject_unknown(overrides,
                               {"learning_rate", "gamma", "tau", "random_exploration",
                                "nb_train_steps", "exploration_noise", "buffer_capacity",
                                "batch_size"},
                               algorithm);
        DdpgConfig cfg;
        detail::apply_knob(overrides, "learning_rate", cfg.learning_rate, unknown);
        detail::apply_knob(overrides, "gamma", cfg.gamma, unknown);
        detail::apply_knob(overrides, "tau", cfg.tau, unknown);
        detail::apply_knob(overrides, "random_exploration", cfg.random_exploration, unknown);
        detail::apply_knob(overrides, "nb_train_steps", cfg.nb_train_steps, unknown);
        detail::apply_knob(overrides, "exploration_noise", cfg.exploration_noise, unknown);
        detail::apply_knob(overrides, "buffer_capacity", cfg.buffer_capacity, unknown);
        detail::apply_knob(overrides, "batch_size", cfg.batch_size, unknown);
        return std::make_unique<DdpgAgent>(ctx, cfg, seed);
    }
    if (algorithm == "td3") {
        detail::reject_unknown(overrides,
                               {"learning_rate", "gamma", "tau", "random_exploration",
                                "train_frequency", "policy_delay", "target_noise_sigma",
                                "target_noise_clip", "exploration_noise", "buffer_capacity",
                                "batch_size"},
                               algorithm);
        Td3Config cfg;
        detail::apply_knob(overrides, "learning_rate", cfg.learning_rate, unknown);
        detail::apply_knob(overrides, "gamma", cfg.gamma, unknown);
        detail::apply_knob(overrides, "tau", cfg.tau, unknown);
        detail::apply_knob(overrides, "random_exploration", cfg.random_exploration, unknown);
        detail::apply_knob(overrides, "train_frequency", cfg.train_frequency, unknown);
        detail::apply_knob(overrides, "policy_delay", cfg.policy_delay, unknown);
        detail::apply_knob(overrides, "target_noise_sigma", cfg.target_noise_sigma, unknown);
        detail::apply_knob(overrides, "target_noise_clip", cfg.target_noise_clip, unknown);
        detail::apply_knob(overrides, "exploration_noise", cfg.exploration_noise, unknown);
        detail::apply_knob(overrides, "buffer_capacity", cfg.buffer_capacity, unknown);
        detail::apply_knob(overrides, "batch_size", cfg.batch_size, unknown);
        return std::make_unique<Td3Agent>(ctx, cfg, seed);
    }
    if (algorithm == "sac") {
        detail::reject_unknown(overrides,
                               {"learning_rate", "gamma", "tau", "train_frequency",
                                "target_update_interval", "entropy_coefficient",
                                "buffer_capacity", "batch_size"},
                               algorithm);
        SacConfig cfg;
        detail::apply_knob(overrides, "learning_rate", cfg.learning_rate, unknown);
        detail::apply_knob(overrides, "gamma", cfg.gamma, unknown);
        detail::apply_knob(overrides, "tau", cfg.tau, unknown);
        detail::apply_knob(overrides, "train_frequency", cfg.train_frequency, unknown);
        detail::apply_knob(overrides, "target_update_interval", cfg.target_update_interval, unknown);
        detail::apply_knob(overrides, "entropy_coefficient", cfg.entropy_coefficient, unknown);
        detail::apply_knob(overrides, "buffer_capacity", cfg.buffer_capacity, unknown);
        detail::apply_knob(overrides, "batch_size", cfg.batch_size, unknown);
        return std::make_unique<SacAgent>(ctx, cfg, seed);
    }
    throw std::invalid_argument("unknown algorithm '" + algorithm + "'");
}

}  // namespace fatesim
