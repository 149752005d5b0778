// fatesim/env.hpp - episodic MDP environment over an FSM app model
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fatesim/model.hpp"

namespace fatesim {

struct Observation {
    std::vector<std::uint8_t> activity_onehot;  // length |nodes|
    std::vector<std::uint8_t> widget_mask;      // length max_widget_slots

    std::size_t size() const { return activity_onehot.size() + widget_mask.size(); }

    // Flat 0/1 vector, activities first: the network input.
    std::vector<double> as_input() const {
        std::vector<double> v;
        v.reserve(size());
        for (auto b : activity_onehot) v.push_back(b ? 1.0 : 0.0);
        for (auto b : widget_mask) v.push_back(b ? 1.0 : 0.0);
        return v;
    }

    // Compact stable key for tabular methods.
    std::string key() const {
        std::string k;
        k.reserve(size());
        for (auto b : activity_onehot) k += b ? '1' : '0';
        for (auto b : widget_mask) k += b ? '1' : '0';
        return k;
    }

    bool operator==(const Observation& o) const = default;
};

// Continuous form of the 3-dimensional action, each component in [-1, 1].
struct ContinuousAction {
    std::array<double, 3> v{0.0, 0.0, 0.0};
};

// Decoded form: slot index (widget slot or one of the two trailing system
// slots), string-pool index, mode bit.
struct DiscreteAction {
    int slot = 0;
    int string_index = 0;
    int mode = 0;

    bool operator==(const DiscreteAction& o) const = default;
    auto operator<=>(const DiscreteAction& o) const = default;
};

struct RewardParams {
    double gamma1 = 1000.0;  // new activity this episode, or crash
    double gamma2 = 100.0;   // left the app under test (negated)
    double gamma3 = 1.0;     // anything else (negated)

    // gamma1 >> gamma2 >> gamma3 > 0
    bool valid() const {
        return gamma3 > 0.0 && gamma1 >= 10.0 * gamma2 && gamma1 >= 100.0 * gamma3 &&
               gamma2 >= 10.0 * gamma3;
    }
};

struct CrashIdentity {
    std::string node_id;
    int transition_id = 0;

    auto operator<=>(const CrashIdentity&) const = default;
};

struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool episode_done = false;
    std::optional<CrashIdentity> crash;
    std::string info;  // executed transition id ("t<N>"), system action, or "no-op"
};

struct EpisodeState {
    int step_in_episode = 0;
    std::set<std::string> visited_this_episode;
    std::set<std::string> visited_overall;
    VarStore vars;
    bool internet_on = false;
    bool rotated = false;
};

// One-hot over the model's node ordering plus the per-slot availability mask.
inline Observation encode_observation(const AppModel& model, const std::string& node_id,
                                      const std::vector<const Transition*>& enabled) {
    Observation obs;
    obs.activity_onehot.assign(model.nodes.size(), 0);
    int pos = model.node_position(node_id);
    if (pos < 0) throw ModelError("unknown node '" + node_id + "'");
    obs.activity_onehot[static_cast<std::size_t>(pos)] = 1;

    obs.widget_mask.assign(static_cast<std::size_t>(model.max_widget_slots), 0);
    const Node& node = model.nodes[static_cast<std::size_t>(pos)];
    for (std::size_t slot = 0; slot < node.transitions.size(); ++slot) {
        const Transition* t = &node.transitions[slot];
        for (const Transition* e : enabled) {
            if (e == t) {
                obs.widget_mask[slot] = 1;
                break;
            }
        }
    }
    return obs;
}

namespace detail {

// index = floor((raw + 1)/2 * n), clamped to [0, n-1]
inline int bucket(double raw, int n) {
    double x = (raw + 1.0) / 2.0 * static_cast<double>(n);
    int idx = static_cast<int>(std::floor(x));
    if (idx < 0) idx = 0;
    if (idx >= n) idx = n - 1;
    return idx;
}

}  // namespace detail

// Maps a raw triple to a discrete action. An unavailable widget slot is
// replaced by the nearest available slot (ties to the lower index); the two
// trailing system slots always count as available.
inline DiscreteAction decode_action(const ContinuousAction& raw, const Observation& obs,
                                    int pool_size) {
    const int widget_slots = static_cast<int>(obs.widget_mask.size());
    const int n_slots = widget_slots + 2;
    DiscreteAction a;
    a.slot = detail::bucket(raw.v[0], n_slots);
    a.string_index = detail::bucket(raw.v[1], pool_size);
    a.mode = detail::bucket(raw.v[2], 2);

    auto available = [&](int slot) {
        if (slot >= widget_slots) return true;  // system slots
        return obs.widget_mask[static_cast<std::size_t>(slot)] != 0;
    };
    if (!available(a.slot)) {
        int best = -1;
        int best_dist = n_slots + 1;
        for (int s = 0; s < n_slots; ++s) {
            if (!available(s)) continue;
            int dist = std::abs(s - a.slot);
            if (dist < best_dist) {
                best_dist = dist;
                best = s;
            }
        }
        a.slot = best;  // always >= 0: system slots exist
    }
    return a;
}

// The environment. One instance is single-threaded; distinct instances share
// nothing mutable and may run concurrently.
class SimEnv {
public:
    explicit SimEnv(const AppModel& model, RewardParams rewards = {}, int episode_length = 250)
        : model_(&model), rewards_(rewards), episode_length_(episode_length) {
        if (!rewards_.valid())
            throw std::invalid_argument("reward params must satisfy gamma1 >> gamma2 >> gamma3 > 0");
        if (episode_length_ <= 0) throw std::invalid_argument("episode length must be positive");
    }

    // Restarts the app: variables and per-episode bookkeeping reset, overall
    // coverage is retained for the remainder of the run.
    Observation reset(std::uint64_t seed = 0) {
        seed_ = seed;
        state_.vars = model_->initial_vars();
        state_.step_in_episode = 0;
        state_.internet_on = false;
        state_.rotated = false;
        state_.visited_this_episode.clear();
        current_node_ = model_->initial_node;
        state_.visited_this_episode.insert(current_node_);
        state_.visited_overall.insert(current_node_);
        terminal_ = false;
        started_ = true;
        sync_toggle_vars();
        return observe();
    }

    Observation observe() const {
        return encode_observation(*model_, current_node_,
                                  enabled_transitions(*model_, current_node_, state_.vars));
    }

    DiscreteAction decode(const ContinuousAction& raw) const {
        return decode_action(raw, observe(), static_cast<int>(model_->string_pool.size()));
    }

    StepResult step(const DiscreteAction& action) {
        if (!started_) throw std::logic_error("step() before reset()");
        if (terminal_) throw std::logic_error("step() on a terminal episode; call reset()");

        StepResult result;
        const int widget_slots = model_->max_widget_slots;

        if (action.slot >= widget_slots) {
            // System actions toggle global booleans and never change node.
            if (action.slot == widget_slots) {
                state_.internet_on = !state_.internet_on;
                result.info = "system:internet";
            } else {
                state_.rotated = !state_.rotated;
                result.info = "system:rotate";
            }
            sync_toggle_vars();
            result.reward = -rewards_.gamma3;
        } else {
            const Node& node = *model_->find_node(current_node_);
            const Transition* t = nullptr;
            if (action.slot >= 0 && action.slot < static_cast<int>(node.transitions.size()))
                t = &node.transitions[static_cast<std::size_t>(action.slot)];
            bool fire = t != nullptr && t->active &&
                        (!t->guard || eval_guard(*t->guard, state_.vars));
            // Scroll slots use the mode bit as direction; direction 1 hits the
            // top of the list and stays put.
            bool scroll_back = fire && t->kind == TransitionKind::Scroll && action.mode == 1;
            if (!fire) {
                result.reward = -rewards_.gamma3;
                result.info = "no-op";
            } else {
                result.info = "t" + std::to_string(t->transition_id);
                std::optional<std::string> input;
                if (t->kind == TransitionKind::TextField) {
                    int idx = action.string_index;
                    if (idx < 0 || idx >= static_cast<int>(model_->string_pool.size()))
                        throw std::out_of_range("string index out of pool range");
                    input = model_->string_pool[static_cast<std::size_t>(idx)];
                }
                if (!t->set.empty()) state_.vars = exec_set(t->set, state_.vars, input);

                const Node* dest = t->is_external() ? nullptr : model_->find_node(t->destination);
                bool crash = t->crash || (dest && dest->crash_node);
                bool external = t->is_external() || (dest && dest->external);
                if (crash) {
                    result.reward = rewards_.gamma1;
                    result.crash = CrashIdentity{current_node_, t->transition_id};
                    terminal_ = true;
                } else if (external) {
                    // Outside the app under test: penalty, then auto-return.
                    result.reward = -rewards_.gamma2;
                } else if (scroll_back) {
                    result.reward = -rewards_.gamma3;
                } else {
                    const std::string& next = t->destination;
                    if (!state_.visited_this_episode.count(next)) {
                        result.reward = rewards_.gamma1;
                        state_.visited_this_episode.insert(next);
                        state_.visited_overall.insert(next);
                    } else {
                        result.reward = -rewards_.gamma3;
                    }
                    current_node_ = next;
                }
            }
        }

        ++state_.step_in_episode;
        if (state_.step_in_episode >= episode_length_) terminal_ = true;
        result.episode_done = terminal_;
        result.observation = observe();
        return result;
    }

    // 100 * |visited non-external| / |non-external nodes|
    double coverage() const { return coverage(state_, *model_); }

    static double coverage(const EpisodeState& state, const AppModel& model) {
        int total = model.non_external_count();
        if (total == 0) return 0.0;
        int visited = 0;
        for (const std::string& id : state.visited_overall) {
            const Node* n = model.find_node(id);
            if (n && !n->external) ++visited;
        }
        return 100.0 * static_cast<double>(visited) / static_cast<double>(total);
    }

    const EpisodeState& episode_state() const { return state_; }
    const std::string& current_node() const { return current_node_; }
    const AppModel& model() const { return *model_; }
    const RewardParams& rewards() const { return rewards_; }
    int episode_length() const { return episode_length_; }
    bool terminal() const { return terminal_; }
    std::uint64_t seed() const { return seed_; }
    int pool_size() const { return static_cast<int>(model_->string_pool.size()); }
    int slot_count() const { return model_->max_widget_slots + 2; }

private:
    void sync_toggle_vars() {
        // Models may declare these as int variables so guards can read them.
        auto it = state_.vars.find("internet_on");
        if (it != state_.vars.end()) it->second = static_cast<std::int64_t>(state_.internet_on ? 1 : 0);
        it = state_.vars.find("rotated");
        if (it != state_.vars.end()) it->second = static_cast<std::int64_t>(state_.rotated ? 1 : 0);
    }

    const AppModel* model_;
    RewardParams rewards_;
    int episode_length_;
    EpisodeState state_;
    std::string current_node_;
    bool terminal_ = false;
    bool started_ = false;
    std::uint64_t seed_ = 0;
};

// Free-function form used by spec-level tests.
inline double coverage(const EpisodeState& state, const AppModel& model) {
    return SimEnv::coverage(state, model);
}

}  // namespace fatesim
