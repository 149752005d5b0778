// fatesim/stats.hpp - AUC, rank-sum testing, Holm-Bonferroni, Vargha-Delaney
// A12, and a value-iteration oracle for agent verification
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "fatesim/env.hpp"
#include "fatesim/model.hpp"

namespace fatesim {

// Trapezoidal area under a per-step curve, over the step index.
inline double auc(const std::vector<double>& curve) {
    if (curve.empty()) throw std::invalid_argument("auc of an empty curve");
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) area += 0.5 * (curve[i - 1] + curve[i]);
    return area;
}

namespace detail {

// Midranks of the pooled sample, doubled so ties stay integral.
inline std::vector<long long> doubled_midranks(const std::vector<double>& pooled_sorted) {
    std::vector<long long> out(pooled_sorted.size());
    std::size_t i = 0;
    while (i < pooled_sorted.size()) {
        std::size_t j = i;
        while (j + 1 < pooled_sorted.size() && pooled_sorted[j + 1] == pooled_sorted[i]) ++j;
        // positions i..j (0-based) share rank ((i+1) + (j+1)) / 2
        long long doubled = static_cast<long long>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) out[k] = doubled;
        i = j + 1;
    }
    return out;
}

}  // namespace detail

// Two-sided Mann-Whitney / Wilcoxon rank-sum p-value. Exact by enumeration of
// the rank-sum distribution when n + m <= 20; otherwise a normal
// approximation with midrank tie correction and continuity correction.
inline double wilcoxon_rank_sum(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.empty() || ys.empty()) throw std::invalid_argument("wilcoxon needs nonempty samples");
    const std::size_t n = xs.size(), m = ys.size(), total = n + m;

    std::vector<double> pooled;
    pooled.reserve(total);
    pooled.insert(pooled.end(), xs.begin(), xs.end());
    pooled.insert(pooled.end(), ys.begin(), ys.end());
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    std::vector<double> sorted(total);
    for (std::size_t i = 0; i < total; ++i) sorted[i] = pooled[order[i]];
    std::vector<long long> ranks2 = detail::doubled_midranks(sorted);

    long long w2_obs = 0;  // doubled rank sum of xs
    for (std::size_t i = 0; i < total; ++i)
        if (order[i] < n) w2_obs += ranks2[i];
    const long long e2 = static_cast<long long>(n) * static_cast<long long>(total + 1);
    const long long dev_obs = std::llabs(w2_obs - e2);

    if (total <= 20) {
        // Count-by-sum dynamic program over the doubled ranks.
        long long max_sum = std::accumulate(ranks2.begin(), ranks2.end(), 0LL);
        std::vector<std::vector<std::uint64_t>> dp(
            n + 1, std::vector<std::uint64_t>(static_cast<std::size_t>(max_sum) + 1, 0));
        dp[0][0] = 1;
        for (long long r : ranks2) {
            for (std::size_t k = std::min(n, xs.size()); k-- > 0;) {
                for (long long s = max_sum - r; s >= 0; --s) {
                    if (dp[k][static_cast<std::size_t>(s)])
                        dp[k + 1][static_cast<std::size_t>(s + r)] +=
                            dp[k][static_cast<std::size_t>(s)];
                }
            }
        }
        std::uint64_t extreme = 0, all = 0;
        for (long long s = 0; s <= max_sum; ++s) {
            std::uint64_t count = dp[n][static_cast<std::size_t>(s)];
            if (!count) continue;
            all += count;
            if (std::llabs(s - e2) >= dev_obs) extreme += count;
        }
        return static_cast<double>(extreme) / static_cast<double>(all);
    }

    // Normal approximation with tie correction.
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < total) {
        std::size_t j = i;
        while (j + 1 < total && sorted[j + 1] == sorted[i]) ++j;
        double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    double nn = static_cast<double>(n), mm = static_cast<double>(m), tt = static_cast<double>(total);
    double variance = nn * mm / 12.0 *
                      ((tt + 1.0) - tie_term / (tt * (tt - 1.0)));
    if (variance <= 0.0) return 1.0;
    double dev = static_cast<double>(dev_obs) / 2.0;  // undo doubling
    double z = std::max(0.0, dev - 0.5) / std::sqrt(variance);
    return std::erfc(z / std::sqrt(2.0));
}

// Holm step-down rejection flags, returned in input order.
inline std::vector<bool> holm_bonferroni(const std::vector<double>& p_values, double alpha = 0.05) {
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    std::vector<bool> reject(m, false);
    for (std::size_t i = 0; i < m; ++i) {
        double threshold = alpha / static_cast<double>(m - i);
        if (p_values[order[i]] <= threshold) reject[order[i]] = true;
        else break;
    }
    return reject;
}

enum class EffectMagnitude { Negligible, Small, Medium, Large };

inline const char* to_string(EffectMagnitude m) {
    switch (m) {
        case EffectMagnitude::Large: return "L";
        case EffectMagnitude::Medium: return "M";
        case EffectMagnitude::Small: return "S";
        default: return "N";
    }
}

struct EffectSize {
    double a12 = 0.5;
    EffectMagnitude magnitude = EffectMagnitude::Negligible;
};

// Vargha-Delaney A12 = P(x > y) + 0.5 P(x = y) over all pairs.
inline EffectSize a12(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.empty() || ys.empty()) throw std::invalid_argument("a12 needs nonempty samples");
    double wins = 0.0;
    for (double x : xs)
        for (double y : ys) {
            if (x > y) wins += 1.0;
            else if (x == y) wins += 0.5;
        }
    EffectSize e;
    e.a12 = wins / (static_cast<double>(xs.size()) * static_cast<double>(ys.size()));
    double d = std::abs(e.a12 - 0.5);
    if (d >= 0.21) e.magnitude = EffectMagnitude::Large;
    else if (d >= 0.14) e.magnitude = EffectMagnitude::Medium;
    else if (d >= 0.06) e.magnitude = EffectMagnitude::Small;
    else e.magnitude = EffectMagnitude::Negligible;
    return e;
}

// ---------------------------------------------------------------------------
// Value-iteration oracle
// ---------------------------------------------------------------------------

// Expanded state: (node index, bitmask of nodes visited this episode).
// Global variables are frozen at their initial values, so this oracle is
// meant for small fixture models whose guards do not change during a run.
struct ValueIterationResult {
    using State = std::pair<int, std::uint64_t>;

    std::map<State, double> v;
    std::map<std::tuple<int, std::uint64_t, int>, double> q;  // (node, visited, slot)
    std::vector<double> residuals;
    int slot_count = 0;

    double value(int node, std::uint64_t visited) const {
        auto it = v.find({node, visited});
        if (it == v.end()) throw std::out_of_range("state not reachable in oracle");
        return it->second;
    }

    double action_value(int node, std::uint64_t visited, int slot) const {
        auto it = q.find({node, visited, slot});
        if (it == q.end()) throw std::out_of_range("action not available in oracle state");
        return it->second;
    }

    // Greedy slot, ties to the lower index.
    int greedy_slot(int node, std::uint64_t visited) const {
        int best = -1;
        double best_value = -std::numeric_limits<double>::infinity();
        for (const auto& [key, value] : q) {
            if (std::get<0>(key) != node || std::get<1>(key) != visited) continue;
            if (value > best_value) {
                best_value = value;
                best = std::get<2>(key);
            }
        }
        return best;
    }
};

inline ValueIterationResult value_iteration_oracle(const AppModel& model, double gamma,
                                                   const RewardParams& rewards,
                                                   double tolerance = 1e-8,
                                                   std::size_t max_pairs = 10000) {
    if (model.nodes.size() > 64) throw std::invalid_argument("oracle supports at most 64 nodes");
    const VarStore vars = model.initial_vars();
    const int system_base = model.max_widget_slots;

    struct Edge {
        int slot;
        int next_node;           // -1 when absorbing (crash)
        std::uint64_t next_mask;  // ignored when absorbing
        double reward;
    };
    using State = ValueIterationResult::State;

    std::map<State, std::vector<Edge>> edges;
    int initial = model.node_position(model.initial_node);
    State start{initial, std::uint64_t{1} << initial};
    std::vector<State> frontier{start};
    edges[start];
    std::size_t pairs = 0;

    while (!frontier.empty()) {
        State s = frontier.back();
        frontier.pop_back();
        const Node& node = model.nodes[static_cast<std::size_t>(s.first)];
        std::vector<Edge>& out = edges[s];
        if (!out.empty()) continue;

        auto enabled = enabled_transitions(model, node.node_id, vars);
        for (std::size_t slot = 0; slot < node.transitions.size(); ++slot) {
            const Transition* t = &node.transitions[slot];
            if (std::find(enabled.begin(), enabled.end(), t) == enabled.end()) continue;
            Edge e;
            e.slot = static_cast<int>(slot);
            const Node* dest = t->is_external() ? nullptr : model.find_node(t->destination);
            if (t->crash || (dest && dest->crash_node)) {
                e.next_node = -1;
                e.next_mask = 0;
                e.reward = rewards.gamma1;
            } else if (t->is_external() || (dest && dest->external)) {
                e.next_node = s.first;
                e.next_mask = s.second;
                e.reward = -rewards.gamma2;
            } else {
                int d = model.node_position(t->destination);
                std::uint64_t bit = std::uint64_t{1} << d;
                bool fresh = (s.second & bit) == 0;
                e.next_node = d;
                e.next_mask = s.second | bit;
                e.reward = fresh ? rewards.gamma1 : -rewards.gamma3;
            }
            out.push_back(e);
        }
        // The two system slots stay put.
        for (int k = 0; k < 2; ++k)
            out.push_back({system_base + k, s.first, s.second, -rewards.gamma3});

        pairs += out.size();
        if (pairs > max_pairs)
            throw std::invalid_argument("oracle state-action space exceeds " +
                                        std::to_string(max_pairs) + " pairs");
        for (const Edge& e : out) {
            if (e.next_node < 0) continue;
            State next{e.next_node, e.next_mask};
            if (!edges.count(next)) {
                edges[next];
                frontier.push_back(next);
            }
        }
    }

    ValueIterationResult result;
    result.slot_count = system_base + 2;
    for (const auto& [s, _] : edges) result.v[s] = 0.0;

    double residual = std::numeric_limits<double>::infinity();
    while (residual > tolerance) {
        residual = 0.0;
        std::map<State, double> next_v = result.v;
        for (const auto& [s, out] : edges) {
            double best = -std::numeric_limits<double>::infinity();
            for (const Edge& e : out) {
                double cont = e.next_node < 0 ? 0.0 : result.v.at({e.next_node, e.next_mask});
                best = std::max(best, e.reward + gamma * cont);
            }
            next_v[s] = best;
            residual = std::max(residual, std::abs(best - result.v.at(s)));
        }
        result.v = std::move(next_v);
        result.residuals.push_back(residual);
    }

    for (const auto& [s, out] : edges) {
        for (const Edge& e : out) {
            double cont = e.next_node < 0 ? 0.0 : result.v.at({e.next_node, e.next_mask});
            result.q[{s.first, s.second, e.slot}] = e.reward + gamma * cont;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Comparison report (winner vs the rest, Holm-corrected, A12 when significant)
// ---------------------------------------------------------------------------

struct PairwiseComparison {
    std::string algorithm;  // compared against the winner
    double p_value = 1.0;
    bool significant = false;          // after Holm correction
    std::optional<EffectSize> effect;  // reported only when significant
};

struct ComparisonReport {
    double alpha = 0.05;
    std::string winner;
    std::map<std::string, std::vector<double>> auc_by_algorithm;
    std::map<std::string, double> mean_auc;
    std::vector<PairwiseComparison> pairwise;
};

inline ComparisonReport compare(const std::map<std::string, std::vector<double>>& auc_by_algorithm,
                                double alpha = 0.05) {
    if (auc_by_algorithm.size() < 2)
        throw std::invalid_argument("compare needs at least two algorithms");
    for (const auto& [name, aucs] : auc_by_algorithm)
        if (aucs.size() < 2)
            throw std::invalid_argument("algorithm '" + name + "' has fewer than two runs");

    ComparisonReport report;
    report.alpha = alpha;
    report.auc_by_algorithm = auc_by_algorithm;
    for (const auto& [name, aucs] : auc_by_algorithm) {
        double mean = std::accumulate(aucs.begin(), aucs.end(), 0.0) /
                      static_cast<double>(aucs.size());
        report.mean_auc[name] = mean;
        if (report.winner.empty() || mean > report.mean_auc[report.winner]) report.winner = name;
    }

    const std::vector<double>& winner_aucs = auc_by_algorithm.at(report.winner);
    std::vector<double> pvalues;
    for (const auto& [name, aucs] : auc_by_algorithm) {
        if (name == report.winner) continue;
        PairwiseComparison pc;
        pc.algorithm = name;
        pc.p_value = wilcoxon_rank_sum(winner_aucs, aucs);
        report.pairwise.push_back(pc);
        pvalues.push_back(pc.p_value);
    }
    std::vector<bool> rejected = holm_bonferroni(pvalues, alpha);
    for (std::size_t i = 0; i < report.pairwise.size(); ++i) {
        report.pairwise[i].significant = rejected[i];
        if (rejected[i])
            report.pairwise[i].effect =
                a12(winner_aucs, auc_by_algorithm.at(report.pairwise[i].algorithm));
    }
    return report;
}

}  // namespace fatesim
