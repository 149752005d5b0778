// Shared hand-built models for agent and statistics tests.
#pragma once

#include <string>

#include "fatesim/model.hpp"

namespace fatesim::testfx {

// Deterministic n-node chain: node i has [advance -> i+1, stay -> i], the
// last node only [stay]. Forward-only, so the per-episode visited set is
// implied by the node and tabular methods see a Markov reward.
inline AppModel chain_model(int n, int pool_size = 1) {
    nlohmann::ordered_json j;
    j["global_vars"] = nlohmann::json::array();
    j["nodes"] = nlohmann::json::array();
    for (int i = 0; i < n; ++i) {
        nlohmann::ordered_json node;
        node["node_id"] = "chain_" + std::to_string(i);
        auto transitions = nlohmann::json::array();
        int tid = 0;
        if (i + 1 < n) {
            transitions.push_back({{"transition_id", tid++},
                                   {"type", "button"},
                                   {"active", true},
                                   {"guard", nullptr},
                                   {"set", nullptr},
                                   {"destination", "chain_" + std::to_string(i + 1)}});
        }
        transitions.push_back({{"transition_id", tid++},
                               {"type", "button"},
                               {"active", true},
                               {"guard", nullptr},
                               {"set", nullptr},
                               {"destination", "chain_" + std::to_string(i)}});
        node["transitions"] = transitions;
        j["nodes"].push_back(node);
    }
    j["initial_node"] = "chain_0";
    auto pool = nlohmann::json::array();
    for (int s = 0; s < pool_size; ++s) pool.push_back("s" + std::to_string(s));
    j["string_pool"] = pool;
    j["max_widget_slots"] = 2;
    return parse_model(j.dump());
}

// Two-node chain with a single action: start -> end, then self loops.
inline AppModel two_node_chain() {
    const char* doc = R"({
      "global_vars": [],
      "nodes": [
        {"node_id": "start", "transitions": [
          {"transition_id": 0, "type": "button", "active": true, "guard": null, "set": null, "destination": "end"}]},
        {"node_id": "end", "transitions": [
          {"transition_id": 0, "type": "button", "active": true, "guard": null, "set": null, "destination": "end"}]}],
      "initial_node": "start", "string_pool": ["x"], "max_widget_slots": 1})";
    return parse_model(doc);
}

}  // namespace fatesim::testfx
