// fatesim/model.hpp - FSM app models: types, JSON parsing, validation
#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "fatesim/guard.hpp"
#include "fatesim/value.hpp"

namespace fatesim {

// Destination marker for transitions that leave the app under test.
inline constexpr const char* kExternalMarker = "__external__";

class ModelError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TransitionKind { Button, LongButton, TextField, Scroll, System };

inline const char* to_string(TransitionKind k) {
    switch (k) {
        case TransitionKind::Button: return "button";
        case TransitionKind::LongButton: return "long_button";
        case TransitionKind::TextField: return "text_field";
        case TransitionKind::Scroll: return "scroll";
        default: return "system";
    }
}

inline std::optional<TransitionKind> transition_kind_from(const std::string& s) {
    if (s == "button") return TransitionKind::Button;
    if (s == "long_button") return TransitionKind::LongButton;
    if (s == "text_field") return TransitionKind::TextField;
    if (s == "scroll") return TransitionKind::Scroll;
    if (s == "system") return TransitionKind::System;
    return std::nullopt;
}

struct GlobalVar {
    std::string name;
    Value value;  // integer or text
};

struct Transition {
    int transition_id = 0;
    TransitionKind kind = TransitionKind::Button;
    bool active = true;
    std::optional<std::string> guard_text;
    ExprPtr guard;  // parsed form of guard_text
    std::vector<Assignment> set;
    std::string destination;
    bool crash = false;

    bool is_external() const { return destination == kExternalMarker; }
};

struct Node {
    std::string node_id;
    bool external = false;
    bool crash_node = false;
    std::vector<Transition> transitions;  // order defines widget-slot indices
};

struct AppModel {
    std::vector<GlobalVar> global_vars;
    std::vector<Node> nodes;
    std::string initial_node;
    std::vector<std::string> string_pool;
    int max_widget_slots = 0;

    const Node* find_node(const std::string& id) const {
        auto it = node_index_.find(id);
        return it == node_index_.end() ? nullptr : &nodes[it->second];
    }

    int node_position(const std::string& id) const {
        auto it = node_index_.find(id);
        return it == node_index_.end() ? -1 : static_cast<int>(it->second);
    }

    Declarations declarations() const {
        Declarations d;
        for (const GlobalVar& v : global_vars)
            d[v.name] = type_of(v.value) == ValueType::Text ? ValueType::Text : ValueType::Integer;
        return d;
    }

    VarStore initial_vars() const {
        VarStore s;
        for (const GlobalVar& v : global_vars) s[v.name] = v.value;
        return s;
    }

    int non_external_count() const {
        int n = 0;
        for (const Node& node : nodes)
            if (!node.external) ++n;
        return n;
    }

    void rebuild_index() {
        node_index_.clear();
        for (std::size_t i = 0; i < nodes.size(); ++i) node_index_[nodes[i].node_id] = i;
    }

private:
    std::unordered_map<std::string, std::size_t> node_index_;
};

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity;
    std::string message;
};

namespace detail {

inline void bind_transition_exprs(Transition& t, const std::string& node_id,
                                  const Declarations& decls,
                                  const std::vector<std::string>& raw_set) {
    if (t.guard_text) {
        try {
            t.guard = parse_expr(*t.guard_text, decls, /*allow_input=*/false);
        } catch (const ExprError& e) {
            throw ModelError("transition " + std::to_string(t.transition_id) + " of node '" +
                             node_id + "': guard \"" + *t.guard_text + "\": " + e.what());
        }
        if (t.guard->type != ValueType::Boolean)
            throw ModelError("transition " + std::to_string(t.transition_id) + " of node '" +
                             node_id + "': guard \"" + *t.guard_text + "\" is not boolean");
    }
    bool allow_input = t.kind == TransitionKind::TextField;
    for (const std::string& text : raw_set) {
        try {
            t.set.push_back(parse_assignment(text, decls, allow_input));
        } catch (const ExprError& e) {
            throw ModelError("transition " + std::to_string(t.transition_id) + " of node '" +
                             node_id + "': set \"" + text + "\": " + e.what());
        }
    }
}

}  // namespace detail

// Parses the JSON model document. Hard structural problems (syntax, unknown
// destinations, duplicate identifiers, guard parse failures) throw; softer
// invariant checks live in validate_model.
inline AppModel parse_model(const std::string& document) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError(std::string("syntax error: ") + e.what());
    }

    AppModel model;
    try {
        if (!j.is_object()) throw ModelError("top level must be an object");
        for (const auto& gv : j.value("global_vars", nlohmann::json::array())) {
            GlobalVar v;
            v.name = gv.at("name").get<std::string>();
            const auto& val = gv.at("value");
            if (val.is_string()) v.value = val.get<std::string>();
            else if (val.is_number_integer()) v.value = val.get<std::int64_t>();
            else throw ModelError("global_vars '" + v.name + "': value must be int or string");
            model.global_vars.push_back(std::move(v));
        }
        model.initial_node = j.at("initial_node").get<std::string>();
        model.string_pool = j.value("string_pool", std::vector<std::string>{});
        model.max_widget_slots = j.value("max_widget_slots", 0);

        Declarations decls;
        std::set<std::string> var_names;
        for (const GlobalVar& v : model.global_vars) {
            if (!var_names.insert(v.name).second)
                throw ModelError("duplicate global variable '" + v.name + "'");
            decls[v.name] = type_of(v.value) == ValueType::Text ? ValueType::Text : ValueType::Integer;
        }

        if (!j.contains("nodes") || !j["nodes"].is_array() || j["nodes"].empty())
            throw ModelError("empty model: no nodes");

        for (const auto& jn : j["nodes"]) {
            Node node;
            node.node_id = jn.at("node_id").get<std::string>();
            node.external = jn.value("external", false);
            node.crash_node = jn.value("crash_node", false);
            for (const auto& jt : jn.value("transitions", nlohmann::json::array())) {
                Transition t;
                t.transition_id = jt.at("transition_id").get<int>();
                std::string kind = jt.at("type").get<std::string>();
                auto parsed_kind = transition_kind_from(kind);
                if (!parsed_kind)
                    throw ModelError("transition " + std::to_string(t.transition_id) + " of node '" +
                                     node.node_id + "': unknown type '" + kind + "'");
                t.kind = *parsed_kind;
                t.active = jt.at("active").get<bool>();
                if (jt.contains("guard") && !jt["guard"].is_null())
                    t.guard_text = jt["guard"].get<std::string>();
                std::vector<std::string> raw_set;
                if (jt.contains("set") && !jt["set"].is_null())
                    raw_set = jt["set"].get<std::vector<std::string>>();
                t.destination = jt.at("destination").get<std::string>();
                t.crash = jt.value("crash", false);
                detail::bind_transition_exprs(t, node.node_id, decls, raw_set);
                node.transitions.push_back(std::move(t));
            }
            model.nodes.push_back(std::move(node));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed model document: ") + e.what());
    }

    // Resolve references.
    std::set<std::string> node_ids;
    for (const Node& n : model.nodes) {
        if (!node_ids.insert(n.node_id).second)
            throw ModelError("duplicate node identifier '" + n.node_id + "'");
    }
    if (!node_ids.count(model.initial_node))
        throw ModelError("initial_node '" + model.initial_node + "' does not exist");
    for (const Node& n : model.nodes) {
        std::set<int> tids;
        for (const Transition& t : n.transitions) {
            if (!tids.insert(t.transition_id).second)
                throw ModelError("duplicate transition identifier " + std::to_string(t.transition_id) +
                                 " in node '" + n.node_id + "'");
            if (!t.is_external() && !node_ids.count(t.destination))
                throw ModelError("transition " + std::to_string(t.transition_id) + " of node '" +
                                 n.node_id + "': unknown destination '" + t.destination + "'");
        }
    }

    model.rebuild_index();
    return model;
}

inline std::string serialize_model(const AppModel& model) {
    nlohmann::ordered_json j;
    j["global_vars"] = nlohmann::ordered_json::array();
    for (const GlobalVar& v : model.global_vars) {
        nlohmann::ordered_json gv;
        gv["name"] = v.name;
        if (type_of(v.value) == ValueType::Text) gv["value"] = as_text(v.value);
        else gv["value"] = as_int(v.value);
        j["global_vars"].push_back(std::move(gv));
    }
    j["nodes"] = nlohmann::ordered_json::array();
    for (const Node& n : model.nodes) {
        nlohmann::ordered_json jn;
        jn["node_id"] = n.node_id;
        if (n.external) jn["external"] = true;
        if (n.crash_node) jn["crash_node"] = true;
        jn["transitions"] = nlohmann::ordered_json::array();
        for (const Transition& t : n.transitions) {
            nlohmann::ordered_json jt;
            jt["transition_id"] = t.transition_id;
            jt["type"] = to_string(t.kind);
            jt["active"] = t.active;
            jt["guard"] = t.guard_text ? nlohmann::ordered_json(*t.guard_text) : nlohmann::ordered_json(nullptr);
            if (t.set.empty()) {
                jt["set"] = nullptr;
            } else {
                auto arr = nlohmann::ordered_json::array();
                for (const Assignment& a : t.set) arr.push_back(a.source_text);
                jt["set"] = std::move(arr);
            }
            jt["destination"] = t.destination;
            if (t.crash) jt["crash"] = true;
            jn["transitions"].push_back(std::move(jt));
        }
        j["nodes"].push_back(std::move(jn));
    }
    j["initial_node"] = model.initial_node;
    j["string_pool"] = model.string_pool;
    j["max_widget_slots"] = model.max_widget_slots;
    return j.dump(2) + "\n";
}

// Invariant checks; an empty result means the model is well formed. Nodes
// unreachable from initial_node (ignoring guards) are reported as warnings.
inline std::vector<Diagnostic> validate_model(const AppModel& model) {
    std::vector<Diagnostic> out;
    auto error = [&](std::string m) { out.push_back({Diagnostic::Severity::Error, std::move(m)}); };
    auto warning = [&](std::string m) { out.push_back({Diagnostic::Severity::Warning, std::move(m)}); };

    if (model.nodes.empty()) {
        error("empty model: no nodes");
        return out;
    }

    std::set<std::string> node_ids;
    for (const Node& n : model.nodes)
        if (!node_ids.insert(n.node_id).second)
            error("duplicate node identifier '" + n.node_id + "'");

    if (!node_ids.count(model.initial_node))
        error("initial_node '" + model.initial_node + "' does not exist");

    std::set<std::string> var_names;
    for (const GlobalVar& v : model.global_vars)
        if (!var_names.insert(v.name).second)
            error("duplicate global variable '" + v.name + "'");

    if (model.string_pool.empty()) error("string_pool is empty");

    int largest = 0;
    for (const Node& n : model.nodes) {
        largest = std::max(largest, static_cast<int>(n.transitions.size()));
        if (n.external && n.crash_node)
            error("node '" + n.node_id + "': external and crash_node are mutually exclusive");
        std::set<int> tids;
        for (const Transition& t : n.transitions) {
            std::string where = "transition " + std::to_string(t.transition_id) + " of node '" + n.node_id + "'";
            if (!tids.insert(t.transition_id).second)
                error("duplicate transition identifier " + std::to_string(t.transition_id) +
                      " in node '" + n.node_id + "'");
            if (!t.is_external() && !node_ids.count(t.destination))
                error(where + ": unknown destination '" + t.destination + "'");
            if (t.kind == TransitionKind::TextField) {
                bool uses_input = std::any_of(t.set.begin(), t.set.end(), [](const Assignment& a) {
                    return references_input(*a.expr);
                });
                if (!uses_input)
                    error(where + ": text_field must carry an assignment referencing __input__");
            }
        }
    }
    if (model.max_widget_slots < largest)
        error("max_widget_slots (" + std::to_string(model.max_widget_slots) +
              ") is smaller than the largest per-node transition count (" + std::to_string(largest) + ")");

    // Reachability ignoring guards.
    if (node_ids.count(model.initial_node)) {
        std::set<std::string> reached{model.initial_node};
        std::deque<std::string> frontier{model.initial_node};
        while (!frontier.empty()) {
            const Node* n = model.find_node(frontier.front());
            frontier.pop_front();
            if (!n) continue;
            for (const Transition& t : n->transitions) {
                if (!t.active || t.is_external()) continue;
                if (reached.insert(t.destination).second) frontier.push_back(t.destination);
            }
        }
        for (const Node& n : model.nodes)
            if (!reached.count(n.node_id))
                warning("node '" + n.node_id + "' is unreachable from initial_node (ignoring guards)");
    }

    return out;
}

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) {
        return d.severity == Diagnostic::Severity::Error;
    });
}

// Active transitions whose guard is absent or true under vars, in model order.
inline std::vector<const Transition*> enabled_transitions(const AppModel& model,
                                                          const std::string& node_id,
                                                          const VarStore& vars) {
    const Node* node = model.find_node(node_id);
    if (!node) throw ModelError("unknown node '" + node_id + "'");
    std::vector<const Transition*> out;
    for (const Transition& t : node->transitions) {
        if (!t.active) continue;
        if (t.guard) {
            try {
                if (!eval_guard(*t.guard, vars)) continue;
            } catch (const std::exception& e) {
                throw ModelError("guard of transition " + std::to_string(t.transition_id) +
                                 " in node '" + node_id + "': " + e.what());
            }
        }
        out.push_back(&t);
    }
    return out;
}

inline bool model_equal(const AppModel& a, const AppModel& b) {
    return serialize_model(a) == serialize_model(b);
}

}  // namespace fatesim
