// fatesim/synthetic.hpp - generators for the four representative app models
// (Player, Social, Bank, Market) and their complexity configurations
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fatesim/model.hpp"

namespace fatesim {

enum class SuiteApp { Player, Social, Bank, Market };

inline const char* to_string(SuiteApp app) {
    switch (app) {
        case SuiteApp::Player: return "player";
        case SuiteApp::Social: return "social";
        case SuiteApp::Bank: return "bank";
        default: return "market";
    }
}

inline std::optional<SuiteApp> suite_app_from(const std::string& s) {
    if (s == "player") return SuiteApp::Player;
    if (s == "social") return SuiteApp::Social;
    if (s == "bank") return SuiteApp::Bank;
    if (s == "market") return SuiteApp::Market;
    return std::nullopt;
}

struct SuiteConfig {
    SuiteApp app = SuiteApp::Social;
    int string_pool_size = 20;  // 20 | 40 | 80
    int dummy_buttons = 0;      // 0 | 5 | 10, applied to login-style nodes
    std::uint64_t seed = 1;     // pool-string generation
    int player_depth = 3;       // levels below the root screen
    int player_branching = 4;
};

namespace detail {

// Assembles the JSON document; generate() runs it through parse_model so the
// generators and file loading share one code path.
class ModelBuilder {
public:
    void var(const std::string& name, std::int64_t value) {
        vars_.push_back({{"name", name}, {"value", value}});
    }
    void var(const std::string& name, const std::string& value) {
        vars_.push_back({{"name", name}, {"value", value}});
    }

    void node(const std::string& id) {
        nodes_.push_back({{"node_id", id}, {"transitions", nlohmann::ordered_json::array()}});
    }

    void transition(const std::string& kind, const std::string& destination,
                    const std::optional<std::string>& guard = std::nullopt,
                    const std::vector<std::string>& set = {}) {
        nlohmann::ordered_json t;
        t["transition_id"] = static_cast<int>(nodes_.back()["transitions"].size());
        t["type"] = kind;
        t["active"] = true;
        t["guard"] = guard ? nlohmann::ordered_json(*guard) : nlohmann::ordered_json(nullptr);
        if (set.empty()) t["set"] = nullptr;
        else t["set"] = set;
        t["destination"] = destination;
        nodes_.back()["transitions"].push_back(std::move(t));
    }

    void button(const std::string& dest, const std::optional<std::string>& guard = std::nullopt,
                const std::vector<std::string>& set = {}) {
        transition("button", dest, guard, set);
    }

    void text_field(const std::string& self, const std::string& target_var) {
        transition("text_field", self, std::nullopt, {target_var + " = __input__"});
    }

    AppModel build(const std::string& initial, const std::vector<std::string>& pool) {
        int widest = 0;
        for (const auto& n : nodes_) widest = std::max(widest, static_cast<int>(n["transitions"].size()));
        nlohmann::ordered_json j;
        j["global_vars"] = vars_;
        j["nodes"] = nodes_;
        j["initial_node"] = initial;
        j["string_pool"] = pool;
        j["max_widget_slots"] = widest;
        return parse_model(j.dump());
    }

    nlohmann::ordered_json& last_node() { return nodes_.back(); }

private:
    nlohmann::ordered_json vars_ = nlohmann::ordered_json::array();
    nlohmann::ordered_json nodes_ = nlohmann::ordered_json::array();
};

inline std::vector<std::string> make_pool(int size, const std::vector<std::string>& credentials,
                                          std::uint64_t seed) {
    if (static_cast<int>(credentials.size()) > size)
        throw std::invalid_argument("string pool smaller than the credential set");
    std::mt19937_64 rng(seed);
    std::set<std::string> used(credentials.begin(), credentials.end());
    std::vector<std::string> filler;
    static const char* consonants = "bcdfghjklmnprstvz";
    static const char* vowels = "aeiou";
    while (static_cast<int>(filler.size()) + static_cast<int>(credentials.size()) < size) {
        std::string word;
        for (int i = 0; i < 3; ++i) {
            word += consonants[rng() % 17];
            word += vowels[rng() % 5];
        }
        if (used.insert(word).second) filler.push_back(word);
    }
    // Credentials sit at seeded positions so their index is not special.
    std::vector<std::string> pool = filler;
    for (const std::string& cred : credentials) {
        std::size_t pos = pool.empty() ? 0 : rng() % (pool.size() + 1);
        pool.insert(pool.begin() + static_cast<std::ptrdiff_t>(pos), cred);
    }
    return pool;
}

inline void add_dummies(ModelBuilder& b, int count) {
    auto& node = b.last_node();
    for (int i = 0; i < count; ++i) {
        nlohmann::ordered_json t;
        t["transition_id"] = static_cast<int>(node["transitions"].size());
        t["type"] = "button";
        t["active"] = true;
        t["guard"] = nullptr;
        t["set"] = nullptr;
        t["destination"] = node["node_id"];
        node["transitions"].push_back(std::move(t));
    }
}

inline AppModel generate_player(const SuiteConfig& cfg) {
    // A root screen leading into a tree of categories: level 0 is the root,
    // level l (1-based) holds branching^(l-1) nodes. Defaults give 22 nodes.
    ModelBuilder b;
    if (cfg.player_depth < 1 || cfg.player_branching < 1)
        throw std::invalid_argument("player depth and branching must be >= 1");

    struct Entry { std::string id; std::string parent; int level; };
    std::vector<Entry> tree;
    tree.push_back({"root", "", 0});
    std::vector<std::string> previous{"root"};
    for (int level = 1; level <= cfg.player_depth; ++level) {
        std::vector<std::string> current;
        int fanout = level == 1 ? 1 : cfg.player_branching;
        for (const std::string& parent : previous) {
            for (int c = 0; c < fanout; ++c) {
                std::string id = parent == "root" ? "lib" : parent + "_" + std::to_string(c);
                tree.push_back({id, parent, level});
                current.push_back(id);
            }
        }
        previous = std::move(current);
    }

    for (const Entry& e : tree) {
        b.node(e.id);
        if (!e.parent.empty()) b.button(e.parent);  // back
        if (e.level < cfg.player_depth) {
            for (const Entry& child : tree)
                if (child.parent == e.id) b.button(child.id);
        } else {
            b.button(e.id);  // play / toggle, stays on the screen
        }
    }
    return b.build("root", make_pool(cfg.string_pool_size, {}, cfg.seed));
}

inline AppModel generate_social(const SuiteConfig& cfg) {
    ModelBuilder b;
    b.var("user_name", "");
    b.var("user_pass", "");
    b.var("real_pass", "s3cret");
    b.var("count_messages", std::int64_t{0});
    b.var("last_message", "");
    b.var("bio", "");

    b.node("login");
    b.text_field("login", "user_name");
    b.text_field("login", "user_pass");
    b.button("main_act", std::string("user_pass == real_pass"));
    b.button("signup");
    b.button(kExternalMarker);  // ads
    add_dummies(b, cfg.dummy_buttons);

    b.node("signup");
    b.button("login");
    b.text_field("signup", "user_name");

    b.node("main_act");
    b.button("friends");
    b.button("messages");
    b.button("settings");
    b.button("profile");
    b.button("login");           // logout
    b.button(kExternalMarker);   // promo

    b.node("friends");
    b.button("main_act");
    b.button("friend_profile");

    b.node("friend_profile");
    b.button("friends");
    b.button("photos");

    b.node("photos");
    b.button("friend_profile");
    b.button("photo_view");

    b.node("photo_view");
    b.button("photos");

    b.node("messages");
    b.button("main_act");
    b.button("messages", std::nullopt, {"count_messages = count_messages + 1"});  // compose
    b.button("chat_x", std::string("count_messages >= 1"));

    b.node("chat_x");
    b.button("messages");
    b.text_field("chat_x", "last_message");
    b.button("chat_info");

    b.node("chat_info");
    b.button("chat_x");
    b.button("media_view");

    b.node("media_view");
    b.button("chat_info");

    b.node("settings");
    b.button("main_act");
    b.button("privacy_settings");
    b.button("notifications");

    b.node("privacy_settings");
    b.button("settings");
    b.button("blocked_list");

    b.node("blocked_list");
    b.button("privacy_settings");

    b.node("notifications");
    b.button("settings");

    b.node("profile");
    b.button("main_act");
    b.button("edit_profile");

    b.node("edit_profile");
    b.button("profile");
    b.text_field("edit_profile", "bio");
    b.button("avatar_picker");

    b.node("avatar_picker");
    b.button("edit_profile");

    return b.build("login", make_pool(cfg.string_pool_size, {"s3cret"}, cfg.seed));
}

inline AppModel generate_bank(const SuiteConfig& cfg) {
    ModelBuilder b;
    b.var("user_name", "");
    b.var("user_pass", "");
    b.var("real_pass", "b4nk-pass");
    b.var("entered_pin", "");
    b.var("real_pin", "pin-9001");
    b.var("amount", "");

    b.node("login");
    b.text_field("login", "user_name");
    b.text_field("login", "user_pass");
    b.button("dashboard", std::string("user_pass == real_pass"));
    b.button("help");
    add_dummies(b, cfg.dummy_buttons);

    b.node("help");
    b.button("login");

    b.node("dashboard");
    b.button("accounts");
    b.button("transfer");
    b.button("bank_settings");
    b.button("support");
    b.button("login");  // logout

    b.node("accounts");
    b.button("dashboard");
    b.button("account_detail");

    b.node("account_detail");
    b.button("accounts");
    b.button("statements");

    b.node("statements");
    b.button("account_detail");

    // Inner password-protected operation: the transfer flow needs the PIN.
    b.node("transfer");
    b.button("dashboard");
    b.text_field("transfer", "entered_pin");
    b.button("transfer_form", std::string("entered_pin == real_pin"));
    add_dummies(b, cfg.dummy_buttons);

    b.node("transfer_form");
    b.button("transfer");
    b.text_field("transfer_form", "amount");
    b.button("transfer_done");

    b.node("transfer_done");
    b.button("dashboard");

    b.node("bank_settings");
    b.button("dashboard");
    b.button("limits");

    b.node("limits");
    b.button("bank_settings");

    b.node("support");
    b.button("dashboard");
    b.button("faq");

    b.node("faq");
    b.button("support");

    return b.build("login", make_pool(cfg.string_pool_size, {"b4nk-pass", "pin-9001"}, cfg.seed));
}

inline AppModel generate_market(const SuiteConfig& cfg) {
    ModelBuilder b;
    b.var("query", "");
    b.var("user_name", "");
    b.var("user_pass", "");
    b.var("real_pass", "sh0p-pass");
    b.var("cart_count", std::int64_t{0});
    b.var("orders_placed", std::int64_t{0});

    b.node("home");
    b.text_field("home", "query");
    b.button("results", std::string("query != \"\""));
    b.button("cart");
    b.button("login");
    b.button("orders");
    b.button(kExternalMarker);  // promo

    b.node("results");
    b.button("home");
    b.button("item");
    b.button("item2");
    b.transition("scroll", "results_more");

    b.node("results_more");
    b.button("results");

    b.node("item");
    b.button("results");
    b.button("item", std::nullopt, {"cart_count = cart_count + 1"});  // add to cart

    b.node("item2");
    b.button("results");
    b.button("item2", std::nullopt, {"cart_count = cart_count + 1"});

    b.node("cart");
    b.button("home");
    b.button("checkout", std::string("cart_count >= 1"));

    b.node("checkout");
    b.button("cart");
    b.text_field("checkout", "user_name");
    b.text_field("checkout", "user_pass");
    b.button("payment", std::string("user_pass == real_pass"));
    add_dummies(b, cfg.dummy_buttons);

    b.node("payment");
    b.button("order_done", std::nullopt, {"orders_placed = orders_placed + 1"});
    b.button("cart");  // cancel

    b.node("order_done");
    b.button("home");

    b.node("orders");
    b.button("home");
    b.button("order_detail", std::string("orders_placed >= 1"));

    b.node("order_detail");
    b.button("orders");

    b.node("login");
    b.button("home");
    b.text_field("login", "user_name");
    b.text_field("login", "user_pass");
    b.button("account", std::string("user_pass == real_pass"));
    add_dummies(b, cfg.dummy_buttons);

    b.node("account");
    b.button("home");

    return b.build("home", make_pool(cfg.string_pool_size, {"sh0p-pass"}, cfg.seed));
}

}  // namespace detail

inline AppModel generate(const SuiteConfig& cfg) {
    if (cfg.string_pool_size != 20 && cfg.string_pool_size != 40 && cfg.string_pool_size != 80)
        throw std::invalid_argument("string_pool_size must be 20, 40 or 80");
    if (cfg.dummy_buttons != 0 && cfg.dummy_buttons != 5 && cfg.dummy_buttons != 10)
        throw std::invalid_argument("dummy_buttons must be 0, 5 or 10");
    switch (cfg.app) {
        case SuiteApp::Player: return detail::generate_player(cfg);
        case SuiteApp::Social: return detail::generate_social(cfg);
        case SuiteApp::Bank: return detail::generate_bank(cfg);
        case SuiteApp::Market: return detail::generate_market(cfg);
    }
    throw std::invalid_argument("invalid app");
}

// The preset matrix of Table-2 style configurations: Player ships only the
// base pool; the other apps get the pool and augmentation variants.
inline std::vector<std::pair<std::string, SuiteConfig>> list_presets() {
    std::vector<std::pair<std::string, SuiteConfig>> out;
    auto add = [&](SuiteApp app, const std::string& label, int pool, int dummies) {
        SuiteConfig cfg;
        cfg.app = app;
        cfg.string_pool_size = pool;
        cfg.dummy_buttons = dummies;
        out.emplace_back(std::string(to_string(app)) + "/" + label, cfg);
    };
    add(SuiteApp::Player, "20_str", 20, 0);
    for (SuiteApp app : {SuiteApp::Social, SuiteApp::Bank, SuiteApp::Market}) {
        add(app, "20_str", 20, 0);
        add(app, "40_str", 40, 0);
        add(app, "80_str", 80, 0);
        add(app, "aug_5", 20, 5);
        add(app, "aug_10", 20, 10);
    }
    return out;
}

inline std::optional<SuiteConfig> preset_by_name(const std::string& name) {
    for (const auto& [preset, cfg] : list_presets())
        if (preset == name) return cfg;
    return std::nullopt;
}

}  // namespace fatesim
