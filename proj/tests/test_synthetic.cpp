// suite generators: presets, pools, augmentation, blocking property
#include <gtest/gtest.h>

#include <deque>
#include <set>

#include "fatesim/synthetic.hpp"

using namespace fatesim;

namespace {

// Brute-force reachability when the tester can only ever type the given
// strings. Integer variables saturate at a small cap, which is sound here
// because every guard in the suite compares against small constants.
std::set<std::string> reachable_with_strings(const AppModel& model,
                                             const std::vector<std::string>& typed) {
    constexpr std::int64_t kCap = 3;
    auto clamp_store = [kCap](VarStore vars) {
        for (auto& [name, value] : vars)
            if (std::holds_alternative<std::int64_t>(value))
                value = std::clamp(std::get<std::int64_t>(value), -kCap, kCap);
        return vars;
    };
    auto key_of = [](const std::string& node, const VarStore& vars) {
        std::string k = node;
        for (const auto& [name, value] : vars) {
            k += '|';
            k += name;
            k += '=';
            if (std::holds_alternative<std::int64_t>(value))
                k += std::to_string(std::get<std::int64_t>(value));
            else
                k += std::get<std::string>(value);
        }
        return k;
    };

    std::set<std::string> nodes_seen;
    std::set<std::string> visited_states;
    std::deque<std::pair<std::string, VarStore>> frontier;
    VarStore init = clamp_store(model.initial_vars());
    frontier.push_back({model.initial_node, init});
    visited_states.insert(key_of(model.initial_node, init));
    nodes_seen.insert(model.initial_node);

    while (!frontier.empty()) {
        auto [node_id, vars] = frontier.front();
        frontier.pop_front();
        for (const Transition* t : enabled_transitions(model, node_id, vars)) {
            std::vector<std::optional<std::string>> inputs;
            if (t->kind == TransitionKind::TextField) {
                for (const std::string& s : typed) inputs.push_back(s);
            } else {
                inputs.push_back(std::nullopt);
            }
            for (const auto& input : inputs) {
                VarStore next_vars = vars;
                if (!t->set.empty()) next_vars = clamp_store(exec_set(t->set, vars, input));
                std::string dest = t->is_external() ? node_id : t->destination;
                const Node* dest_node = model.find_node(dest);
                if (dest_node && dest_node->external) dest = node_id;
                std::string key = key_of(dest, next_vars);
                if (visited_states.insert(key).second) {
                    nodes_seen.insert(dest);
                    frontier.push_back({dest, next_vars});
                }
            }
        }
    }
    return nodes_seen;
}

std::vector<std::string> pool_without(const AppModel& model,
                                      const std::set<std::string>& credentials) {
    std::vector<std::string> out;
    for (const std::string& s : model.string_pool)
        if (!credentials.count(s)) out.push_back(s);
    return out;
}

}  // namespace

TEST(Suite, SocialPoolHoldsCredential) {
    SuiteConfig cfg;
    cfg.app = SuiteApp::Social;
    cfg.string_pool_size = 20;
    AppModel m = generate(cfg);
    EXPECT_EQ(m.string_pool.size(), 20u);
    EXPECT_NE(std::find(m.string_pool.begin(), m.string_pool.end(), "s3cret"),
              m.string_pool.end());
    EXPECT_TRUE(validate_model(m).empty());
}

TEST(Suite, AugmentationAddsDummiesToLoginOnly) {
    SuiteConfig base;
    base.app = SuiteApp::Social;
    SuiteConfig aug = base;
    aug.dummy_buttons = 5;
    AppModel m0 = generate(base);
    AppModel m5 = generate(aug);
    ASSERT_EQ(m0.nodes.size(), m5.nodes.size());
    EXPECT_EQ(m5.find_node("login")->transitions.size(),
              m0.find_node("login")->transitions.size() + 5);
    for (const Node& n : m0.nodes) {
        if (n.node_id == "login") continue;
        EXPECT_EQ(m5.find_node(n.node_id)->transitions.size(), n.transitions.size())
            << n.node_id;
    }
    // the added transitions are active self loops
    const Node* login = m5.find_node("login");
    for (std::size_t i = login->transitions.size() - 5; i < login->transitions.size(); ++i) {
        EXPECT_EQ(login->transitions[i].destination, "login");
        EXPECT_TRUE(login->transitions[i].active);
        EXPECT_FALSE(login->transitions[i].guard.get());
    }
}

TEST(Suite, PlayerDegenerateShapeIsTwoNodeChain) {
    SuiteConfig cfg;
    cfg.app = SuiteApp::Player;
    cfg.player_depth = 1;
    cfg.player_branching = 1;
    AppModel m = generate(cfg);
    EXPECT_EQ(m.nodes.size(), 2u);
    EXPECT_TRUE(validate_model(m).empty());
}

TEST(Suite, PlayerDefaultShape) {
    SuiteConfig cfg;
    cfg.app = SuiteApp::Player;
    AppModel m = generate(cfg);
    // root + 1 + branching + branching^2 at the defaults (3, 4)
    EXPECT_EQ(m.nodes.size(), 22u);
    EXPECT_TRUE(validate_model(m).empty());
}

TEST(Suite, PresetMatrix) {
    auto presets = list_presets();
    EXPECT_EQ(presets.size(), 16u);  // 1 + 3 x 5
    auto find = [&](const std::string& name) -> const SuiteConfig* {
        for (const auto& [n, c] : presets)
            if (n == name) return &c;
        return nullptr;
    };
    const SuiteConfig* aug10 = find("social/aug_10");
    ASSERT_NE(aug10, nullptr);
    EXPECT_EQ(aug10->dummy_buttons, 10);
    EXPECT_EQ(aug10->string_pool_size, 20);
    ASSERT_NE(find("player/20_str"), nullptr);
    EXPECT_EQ(find("player/40_str"), nullptr);  // player ships the base pool only
    ASSERT_NE(find("market/80_str"), nullptr);
    EXPECT_EQ(find("market/80_str")->string_pool_size, 80);

    for (const auto& [name, cfg] : presets) {
        AppModel m = generate(cfg);
        EXPECT_TRUE(validate_model(m).empty()) << name;
        EXPECT_EQ(static_cast<int>(m.string_pool.size()), cfg.string_pool_size) << name;
    }
    EXPECT_TRUE(preset_by_name("bank/aug_5").has_value());
    EXPECT_FALSE(preset_by_name("bank/aug_7").has_value());
}

TEST(Suite, GenerationDeterministicPerConfigAndSeed) {
    SuiteConfig cfg;
    cfg.app = SuiteApp::Market;
    cfg.string_pool_size = 40;
    EXPECT_TRUE(model_equal(generate(cfg), generate(cfg)));
    SuiteConfig other = cfg;
    other.seed = 99;
    EXPECT_FALSE(model_equal(generate(cfg), generate(other)));
}

TEST(Suite, InvalidConfigRejected) {
    SuiteConfig cfg;
    cfg.string_pool_size = 30;
    EXPECT_THROW(generate(cfg), std::invalid_argument);
    cfg.string_pool_size = 20;
    cfg.dummy_buttons = 3;
    EXPECT_THROW(generate(cfg), std::invalid_argument);
}

TEST(Suite, BankCarriesBothCredentials) {
    SuiteConfig cfg;
    cfg.app = SuiteApp::Bank;
    AppModel m = generate(cfg);
    EXPECT_NE(std::find(m.string_pool.begin(), m.string_pool.end(), "b4nk-pass"),
              m.string_pool.end());
    EXPECT_NE(std::find(m.string_pool.begin(), m.string_pool.end(), "pin-9001"),
              m.string_pool.end());
}

TEST(Suite, BlockingPropertySocial) {
    SuiteConfig cfg;
    cfg.app = SuiteApp::Social;
    AppModel m = generate(cfg);
    auto blocked = reachable_with_strings(m, pool_without(m, {"s3cret"}));
    EXPECT_EQ(blocked, (std::set<std::string>{"login", "signup"}));
    auto full = reachable_with_strings(m, {m.string_pool.begin(), m.string_pool.end()});
    EXPECT_EQ(full.size(), m.nodes.size());
}

TEST(Suite, BlockingPropertyBank) {
    SuiteConfig cfg;
    cfg.app = SuiteApp::Bank;
    AppModel m = generate(cfg);
    auto blocked = reachable_with_strings(m, pool_without(m, {"b4nk-pass", "pin-9001"}));
    EXPECT_EQ(blocked, (std::set<std::string>{"login", "help"}));
    // the outer credential alone never unlocks the transfer flow
    auto outer_only = reachable_with_strings(m, pool_without(m, {"pin-9001"}));
    EXPECT_TRUE(outer_only.count("dashboard"));
    EXPECT_FALSE(outer_only.count("transfer_form"));
    auto full = reachable_with_strings(m, {m.string_pool.begin(), m.string_pool.end()});
    EXPECT_EQ(full.size(), m.nodes.size());
}

TEST(Suite, BlockingPropertyMarket) {
    SuiteConfig cfg;
    cfg.app = SuiteApp::Market;
    AppModel m = generate(cfg);
    auto blocked = reachable_with_strings(m, pool_without(m, {"sh0p-pass"}));
    EXPECT_FALSE(blocked.count("payment"));
    EXPECT_FALSE(blocked.count("order_done"));
    EXPECT_FALSE(blocked.count("order_detail"));
    EXPECT_FALSE(blocked.count("account"));
    EXPECT_TRUE(blocked.count("checkout"));  // cart counter is not a credential
    auto full = reachable_with_strings(m, {m.string_pool.begin(), m.string_pool.end()});
    EXPECT_EQ(full.size(), m.nodes.size());
}

TEST(Suite, PoolGrowthShrinksCredentialProbability) {
    for (int pool : {20, 40, 80}) {
        SuiteConfig cfg;
        cfg.app = SuiteApp::Social;
        cfg.string_pool_size = pool;
        AppModel m = generate(cfg);
        int hits = 0;
        for (const std::string& s : m.string_pool)
            if (s == "s3cret") ++hits;
        EXPECT_EQ(hits, 1) << pool;  // exactly one credential entry
    }
}
