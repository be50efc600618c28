#include <gtest/gtest.h>

#include <set>

#include <json.hpp>

#include "sigamp/amplifier.hpp"
#include "sigamp/detector.hpp"
#include "sigamp/errors.hpp"
#include "sigamp/scenario.hpp"

using namespace sigamp;

namespace {

NodeScore score(const char* node, double z) {
    NodeScore s;
    s.node = NodeId(node);
    s.z = z;
    return s;
}

TransactionEdge edge(const char* user, const char* node, SignalMask hits, std::int64_t day = 0) {
    return {UserId(user), NodeId(node), day, hits};
}

std::vector<UserId> users(std::initializer_list<const char*> ids) {
    std::vector<UserId> out;
    for (const auto* id : ids) out.emplace_back(id);
    return out;
}

}  // namespace

TEST(FlagNodes, ThresholdFilters) {
    const std::vector<NodeScore> scores = {score("b", 10.0), score("a", 50.0)};
    const auto flagged = flag_nodes(scores, 40.0);
    ASSERT_EQ(flagged.size(), 1u);
    EXPECT_EQ(flagged[0].node, NodeId("a"));
}

TEST(FlagNodes, InclusiveAtThresholdAndOrdered) {
    const std::vector<NodeScore> scores = {score("c", 40.0), score("b", 41.0), score("a", 40.0)};
    const auto flagged = flag_nodes(scores, 40.0);
    ASSERT_EQ(flagged.size(), 3u);
    EXPECT_EQ(flagged[0].node, NodeId("b"));
    EXPECT_EQ(flagged[1].node, NodeId("a"));
    EXPECT_EQ(flagged[2].node, NodeId("c"));
}

TEST(FlagNodes, EmptyAndNonFinite) {
    EXPECT_TRUE(flag_nodes({}, 40.0).empty());
    EXPECT_THROW(flag_nodes({}, NAN), Error);
}

TEST(AttachUsers, DedupAndHitFilter) {
    const std::vector<NodeScore> flagged = {score("a", 50.0)};
    const std::vector<TransactionEdge> edges = {edge("u1", "a", 1), edge("u2", "a", 0),
                                                edge("u1", "a", 1), edge("u3", "b", 1)};
    const auto alerts = attach_users(flagged, edges, 0, 4);
    ASSERT_EQ(alerts.size(), 1u);
    EXPECT_EQ(alerts[0].suspicious_users, users({"u1"}));
    EXPECT_EQ(alerts[0].day, 4);
}

TEST(AttachUsers, NoHitEdgesGivesEmptyList) {
    const std::vector<NodeScore> flagged = {score("a", -1.0)};
    const std::vector<TransactionEdge> edges = {edge("u1", "a", 0)};
    const auto alerts = attach_users(flag_nodes(flagged, -5.0), edges, 0, 0);
    ASSERT_EQ(alerts.size(), 1u);
    EXPECT_TRUE(alerts[0].suspicious_users.empty());
}

TEST(AttachUsers, OtherSignalBitsIgnored) {
    const std::vector<NodeScore> flagged = {score("a", 50.0)};
    const std::vector<TransactionEdge> edges = {edge("u1", "a", 0b10), edge("u2", "a", 0b01)};
    EXPECT_EQ(attach_users(flagged, edges, 1, 0)[0].suspicious_users, users({"u1"}));
}

TEST(AttachUsers, SyntheticRunCoversPlantedCarriers) {
    auto config = preset("case1-desk");
    config.n_users = 15000;
    config.attack.n_sybil = 1000;
    config.attack.k_cashout = 20;
    const auto scenario = generate(config);
    const auto accs = aggregate_edges(scenario.edges, 2);
    const auto scores = score_all(accs, compute_baseline(accs, 0), 0);
    const auto flagged = flag_nodes(scores, 40.0);
    EXPECT_EQ(flagged.size(), 20u);
    for (const auto& f : flagged) EXPECT_TRUE(scenario.truth.is_cashout(f.node));
    const auto alerts = attach_users(flagged, scenario.edges, 0, 0);
    const auto all = flagged_users(alerts);
    const std::set<UserId> flagged_set(all.begin(), all.end());
    std::size_t carriers = 0;
    std::size_t covered = 0;
    for (const auto& [user, mask] : scenario.truth.carriers) {
        if ((mask & 1U) == 0) continue;
        ++carriers;
        covered += flagged_set.contains(user) ? 1 : 0;
    }
    ASSERT_GT(carriers, 0u);
    EXPECT_GE(static_cast<double>(covered), 0.99 * static_cast<double>(carriers));
}

TEST(ComposeSignals, UnionOfUsers) {
    SignalOutcome a{0, 50.0, {Alert{0, 0, NodeId("x"), 50.0, 1, 1, users({"u1", "u2"})}}};
    SignalOutcome b{1, 45.0, {Alert{0, 1, NodeId("y"), 45.0, 1, 1, users({"u2", "u3"})}}};
    const std::vector<SignalOutcome> outcomes = {a, b};
    const auto incident = compose_signals(outcomes, 40.0);
    EXPECT_EQ(incident.users, users({"u1", "u2", "u3"}));
    EXPECT_EQ(incident.alerts.size(), 2u);
    // Union bound: never larger than the sum, equal only for disjoint sets.
    EXPECT_LT(incident.users.size(), 4u);
}

TEST(ComposeSignals, InactiveBelowThresholdOrWithoutBaseline) {
    const std::vector<SignalOutcome> outcomes = {{0, 12.0, {}}, {1, std::nullopt, {}}, {2, 40.0, {}}};
    const auto report = compose_signals(outcomes, 40.0).activation;
    ASSERT_EQ(report.entries.size(), 3u);
    EXPECT_FALSE(report.find(0)->active);
    EXPECT_EQ(report.find(0)->max_z, 12.0);
    EXPECT_FALSE(report.find(1)->active);
    EXPECT_TRUE(report.find(2)->active);
}

TEST(ComposeSignals, HomogeneousSignalOnlyActivates) {
    ScenarioConfig c;
    c.seed = 5;
    c.days = 10;
    c.n_users = 8000;
    c.n_nodes = 800;
    c.background_txn_per_user_per_day = 0.5;
    c.signals = {{"A", 0.04, 0.9, 1.0}, {"B", 0.04, 0.04, 1.0}};
    c.attack = {500, 10, 3, 8, 1.0, 1.0, 0.0, CashoutSource::planted_new};
    const auto scenario = generate(c);
    const auto accs = aggregate_edges(scenario.edges, 2);
    std::vector<SignalOutcome> outcomes;
    for (SignalIndex k = 0; k < 2; ++k) {
        const auto scores = score_all(accs, compute_baseline(accs, k), k);
        outcomes.push_back({k, scores.front().z,
                            attach_users(flag_nodes(scores, 40.0), scenario.edges, k, 9)});
    }
    const auto incident = compose_signals(outcomes, 40.0);
    EXPECT_TRUE(incident.activation.find(0)->active);
    EXPECT_FALSE(incident.activation.find(1)->active);
    EXPECT_FALSE(incident.users.empty());
}

TEST(ThresholdMonotonicity, FlaggedSetsNest) {
    auto config = preset("case2-desk");
    config.n_users = 4000;
    const auto scenario = generate(config);
    const auto accs = aggregate_edges(scenario.edges, 3);
    for (SignalIndex k = 0; k < 3; ++k) {
        const auto scores = score_all(accs, compute_baseline(accs, k), k);
        std::set<NodeId> prev_nodes;
        std::set<UserId> prev_users;
        bool first = true;
        for (double theta : {-2.0, 0.0, 1.0, 5.0, 10.0, 40.0, 100.0}) {
            const auto flagged = flag_nodes(scores, theta);
            const auto u = flagged_users(attach_users(flagged, scenario.edges, k, 0));
            std::set<NodeId> nodes;
            for (const auto& f : flagged) nodes.insert(f.node);
            std::set<UserId> us(u.begin(), u.end());
            if (!first) {
                EXPECT_TRUE(std::includes(prev_nodes.begin(), prev_nodes.end(), nodes.begin(), nodes.end()));
                EXPECT_TRUE(std::includes(prev_users.begin(), prev_users.end(), us.begin(), us.end()));
            }
            prev_nodes = nodes;
            prev_users = us;
            first = false;
        }
    }
}

TEST(SerializeAlert, StableFieldOrderAndDeterminism) {
    SignalRegistry registry({"use_promo"});
    const Alert alert{3, 0, NodeId("n1"), 41.5, 30, 40, users({"u1", "u2"})};
    const auto text = serialize_alert(alert, registry);
    EXPECT_EQ(text,
              R"({"day":3,"signal":"use_promo","node":"n1","z":41.5,"s":30,"t":40,"user_count":2,"users":["u1","u2"]})");
    EXPECT_EQ(text, serialize_alert(alert, registry));
    const auto parsed = nlohmann::json::parse(text);
    EXPECT_EQ(parsed["z"].get<double>(), 41.5);
}
