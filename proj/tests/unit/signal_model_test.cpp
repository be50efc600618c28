#include <gtest/gtest.h>

#include <random>

#include "sigamp/errors.hpp"
#include "sigamp/signal_model.hpp"

using namespace sigamp;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected sigamp::Error";
    return ErrorCode::io;
}

NodeAccumulator acc(std::uint64_t s, std::uint64_t t, const char* node = "v") {
    NodeAccumulator a(NodeId(node), 1);
    a.transactions = t;
    a.hits[0] = s;
    return a;
}

}  // namespace

TEST(SignalRegistry, RejectsDuplicateRegistration) {
    SignalRegistry registry;
    registry.register_signal("use_promo", "promotional subsidy used");
    EXPECT_EQ(code_of([&] { registry.register_signal("use_promo"); }), ErrorCode::duplicate_signal);
    EXPECT_EQ(registry.size(), 1u);
}

TEST(SignalRegistry, RegisteredSignalAcceptedOnEdge) {
    SignalRegistry registry;
    registry.register_signal("use_promo");
    const auto edge = make_edge(registry, UserId("u1"), NodeId("v1"), 0, {{"use_promo", 1}});
    EXPECT_TRUE(edge.hit(0));
}

TEST(SignalRegistry, UnknownSignalOnEdgeRejected) {
    SignalRegistry registry;
    EXPECT_EQ(code_of([&] { make_edge(registry, UserId("u1"), NodeId("v1"), 0, {{"unknown_sig", 1}}); }),
              ErrorCode::unknown_signal);
    TransactionEdge raw{UserId("u1"), NodeId("v1"), 0, 0b1};
    EXPECT_EQ(code_of([&] { validate_edge(registry, raw); }), ErrorCode::unknown_signal);
}

TEST(SignalRegistry, AbsentSignalsDefaultToZero) {
    SignalRegistry registry({"a", "b"});
    const auto edge = make_edge(registry, UserId("u"), NodeId("v"), 3, {{"b", 1}});
    EXPECT_FALSE(edge.hit(0));
    EXPECT_TRUE(edge.hit(1));
}

TEST(SignalRegistry, RejectsBadBitsAndNegativeDay) {
    SignalRegistry registry({"a"});
    EXPECT_EQ(code_of([&] { make_edge(registry, UserId("u"), NodeId("v"), 0, {{"a", 2}}); }),
              ErrorCode::invalid_argument);
    EXPECT_EQ(code_of([&] { make_edge(registry, UserId("u"), NodeId("v"), -1, {}); }),
              ErrorCode::invalid_argument);
}

TEST(StrongId, EmptyIdentifierRejected) {
    EXPECT_EQ(code_of([] { UserId(""); }), ErrorCode::invalid_argument);
    EXPECT_EQ(NodeId("x"), NodeId("x"));
    EXPECT_NE(NodeId("x"), NodeId("X"));
}

TEST(MergeAccumulators, IdentityAndSum) {
    EXPECT_EQ(merge_accumulators(acc(3, 10), acc(0, 0)), acc(3, 10));
    EXPECT_EQ(merge_accumulators(acc(3, 10), acc(2, 5)), acc(5, 15));
}

TEST(MergeAccumulators, NodeMismatchRejected) {
    EXPECT_EQ(code_of([] { merge_accumulators(acc(1, 1, "a"), acc(1, 1, "b")); }),
              ErrorCode::node_mismatch);
}

TEST(MergeAccumulators, MonoidLawsExhaustiveSmallCounts) {
    // Every (s, t) with 0 <= s <= t <= 3, two signals sharing t.
    std::vector<NodeAccumulator> all;
    for (std::uint64_t t = 0; t <= 3; ++t) {
        for (std::uint64_t s0 = 0; s0 <= t; ++s0) {
            for (std::uint64_t s1 = 0; s1 <= t; ++s1) {
                NodeAccumulator a(NodeId("v"), 2);
                a.transactions = t;
                a.hits = {s0, s1};
                all.push_back(a);
            }
        }
    }
    const NodeAccumulator zero(NodeId("v"), 2);
    for (const auto& a : all) {
        EXPECT_EQ(merge_accumulators(a, zero), a);
        EXPECT_EQ(merge_accumulators(zero, a), a);
        for (const auto& b : all) {
            const auto ab = merge_accumulators(a, b);
            EXPECT_EQ(ab, merge_accumulators(b, a));
            EXPECT_EQ(ab.transactions, a.transactions + b.transactions);
            for (std::size_t k = 0; k < 2; ++k) EXPECT_LE(ab.hits[k], ab.transactions);
            for (const auto& c : all) {
                ASSERT_EQ(merge_accumulators(ab, c), merge_accumulators(a, merge_accumulators(b, c)));
            }
        }
    }
}

TEST(MergeAccumulators, AssociativeOnRandomCounts) {
    std::mt19937_64 gen(7);
    auto draw = [&] {
        const std::uint64_t t = gen() % 100000;
        return acc(t == 0 ? 0 : gen() % (t + 1), t);
    };
    for (int i = 0; i < 1000; ++i) {
        const auto a = draw();
        const auto b = draw();
        const auto c = draw();
        ASSERT_EQ(merge_accumulators(merge_accumulators(a, b), c),
                  merge_accumulators(a, merge_accumulators(b, c)));
    }
}

TEST(MergeAccumulators, DifferentWidthsPadWithZero) {
    NodeAccumulator wide(NodeId("v"), 3);
    wide.transactions = 4;
    wide.hits = {1, 2, 3};
    const auto merged = merge_accumulators(acc(1, 2), wide);
    EXPECT_EQ(merged.transactions, 6u);
    EXPECT_EQ(merged.hit_count(0), 2u);
    EXPECT_EQ(merged.hit_count(2), 3u);
}

TEST(NodeAccumulator, IngestionKeepsHitsBelowTransactions) {
    SignalRegistry registry({"a", "b"});
    NodeAccumulator a(NodeId("v"), registry.size());
    std::mt19937_64 gen(3);
    for (int i = 0; i < 500; ++i) {
        a.add({UserId("u"), NodeId("v"), 0, gen() & 0b11});
        ASSERT_LE(a.hit_count(0), a.transactions);
        ASSERT_LE(a.hit_count(1), a.transactions);
    }
}

TEST(GlobalBaseline, DerivationsArePureFunctionsOfCounts) {
    const GlobalBaseline a{7, 130, 9};
    const GlobalBaseline b{7, 130, 9};
    EXPECT_EQ(a.p_global(), b.p_global());
    EXPECT_EQ(a.prior_strength(), b.prior_strength());
    EXPECT_DOUBLE_EQ(a.p_global(), 7.0 / 130.0);
    EXPECT_DOUBLE_EQ(a.prior_strength(), 130.0 / 9.0);
}
