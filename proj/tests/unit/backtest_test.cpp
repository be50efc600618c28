#include <gtest/gtest.h>

#include <sstream>

#include "sigamp/backtest.hpp"
#include "sigamp/errors.hpp"

using namespace sigamp;

namespace {

constexpr double kPctTol = 0.01;  // percentage points

double pct(double x) { return 100.0 * x; }

GroundTruth truth_of(std::initializer_list<const char*> sybils, SignalMask carry = 1) {
    GroundTruth t;
    t.signals = {"a"};
    for (const auto* s : sybils) {
        t.sybil_users.emplace_back(s);
        t.carriers.emplace(UserId(s), carry);
    }
    std::sort(t.sybil_users.begin(), t.sybil_users.end());
    return t;
}

}  // namespace

TEST(MetricsFixtures, PromoAbuseSnapshotAtTen) {
    const auto row = metrics_from_counts(10.0, 84, 3650, 3322, 3331, 3337);
    EXPECT_NEAR(pct(row.precision), 91.01, kPctTol);
    EXPECT_NEAR(pct(*row.scr), 99.73, kPctTol);
    EXPECT_NEAR(pct(*row.coverage), 99.82, kPctTol);
    EXPECT_NEAR(pct(*row.unconditional_recall), 99.55, kPctTol);
    EXPECT_EQ(*row.unconditional_recall, *row.scr * *row.coverage);
}

TEST(MetricsFixtures, PromoAbuseRemainingRows) {
    // z = 1, 5, 40 rows of the promo-abuse snapshot.
    EXPECT_NEAR(pct(metrics_from_counts(1.0, 157, 3956, 3329, 3331, 3337).precision), 84.15, kPctTol);
    EXPECT_NEAR(pct(*metrics_from_counts(1.0, 157, 3956, 3329, 3331, 3337).scr), 99.94, kPctTol);
    EXPECT_NEAR(pct(metrics_from_counts(5.0, 120, 3843, 3329, 3331, 3337).precision), 86.63, kPctTol);
    const auto r40 = metrics_from_counts(40.0, 59, 3196, 2994, 3331, 3337);
    EXPECT_NEAR(pct(r40.precision), 93.68, kPctTol);
    EXPECT_NEAR(pct(*r40.scr), 89.88, kPctTol);
}

TEST(MetricsFixtures, CardFraudSnapshot) {
    const auto r40 = metrics_from_counts(40.0, 7, 466, 81, 81, 145);
    EXPECT_NEAR(pct(r40.precision), 17.38, kPctTol);
    EXPECT_NEAR(pct(*r40.scr), 100.0, kPctTol);
    EXPECT_NEAR(pct(metrics_from_counts(1.0, 84, 511, 81, 81, 145).precision), 15.85, kPctTol);
    EXPECT_NEAR(pct(metrics_from_counts(5.0, 39, 488, 81, 81, 145).precision), 16.60, kPctTol);
    EXPECT_NEAR(pct(metrics_from_counts(10.0, 18, 475, 81, 81, 145).precision), 17.05, kPctTol);
}

TEST(ComputeMetrics, PerfectDetection) {
    const auto truth = truth_of({"s1", "s2", "s3"});
    const std::vector<UserId> flagged = {UserId("s1"), UserId("s2"), UserId("s3"), UserId("s1")};
    const auto row = compute_metrics(flagged, truth, 0);
    EXPECT_EQ(row.flagged_users, 3u);
    EXPECT_EQ(row.precision, 1.0);
    EXPECT_EQ(*row.scr, 1.0);
    EXPECT_EQ(*row.coverage, 1.0);
}

TEST(ComputeMetrics, EmptyTruthIsNotApplicable) {
    const std::vector<UserId> flagged = {UserId("u1")};
    const auto row = compute_metrics(flagged, GroundTruth{}, 0);
    EXPECT_EQ(row.precision, 0.0);
    EXPECT_FALSE(row.scr);
    EXPECT_FALSE(row.coverage);
    EXPECT_FALSE(row.unconditional_recall);
    EXPECT_EQ(compute_metrics({}, GroundTruth{}, 0).precision, 0.0);
}

TEST(RawBaseline, AllCarriersFraudsters) {
    const auto truth = truth_of({"s1", "s2"});
    const std::vector<TransactionEdge> edges = {{UserId("s1"), NodeId("v"), 0, 1},
                                                {UserId("s2"), NodeId("v"), 0, 1},
                                                {UserId("u1"), NodeId("v"), 0, 0}};
    const auto raw = raw_signal_baseline(edges, truth, 0);
    EXPECT_EQ(*raw.precision, 1.0);
    EXPECT_EQ(*amplification_factor(1.0, raw), 1.0);
}

TEST(RawBaseline, NoFraudCarriersAndNoCarriers) {
    const auto truth = truth_of({"s1"});
    const std::vector<TransactionEdge> edges = {{UserId("u1"), NodeId("v"), 0, 1},
                                                {UserId("s1"), NodeId("v"), 0, 0}};
    const auto raw = raw_signal_baseline(edges, truth, 0);
    EXPECT_EQ(*raw.precision, 0.0);
    EXPECT_FALSE(amplification_factor(0.9, raw));
    const std::vector<TransactionEdge> quiet = {{UserId("u1"), NodeId("v"), 0, 0}};
    EXPECT_FALSE(raw_signal_baseline(quiet, truth, 0).precision);
}

TEST(ThresholdSweep, RejectsUnsortedThresholds) {
    const std::vector<double> thresholds = {5.0, 1.0};
    EXPECT_THROW(threshold_sweep({}, {}, GroundTruth{}, 0, thresholds), Error);
}

TEST(ThresholdSweep, MonotoneOnSynthetic) {
    auto config = preset("case1-desk");
    config.n_users = 12000;
    config.attack.n_sybil = 800;
    config.attack.k_cashout = 16;
    config.attack.cashout_mix = 0.9;
    const auto s = generate(config);
    const auto accs = aggregate_edges(s.edges, 2);
    for (SignalIndex k = 0; k < 2; ++k) {
        const auto scores = score_all(accs, compute_baseline(accs, k), k);
        const std::vector<double> thresholds = {-1.0, 1.0, 5.0, 10.0, 20.0, 40.0, 80.0};
        const auto rows = threshold_sweep(scores, s.edges, s.truth, k, thresholds);
        ASSERT_EQ(rows.size(), thresholds.size());
        for (std::size_t i = 1; i < rows.size(); ++i) {
            EXPECT_LE(rows[i].flagged_nodes, rows[i - 1].flagged_nodes);
            EXPECT_LE(rows[i].flagged_users, rows[i - 1].flagged_users);
            EXPECT_LE(*rows[i].scr, *rows[i - 1].scr);
        }
    }
}

TEST(ThresholdSweep, SingleThresholdEqualsComputeMetrics) {
    const auto s = generate(preset("case2-desk"));
    const auto accs = aggregate_edges(s.edges, 3);
    const auto scores = score_all(accs, compute_baseline(accs, 0), 0);
    const std::vector<double> one = {10.0};
    const auto rows = threshold_sweep(scores, s.edges, s.truth, 0, one);
    const auto flagged = flag_nodes(scores, 10.0);
    const auto users = flagged_users(attach_users(flagged, s.edges, 0, 0));
    const auto direct = compute_metrics(users, s.truth, 0, 10.0, flagged.size());
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].flagged_users, direct.flagged_users);
    EXPECT_EQ(rows[0].caught, direct.caught);
    EXPECT_EQ(rows[0].precision, direct.precision);
    EXPECT_EQ(rows[0].scr, direct.scr);
}

TEST(DailySeries, CalmScenarioIsAllZero) {
    auto config = preset("calm");
    config.days = 6;
    const auto s = generate(config);
    const auto replay = replay_daily(s.registry, s.edges, {});
    const auto series = daily_series(replay, s.truth);
    ASSERT_EQ(series.rows.size(), 6u);
    for (const auto& row : series.rows) {
        EXPECT_EQ(row.union_users, 0u);
        EXPECT_TRUE(row.calm);
    }
    EXPECT_TRUE(series.calm_clean());
}

TEST(DailySeries, SupportInsideAttackAndCumulativeMonotone) {
    ScenarioConfig c;
    c.seed = 12;
    c.days = 14;
    c.n_users = 5000;
    c.n_nodes = 500;
    c.background_txn_per_user_per_day = 0.5;
    c.signals = {{"a", 0.03, 0.9, 1.0}};
    c.attack = {600, 6, 5, 10, 1.5, 1.0, 0.0, CashoutSource::planted_new};
    const auto s = generate(c);
    const auto series = daily_series(replay_daily(s.registry, s.edges, {}), s.truth);
    std::uint64_t prev_flagged = 0;
    std::uint64_t prev_confirmed = 0;
    for (const auto& row : series.rows) {
        if (row.day < 5 || row.day > 10) EXPECT_EQ(row.union_users, 0u) << row.day;
        EXPECT_GE(row.cumulative_flagged, prev_flagged);
        EXPECT_GE(row.cumulative_confirmed, prev_confirmed);
        EXPECT_LE(row.cumulative_confirmed, row.cumulative_flagged);
        prev_flagged = row.cumulative_flagged;
        prev_confirmed = row.cumulative_confirmed;
    }
    EXPECT_GT(prev_confirmed, 0u);
    EXPECT_TRUE(series.calm_clean());
}

TEST(Reports, CsvLayout) {
    std::ostringstream out;
    const std::vector<MetricsRow> rows = {metrics_from_counts(40.0, 7, 466, 81, 81, 145),
                                          metrics_from_counts(50.0, 0, 0, 0, 0, 0)};
    write_sweep_csv(out, rows);
    EXPECT_EQ(out.str(),
              "threshold,flagged_nodes,flagged_users,caught,carriers,fraudsters,precision,scr,"
              "coverage,unconditional_recall\n"
              "40.000000,7,466,81,81,145,0.173820,1.000000,0.558621,0.558621\n"
              "50.000000,0,0,0,0,0,0.000000,NA,NA,NA\n");
}

TEST(RunBacktest, SnapshotAndReportsAreDeterministic) {
    auto config = preset("case2-desk");
    config.n_users = 6000;
    const auto s = generate(config);
    BacktestOptions options;
    const auto a = run_backtest(s.registry, s.edges, s.truth, options);
    const auto b = run_backtest(s.registry, s.edges, s.truth, options);
    std::ostringstream sa;
    std::ostringstream sb;
    write_summary_csv(sa, a, s.registry, 40.0);
    write_summary_csv(sb, b, s.registry, 40.0);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(a.snapshot_day, 29);
    ASSERT_EQ(a.signals.size(), 3u);
    EXPECT_TRUE(a.replay.activation.find(0)->active);
    EXPECT_FALSE(a.replay.activation.find(2)->active);
}
