#pragma once

// Metrics and report emission for replayed runs against ground truth.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sigamp/amplifier.hpp"
#include "sigamp/detector.hpp"
#include "sigamp/scenario.hpp"
#include "sigamp/stream_engine.hpp"

namespace sigamp {

struct MetricsRow {
    double threshold = 0.0;
    std::uint64_t flagged_nodes = 0;
    std::uint64_t flagged_users = 0;
    std::uint64_t caught = 0;      // flagged users that are fraudsters
    std::uint64_t carriers = 0;    // fraudsters carrying the signal
    std::uint64_t fraudsters = 0;
    double precision = 0.0;        // caught / flagged_users, 0 when nothing flagged
    // Not applicable (empty) without fraudsters or carriers.
    std::optional<double> scr;
    std::optional<double> coverage;
    std::optional<double> unconditional_recall;  // scr * coverage
};

/// Pure arithmetic over counts.
MetricsRow metrics_from_counts(double threshold, std::uint64_t flagged_nodes,
                               std::uint64_t flagged_users, std::uint64_t caught,
                               std::uint64_t carriers, std::uint64_t fraudsters);

/// `flagged_users` need not be unique; each user counts once.
MetricsRow compute_metrics(std::span<const UserId> flagged_users, const GroundTruth& truth,
                           SignalIndex signal, double threshold = 0.0,
                           std::uint64_t flagged_nodes = 0);

/// Copy of `truth` whose carrier flags are recomputed from `window_edges`.
GroundTruth restrict_to_window(const GroundTruth& truth,
                               std::span<const TransactionEdge> window_edges);

struct RawBaseline {
    std::uint64_t carriers = 0;
    std::uint64_t fraudster_carriers = 0;
    /// Empty when nobody carries the signal.
    std::optional<double> precision;
};

/// Precision of flagging every user with a hit in the window.
RawBaseline raw_signal_baseline(std::span<const TransactionEdge> window_edges,
                                const GroundTruth& truth, SignalIndex signal);

std::optional<double> amplification_factor(double amplified_precision, const RawBaseline& raw);

/// One row per threshold. Throws invalid_argument unless thresholds ascend.
std::vector<MetricsRow> threshold_sweep(std::span<const NodeScore> scores,
                                        std::span<const TransactionEdge> window_edges,
                                        const GroundTruth& truth, SignalIndex signal,
                                        std::span<const double> thresholds);

struct DailyRow {
    std::int64_t day = 0;
    std::vector<std::uint64_t> per_signal;  // same order as the replay's signals
    std::uint64_t union_users = 0;
    std::uint64_t cumulative_flagged = 0;
    std::uint64_t cumulative_confirmed = 0;
    bool calm = true;  // outside the attack window
};

struct DailySeries {
    std::vector<SignalIndex> signals;
    std::vector<DailyRow> rows;
    /// Users flagged on calm days, summed over days.
    std::uint64_t calm_flags = 0;
    bool calm_clean() const noexcept { return calm_flags == 0; }
};

DailySeries daily_series(const ReplayResult& replay, const GroundTruth& truth);

struct BacktestOptions {
    WindowConfig window;
    double threshold = 40.0;
    std::vector<double> thresholds = {1.0, 5.0, 10.0, 40.0};
    std::vector<SignalIndex> signals;  // empty: all
    /// Day of the single-window snapshot; defaults to the last edge day.
    std::optional<std::int64_t> snapshot_day;
};

struct SignalReport {
    SignalIndex signal = 0;
    bool has_baseline = false;
    std::vector<MetricsRow> sweep;
    /// Metrics at the primary threshold.
    std::optional<MetricsRow> at_threshold;
    RawBaseline raw;
    std::optional<double> amplification;
    std::vector<Alert> alerts;  // at the primary threshold
};

struct BacktestReport {
    std::int64_t snapshot_day = 0;
    std::vector<SignalReport> signals;
    ReplayResult replay;
    DailySeries daily;
};

/// Replays every day, then scores the snapshot window and sweeps thresholds.
BacktestReport run_backtest(const SignalRegistry& registry,
                            std::span<const TransactionEdge> edges, const GroundTruth& truth,
                            const BacktestOptions& options);

void write_sweep_csv(std::ostream& out, std::span<const MetricsRow> rows);
void write_daily_csv(std::ostream& out, const DailySeries& series, const SignalRegistry& registry);
void write_summary_csv(std::ostream& out, const BacktestReport& report,
                       const SignalRegistry& registry, double threshold);

}  // namespace sigamp
