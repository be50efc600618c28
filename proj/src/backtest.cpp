#include "sigamp/backtest.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_set>

#include <fmt/format.h>

#include "sigamp/errors.hpp"

namespace sigamp {

MetricsRow metrics_from_counts(double threshold, std::uint64_t flagged_nodes,
                               std::uint64_t flagged_users, std::uint64_t caught,
                               std::uint64_t carriers, std::uint64_t fraudsters) {
    MetricsRow row;
    row.threshold = threshold;
    row.flagged_nodes = flagged_nodes;
    row.flagged_users = flagged_users;
    row.caught = caught;
    row.carriers = carriers;
    row.fraudsters = fraudsters;
    row.precision = flagged_users == 0
                        ? 0.0
                        : static_cast<double>(caught) / static_cast<double>(flagged_users);
    if (fraudsters > 0) {
        row.coverage = static_cast<double>(carriers) / static_cast<double>(fraudsters);
    }
    if (carriers > 0) {
        row.scr = static_cast<double>(caught) / static_cast<double>(carriers);
    }
    if (row.scr && row.coverage) row.unconditional_recall = *row.scr * *row.coverage;
    return row;
}

MetricsRow compute_metrics(std::span<const UserId> flagged_users, const GroundTruth& truth,
                           SignalIndex signal, double threshold, std::uint64_t flagged_nodes) {
    std::unordered_set<UserId> unique(flagged_users.begin(), flagged_users.end());
    std::uint64_t caught = 0;
    for (const auto& user : unique) caught += truth.is_sybil(user) ? 1 : 0;
    return metrics_from_counts(threshold, flagged_nodes, unique.size(), caught,
                               truth.carrier_count(signal), truth.sybil_users.size());
}

GroundTruth restrict_to_window(const GroundTruth& truth,
                               std::span<const TransactionEdge> window_edges) {
    GroundTruth out = truth;
    for (auto& [user, mask] : out.carriers) mask = 0;
    for (const auto& edge : window_edges) {
        if (edge.hits == 0) continue;
        auto it = out.carriers.find(edge.user);
        if (it != out.carriers.end()) it->second |= edge.hits;
    }
    return out;
}

RawBaseline raw_signal_baseline(std::span<const TransactionEdge> window_edges,
                                const GroundTruth& truth, SignalIndex signal) {
    std::unordered_set<UserId> carriers;
    for (const auto& edge : window_edges) {
        if (edge.hit(signal)) carriers.insert(edge.user);
    }
    RawBaseline raw;
    raw.carriers = carriers.size();
    for (const auto& user : carriers) raw.fraudster_carriers += truth.is_sybil(user) ? 1 : 0;
    if (raw.carriers > 0) {
        raw.precision = static_cast<double>(raw.fraudster_carriers) / static_cast<double>(raw.carriers);
    }
    return raw;
}

std::optional<double> amplification_factor(double amplified_precision, const RawBaseline& raw) {
    if (!raw.precision || *raw.precision <= 0.0) return std::nullopt;
    return amplified_precision / *raw.precision;
}

std::vector<MetricsRow> threshold_sweep(std::span<const NodeScore> scores,
                                        std::span<const TransactionEdge> window_edges,
                                        const GroundTruth& truth, SignalIndex signal,
                                        std::span<const double> thresholds) {
    if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
        throw Error(ErrorCode::invalid_argument, "thresholds must be sorted ascending");
    }
    std::vector<MetricsRow> rows;
    for (const double threshold : thresholds) {
        const auto flagged = flag_nodes(scores, threshold);
        const auto alerts = attach_users(flagged, window_edges, signal, 0);
        const auto users = flagged_users(alerts);
        rows.push_back(compute_metrics(users, truth, signal, threshold, flagged.size()));
    }
    return rows;
}

DailySeries daily_series(const ReplayResult& replay, const GroundTruth& truth) {
    DailySeries series;
    series.signals = replay.signals;
    std::unordered_set<UserId> seen;
    std::uint64_t confirmed = 0;
    for (const auto& turn : replay.days) {
        DailyRow row;
        row.day = turn.day;
        for (const auto& users : turn.daily_users) row.per_signal.push_back(users.size());
        row.union_users = turn.daily_union.size();
        for (const auto& user : turn.daily_union) {
            if (seen.insert(user).second && truth.is_sybil(user)) ++confirmed;
        }
        row.cumulative_flagged = seen.size();
        row.cumulative_confirmed = confirmed;
        row.calm = !truth.attack_window || turn.day < truth.attack_window->first ||
                   turn.day > truth.attack_window->second;
        if (row.calm) series.calm_flags += row.union_users;
        series.rows.push_back(std::move(row));
    }
    return series;
}

BacktestReport run_backtest(const SignalRegistry& registry,
                            std::span<const TransactionEdge> input, const GroundTruth& truth,
                            const BacktestOptions& options) {
    if (!std::is_sorted(options.thresholds.begin(), options.thresholds.end())) {
        throw Error(ErrorCode::invalid_argument, "thresholds must be sorted ascending");
    }
    std::vector<TransactionEdge> edges(input.begin(), input.end());
    std::stable_sort(edges.begin(), edges.end(),
                     [](const auto& a, const auto& b) { return a.day < b.day; });

    BacktestReport report;
    ReplayOptions replay_options;
    replay_options.window = options.window;
    replay_options.threshold = options.threshold;
    replay_options.signals = options.signals;
    report.replay = replay_daily(registry, edges, replay_options);
    report.daily = daily_series(report.replay, truth);
    if (edges.empty()) return report;

    report.snapshot_day = options.snapshot_day.value_or(edges.back().day);
    const std::int64_t first = options.window.first_day(report.snapshot_day);
    auto begin = std::find_if(edges.begin(), edges.end(),
                              [&](const auto& e) { return e.day >= first; });
    auto end = std::find_if(begin, edges.end(),
                            [&](const auto& e) { return e.day > report.snapshot_day; });
    const auto window = std::span<const TransactionEdge>(edges).subspan(
        static_cast<std::size_t>(begin - edges.begin()), static_cast<std::size_t>(end - begin));
    const auto window_truth = restrict_to_window(truth, window);
    const auto accs = aggregate_edges(window, registry.size());

    for (const SignalIndex signal : report.replay.signals) {
        SignalReport sr;
        sr.signal = signal;
        sr.raw = raw_signal_baseline(window, window_truth, signal);
        if (!accs.empty()) {
            const auto baseline = compute_baseline(accs, signal);
            sr.has_baseline = !is_degenerate(baseline);
            if (sr.has_baseline) {
                const auto scores = score_all(accs, baseline, signal);
                sr.sweep = threshold_sweep(scores, window, window_truth, signal, options.thresholds);
                const auto flagged = flag_nodes(scores, options.threshold);
                sr.alerts = attach_users(flagged, window, signal, report.snapshot_day);
                const auto users = flagged_users(sr.alerts);
                sr.at_threshold =
                    compute_metrics(users, window_truth, signal, options.threshold, flagged.size());
                sr.amplification = amplification_factor(sr.at_threshold->precision, sr.raw);
            }
        }
        report.signals.push_back(std::move(sr));
    }
    return report;
}

namespace {

std::string fmt_opt(const std::optional<double>& x) {
    return x ? fmt::format("{:.6f}", *x) : std::string("NA");
}

}  // namespace

void write_sweep_csv(std::ostream& out, std::span<const MetricsRow> rows) {
    out << "threshold,flagged_nodes,flagged_users,caught,carriers,fraudsters,precision,scr,"
           "coverage,unconditional_recall\n";
    for (const auto& r : rows) {
        out << fmt::format("{:.6f},{},{},{},{},{},{:.6f},{},{},{}\n", r.threshold, r.flagged_nodes,
                           r.flagged_users, r.caught, r.carriers, r.fraudsters, r.precision,
                           fmt_opt(r.scr), fmt_opt(r.coverage), fmt_opt(r.unconditional_recall));
    }
}

void write_daily_csv(std::ostream& out, const DailySeries& series, const SignalRegistry& registry) {
    out << "day";
    for (const auto signal : series.signals) out << ',' << registry.id(signal);
    out << ",union,cumulative_flagged,cumulative_confirmed,calm\n";
    for (const auto& row : series.rows) {
        out << row.day;
        for (const auto n : row.per_signal) out << ',' << n;
        out << fmt::format(",{},{},{},{}\n", row.union_users, row.cumulative_flagged,
                           row.cumulative_confirmed, row.calm ? 1 : 0);
    }
}

void write_summary_csv(std::ostream& out, const BacktestReport& report,
                       const SignalRegistry& registry, double threshold) {
    out << "signal,snapshot_day,threshold,has_baseline,max_z,active,raw_carriers,"
           "raw_fraudster_carriers,raw_precision,precision,scr,coverage,amplification\n";
    for (const auto& sr : report.signals) {
        const auto* act = report.replay.activation.find(sr.signal);
        const std::optional<double> max_z = act ? act->max_z : std::nullopt;
        const bool active = act != nullptr && act->active;
        std::optional<double> precision;
        std::optional<double> scr;
        std::optional<double> coverage;
        if (sr.at_threshold) {
            precision = sr.at_threshold->precision;
            scr = sr.at_threshold->scr;
            coverage = sr.at_threshold->coverage;
        }
        out << fmt::format("{},{},{:.6f},{},{},{},{},{},{},{},{},{},{}\n", registry.id(sr.signal),
                           report.snapshot_day, threshold, sr.has_baseline ? 1 : 0, fmt_opt(max_z),
                           active ? 1 : 0, sr.raw.carriers, sr.raw.fraudster_carriers,
                           fmt_opt(sr.raw.precision), fmt_opt(precision), fmt_opt(scr),
                           fmt_opt(coverage), fmt_opt(sr.amplification));
    }
}

}  // namespace sigamp
