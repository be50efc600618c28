#pragma once

// Incremental counter state and the daily replay driver.
//
// The engine keeps one NodeAccumulator per node with at least one transaction
// in the current window plus the global totals. Ingesting an edge touches one
// node entry and the globals. Scores are computed lazily from the counters.
//
// Trailing windows keep a per-day delta table so that days falling out of
// the window can be subtracted; cumulative windows keep nothing extra.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "sigamp/amplifier.hpp"
#include "sigamp/detector.hpp"
#include "sigamp/signal_model.hpp"

namespace sigamp {

enum class WindowMode { cumulative, trailing };

struct WindowConfig {
    WindowMode mode = WindowMode::cumulative;
    /// Window length in days; only read in trailing mode.
    std::int64_t days = 1;

    /// Throws invalid_argument when trailing with days < 1.
    void validate() const;
    /// First day inside the window that ends at `day`.
    std::int64_t first_day(std::int64_t day) const noexcept;

    friend bool operator==(const WindowConfig&, const WindowConfig&) = default;
};

class StreamEngine {
public:
    explicit StreamEngine(SignalRegistry registry, WindowConfig window = {});

    /// Adds one transaction. In trailing mode an edge from a later day first
    /// advances the window; an edge older than the window is rejected with
    /// unsorted_input.
    void ingest(const TransactionEdge& edge);

    /// Moves the scoring day forward, evicting expired days in trailing mode.
    /// Throws unsorted_input when `day` is before the current day.
    void advance_to(std::int64_t day);

    /// Throws no_baseline when the window holds no transactions.
    GlobalBaseline baseline(SignalIndex signal) const;

    /// Throws not_found for a node without transactions in the window and
    /// degenerate_baseline when the signal has no usable global rate.
    NodeScore query_score(const NodeId& node, SignalIndex signal) const;

    /// Every node in the window, ranking order. Throws like score_all.
    std::vector<NodeScore> score_all(SignalIndex signal) const;

    /// Node counters sorted by node id.
    std::vector<NodeAccumulator> snapshot() const;

    const NodeAccumulator* find(const NodeId& node) const;

    /// Folds another shard's counters into this one. Both engines must share
    /// registry and window; the later current day wins.
    void merge(const StreamEngine& shard);

    std::uint64_t total_transactions() const noexcept { return total_transactions_; }
    std::uint64_t total_hits(SignalIndex signal) const noexcept {
        return signal < total_hits_.size() ? total_hits_[signal] : 0;
    }
    std::uint64_t active_nodes() const noexcept { return nodes_.size(); }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::optional<std::int64_t> current_day() const noexcept { return current_day_; }
    std::uint64_t edges_ingested() const noexcept { return edges_ingested_; }
    const SignalRegistry& registry() const noexcept { return registry_; }
    const WindowConfig& window() const noexcept { return window_; }

    /// Versioned JSON snapshot of config, node table, globals and (trailing
    /// mode) the per-day deltas. Layout documented in README.
    void save_checkpoint(std::ostream& out) const;
    /// Throws malformed_input on a bad or internally inconsistent snapshot.
    static StreamEngine load_checkpoint(std::istream& in);

private:
    void add_counts(const NodeAccumulator& delta, int sign);
    void evict_through(std::int64_t last_expired_day);

    SignalRegistry registry_;
    WindowConfig window_;
    std::unordered_map<NodeId, NodeAccumulator> nodes_;
    std::uint64_t total_transactions_ = 0;
    std::vector<std::uint64_t> total_hits_;
    std::optional<std::int64_t> current_day_;
    std::uint64_t edges_ingested_ = 0;
    std::map<std::int64_t, std::unordered_map<NodeId, NodeAccumulator>> day_deltas_;
};

struct ReplayOptions {
    WindowConfig window;
    double threshold = 40.0;
    /// Signals to score; empty means every registered signal.
    std::vector<SignalIndex> signals;
    /// Sort edges by day (stable) instead of rejecting unsorted input.
    bool sort_input = false;
};

struct DayTurn {
    std::int64_t day = 0;
    /// One per scored signal, same order as ReplayResult::signals.
    std::vector<SignalOutcome> outcomes;
    /// Per signal: users with a hit-carrying transaction on this day to a node
    /// flagged at this turn.
    std::vector<std::vector<UserId>> daily_users;
    /// Union of daily_users.
    std::vector<UserId> daily_union;
};

struct ReplayResult {
    std::vector<SignalIndex> signals;
    double threshold = 0.0;
    WindowConfig window;
    std::vector<DayTurn> days;
    /// Max z per signal over every turn.
    ActivationReport activation;
};

/// Turn-based daily replay: one scoring turn for every day index from the
/// first to the last edge day. Throws unsorted_input for out-of-order edges
/// unless sort_input is set.
ReplayResult replay_daily(const SignalRegistry& registry,
                          std::span<const TransactionEdge> edges,
                          const ReplayOptions& options);

}  // namespace sigamp
