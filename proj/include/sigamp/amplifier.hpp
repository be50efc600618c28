#pragma once

// Bipartite aggregation, empirical-Bayes shrinkage and the proportion z-test.
// Everything here is a pure function of its inputs.

#include <cstdint>
#include <span>
#include <vector>

#include "sigamp/signal_model.hpp"

namespace sigamp {

struct NodeScore {
    NodeId node;
    SignalIndex signal = 0;
    std::uint64_t hits = 0;
    std::uint64_t transactions = 0;
    double raw_rate = 0.0;     // hits / transactions
    double shrunk_rate = 0.0;  // pulled toward the global rate
    double z = 0.0;

    friend bool operator==(const NodeScore&, const NodeScore&) = default;
};

/// Ranking order: z descending, node id ascending on ties.
bool ranks_before(const NodeScore& a, const NodeScore& b) noexcept;

/// One accumulator per distinct node, sorted by node id. Each edge is one
/// trial for every registered signal.
std::vector<NodeAccumulator> aggregate_edges(std::span<const TransactionEdge> edges,
                                             std::size_t signal_count);

/// Sums hits and transactions over all accumulators and counts nodes with at
/// least one transaction. Throws no_baseline when there are no transactions.
GlobalBaseline compute_baseline(std::span<const NodeAccumulator> accumulators,
                                SignalIndex signal);

/// True when the global rate is 0 or 1 and the z-test has no variance.
bool is_degenerate(const GlobalBaseline& baseline) noexcept;

/// (hits + M * p_global) / (transactions + M). Returns p_global when there is
/// no data. Throws invalid_argument on hits > transactions, p outside [0,1]
/// or a non-positive prior strength.
double shrink(std::uint64_t hits, std::uint64_t transactions, double p_global,
              double prior_strength);

/// Deviation of the shrunk rate from the global rate in units of the binomial
/// standard error at `transactions` trials.
/// Throws degenerate_baseline when p_global is 0 or 1, unscorable when
/// transactions is 0.
double z_score(double shrunk_rate, double p_global, std::uint64_t transactions);

/// Throws unscorable for an idle node and degenerate_baseline as z_score does.
NodeScore score_node(const NodeAccumulator& accumulator, const GlobalBaseline& baseline,
                     SignalIndex signal);

/// Scores every accumulator with at least one transaction and returns them in
/// ranking order.
std::vector<NodeScore> score_all(std::span<const NodeAccumulator> accumulators,
                                 const GlobalBaseline& baseline, SignalIndex signal);

}  // namespace sigamp
