#include "sigamp/amplifier.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "sigamp/errors.hpp"

namespace sigamp {

bool ranks_before(const NodeScore& a, const NodeScore& b) noexcept {
    if (a.z != b.z) return a.z > b.z;
    return a.node < b.node;
}

std::vector<NodeAccumulator> aggregate_edges(std::span<const TransactionEdge> edges,
                                             std::size_t signal_count) {
    std::unordered_map<NodeId, std::size_t> slot;
    std::vector<NodeAccumulator> out;
    for (const auto& edge : edges) {
        auto [it, inserted] = slot.try_emplace(edge.node, out.size());
        if (inserted) out.emplace_back(edge.node, signal_count);
        out[it->second].add(edge);
    }
    std::sort(out.begin(), out.end(),
              [](const NodeAccumulator& a, const NodeAccumulator& b) { return a.node < b.node; });
    return out;
}

GlobalBaseline compute_baseline(std::span<const NodeAccumulator> accumulators,
                                SignalIndex signal) {
    // Integer sums: exact and independent of reduction order.
    GlobalBaseline baseline;
    for (const auto& acc : accumulators) {
        baseline.total_hits += acc.hit_count(signal);
        baseline.total_transactions += acc.transactions;
        if (acc.transactions > 0) ++baseline.active_nodes;
    }
    if (baseline.total_transactions == 0) {
        throw Error(ErrorCode::no_baseline, "no transactions in window; cannot score");
    }
    return baseline;
}

bool is_degenerate(const GlobalBaseline& baseline) noexcept {
    return baseline.total_transactions == 0 || baseline.total_hits == 0 ||
           baseline.total_hits == baseline.total_transactions;
}

double shrink(std::uint64_t hits, std::uint64_t transactions, double p_global,
              double prior_strength) {
    if (hits > transactions) {
        throw Error(ErrorCode::invalid_argument, "hits exceed transactions");
    }
    if (!(p_global >= 0.0 && p_global <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "global rate outside [0,1]");
    }
    if (!(prior_strength > 0.0) || !std::isfinite(prior_strength)) {
        throw Error(ErrorCode::invalid_argument, "prior strength must be positive");
    }
    if (transactions == 0) return p_global;
    const double s = static_cast<double>(hits);
    const double t = static_cast<double>(transactions);
    return (s + prior_strength * p_global) / (t + prior_strength);
}

double z_score(double shrunk_rate, double p_global, std::uint64_t transactions) {
    if (!(p_global > 0.0 && p_global < 1.0)) {
        throw Error(ErrorCode::degenerate_baseline, "global rate is 0 or 1; signal inactive");
    }
    if (transactions == 0) {
        throw Error(ErrorCode::unscorable, "node has no transactions");
    }
    const double se = std::sqrt(p_global * (1.0 - p_global) / static_cast<double>(transactions));
    return (shrunk_rate - p_global) / se;
}

NodeScore score_node(const NodeAccumulator& accumulator, const GlobalBaseline& baseline,
                     SignalIndex signal) {
    if (accumulator.transactions == 0) {
        throw Error(ErrorCode::unscorable, "node has no transactions: " + accumulator.node.str());
    }
    if (is_degenerate(baseline)) {
        throw Error(ErrorCode::degenerate_baseline, "global rate is 0 or 1; signal inactive");
    }
    const double p = baseline.p_global();
    NodeScore score;
    score.node = accumulator.node;
    score.signal = signal;
    score.hits = accumulator.hit_count(signal);
    score.transactions = accumulator.transactions;
    score.raw_rate = static_cast<double>(score.hits) / static_cast<double>(score.transactions);
    score.shrunk_rate = shrink(score.hits, score.transactions, p, baseline.prior_strength());
    score.z = z_score(score.shrunk_rate, p, score.transactions);
    return score;
}

std::vector<NodeScore> score_all(std::span<const NodeAccumulator> accumulators,
                                 const GlobalBaseline& baseline, SignalIndex signal) {
    std::vector<NodeScore> out;
    if (accumulators.empty()) return out;
    if (is_degenerate(baseline)) {
        throw Error(ErrorCode::degenerate_baseline, "global rate is 0 or 1; signal inactive");
    }
    out.reserve(accumulators.size());
    for (const auto& acc : accumulators) {
        if (acc.transactions == 0) continue;
        out.push_back(score_node(acc, baseline, signal));
    }
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
}

}  // namespace sigamp
