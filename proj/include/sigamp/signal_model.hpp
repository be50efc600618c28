#pragma once

// Shared vocabulary: identifiers, the signal registry, transaction edges and
// the per-node counters every other module reads.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sigamp {

/// Opaque non-empty identifier. The tag keeps users and nodes from being
/// mixed up at compile time.
template <typename Tag>
class StrongId {
public:
    StrongId() = default;
    explicit StrongId(std::string value);

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    friend bool operator==(const StrongId&, const StrongId&) = default;
    friend auto operator<=>(const StrongId&, const StrongId&) = default;

private:
    std::string value_;
};

struct UserTag {};
struct NodeTag {};
using UserId = StrongId<UserTag>;
using NodeId = StrongId<NodeTag>;

using SignalIndex = std::size_t;
/// One bit per registered signal, in registry order.
using SignalMask = std::uint64_t;
inline constexpr std::size_t kMaxSignals = 64;

struct SignalInfo {
    std::string id;
    std::string description;
};

class SignalRegistry {
public:
    SignalRegistry() = default;
    explicit SignalRegistry(const std::vector<std::string>& ids);

    /// Throws duplicate_signal if `id` is taken, invalid_argument if empty or
    /// the registry is full.
    SignalIndex register_signal(std::string id, std::string description = {});

    std::optional<SignalIndex> find(std::string_view id) const;
    /// Throws unknown_signal.
    SignalIndex index_of(std::string_view id) const;

    const SignalInfo& at(SignalIndex index) const { return signals_.at(index); }
    const std::string& id(SignalIndex index) const { return signals_.at(index).id; }
    std::size_t size() const noexcept { return signals_.size(); }
    bool empty() const noexcept { return signals_.empty(); }
    std::vector<std::string> ids() const;

    /// Bits outside the registered range.
    SignalMask unregistered_bits() const noexcept;

    friend bool operator==(const SignalRegistry& a, const SignalRegistry& b);

private:
    std::vector<SignalInfo> signals_;
    std::unordered_map<std::string, SignalIndex> index_;
};

struct TransactionEdge {
    UserId user;
    NodeId node;
    std::int64_t day = 0;
    SignalMask hits = 0;

    bool hit(SignalIndex signal) const noexcept {
        return signal < kMaxSignals && ((hits >> signal) & 1U) != 0;
    }

    friend bool operator==(const TransactionEdge&, const TransactionEdge&) = default;
};

/// Builds an edge from named hit bits. Signals absent from `hits` are 0.
/// Throws unknown_signal for an unregistered name and invalid_argument for a
/// bit other than 0/1 or a negative day.
TransactionEdge make_edge(const SignalRegistry& registry, UserId user, NodeId node,
                          std::int64_t day, const std::map<std::string, int>& hits);

/// Rejects edges carrying bits for unregistered signals or a negative day.
void validate_edge(const SignalRegistry& registry, const TransactionEdge& edge);

/// Per-node counters. `transactions` is shared by every signal; `hits[k]` is
/// the hit count for signal k (missing trailing entries read as 0).
struct NodeAccumulator {
    NodeId node;
    std::uint64_t transactions = 0;
    std::vector<std::uint64_t> hits;

    NodeAccumulator() = default;
    NodeAccumulator(NodeId id, std::size_t signal_count)
        : node(std::move(id)), hits(signal_count, 0) {}

    std::uint64_t hit_count(SignalIndex signal) const noexcept {
        return signal < hits.size() ? hits[signal] : 0;
    }

    void add(const TransactionEdge& edge);

    friend bool operator==(const NodeAccumulator& a, const NodeAccumulator& b);
};

/// Field-wise sum. Throws node_mismatch when the nodes differ.
NodeAccumulator merge_accumulators(const NodeAccumulator& a, const NodeAccumulator& b);

/// Corpus-level totals for one signal.
struct GlobalBaseline {
    std::uint64_t total_hits = 0;
    std::uint64_t total_transactions = 0;
    std::uint64_t active_nodes = 0;

    double p_global() const noexcept;
    /// Mean transaction volume per active node; the shrinkage prior strength.
    double prior_strength() const noexcept;

    friend bool operator==(const GlobalBaseline&, const GlobalBaseline&) = default;
};

}  // namespace sigamp

template <typename Tag>
struct std::hash<sigamp::StrongId<Tag>> {
    std::size_t operator()(const sigamp::StrongId<Tag>& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};
