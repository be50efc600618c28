#include "sigamp/signal_model.hpp"

#include <algorithm>

#include "sigamp/errors.hpp"

namespace sigamp {

template <typename Tag>
StrongId<Tag>::StrongId(std::string value) : value_(std::move(value)) {
    if (value_.empty()) {
        throw Error(ErrorCode::invalid_argument, "identifier must be non-empty");
    }
}

template class StrongId<UserTag>;
template class StrongId<NodeTag>;

SignalRegistry::SignalRegistry(const std::vector<std::string>& ids) {
    for (const auto& id : ids) register_signal(id);
}

SignalIndex SignalRegistry::register_signal(std::string id, std::string description) {
    if (id.empty()) {
        throw Error(ErrorCode::invalid_argument, "signal id must be non-empty");
    }
    if (index_.contains(id)) {
        throw Error(ErrorCode::duplicate_signal, "signal already registered: " + id);
    }
    if (signals_.size() >= kMaxSignals) {
        throw Error(ErrorCode::invalid_argument, "too many signals (max 64)");
    }
    const SignalIndex index = signals_.size();
    index_.emplace(id, index);
    signals_.push_back({std::move(id), std::move(description)});
    return index;
}

std::optional<SignalIndex> SignalRegistry::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

SignalIndex SignalRegistry::index_of(std::string_view id) const {
    if (auto index = find(id)) return *index;
    throw Error(ErrorCode::unknown_signal, "unregistered signal: " + std::string(id));
}

std::vector<std::string> SignalRegistry::ids() const {
    std::vector<std::string> out;
    out.reserve(signals_.size());
    for (const auto& s : signals_) out.push_back(s.id);
    return out;
}

SignalMask SignalRegistry::unregistered_bits() const noexcept {
    if (signals_.size() >= kMaxSignals) return 0;
    return ~((SignalMask{1} << signals_.size()) - 1);
}

bool operator==(const SignalRegistry& a, const SignalRegistry& b) {
    return a.ids() == b.ids();
}

TransactionEdge make_edge(const SignalRegistry& registry, UserId user, NodeId node,
                          std::int64_t day, const std::map<std::string, int>& hits) {
    TransactionEdge edge{std::move(user), std::move(node), day, 0};
    for (const auto& [name, bit] : hits) {
        const SignalIndex index = registry.index_of(name);
        if (bit != 0 && bit != 1) {
            throw Error(ErrorCode::invalid_argument, "hit bit must be 0 or 1 for " + name);
        }
        if (bit == 1) edge.hits |= SignalMask{1} << index;
    }
    validate_edge(registry, edge);
    return edge;
}

void validate_edge(const SignalRegistry& registry, const TransactionEdge& edge) {
    if (edge.user.empty() || edge.node.empty()) {
        throw Error(ErrorCode::invalid_argument, "edge endpoints must be non-empty");
    }
    if (edge.day < 0) {
        throw Error(ErrorCode::invalid_argument, "edge day must be >= 0");
    }
    if ((edge.hits & registry.unregistered_bits()) != 0) {
        throw Error(ErrorCode::unknown_signal, "edge carries a bit for an unregistered signal");
    }
}

void NodeAccumulator::add(const TransactionEdge& edge) {
    ++transactions;
    SignalMask bits = edge.hits;
    while (bits != 0) {
        const auto k = static_cast<SignalIndex>(__builtin_ctzll(bits));
        if (k >= hits.size()) hits.resize(k + 1, 0);
        ++hits[k];
        bits &= bits - 1;
    }
}

bool operator==(const NodeAccumulator& a, const NodeAccumulator& b) {
    if (a.node != b.node || a.transactions != b.transactions) return false;
    const std::size_t n = std::max(a.hits.size(), b.hits.size());
    for (std::size_t k = 0; k < n; ++k) {
        if (a.hit_count(k) != b.hit_count(k)) return false;
    }
    return true;
}

NodeAccumulator merge_accumulators(const NodeAccumulator& a, const NodeAccumulator& b) {
    if (a.node != b.node) {
        throw Error(ErrorCode::node_mismatch,
                    "cannot merge accumulators of " + a.node.str() + " and " + b.node.str());
    }
    NodeAccumulator out(a.node, std::max(a.hits.size(), b.hits.size()));
    out.transactions = a.transactions + b.transactions;
    for (std::size_t k = 0; k < out.hits.size(); ++k) {
        out.hits[k] = a.hit_count(k) + b.hit_count(k);
    }
    return out;
}

double GlobalBaseline::p_global() const noexcept {
    if (total_transactions == 0) return 0.0;
    return static_cast<double>(total_hits) / static_cast<double>(total_transactions);
}

double GlobalBaseline::prior_strength() const noexcept {
    if (active_nodes == 0) return 0.0;
    return static_cast<double>(total_transactions) / static_cast<double>(active_nodes);
}

}  // namespace sigamp
