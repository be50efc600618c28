#include "sigamp/stream_engine.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "sigamp/errors.hpp"

namespace sigamp {

using nlohmann::json;

void WindowConfig::validate() const {
    if (mode == WindowMode::trailing && days < 1) {
        throw Error(ErrorCode::invalid_argument, "trailing window needs at least one day");
    }
}

std::int64_t WindowConfig::first_day(std::int64_t day) const noexcept {
    if (mode == WindowMode::cumulative) return std::numeric_limits<std::int64_t>::min();
    return day - days + 1;
}

StreamEngine::StreamEngine(SignalRegistry registry, WindowConfig window)
    : registry_(std::move(registry)), window_(window), total_hits_(registry_.size(), 0) {
    window_.validate();
}

void StreamEngine::ingest(const TransactionEdge& edge) {
    validate_edge(registry_, edge);
    if (!current_day_ || edge.day > *current_day_) {
        advance_to(edge.day);
    } else if (edge.day < window_.first_day(*current_day_)) {
        throw Error(ErrorCode::unsorted_input,
                    "edge day " + std::to_string(edge.day) + " is older than the window");
    }

    auto it = nodes_.find(edge.node);
    if (it == nodes_.end()) {
        it = nodes_.emplace(edge.node, NodeAccumulator(edge.node, registry_.size())).first;
    }
    it->second.add(edge);
    ++total_transactions_;
    SignalMask bits = edge.hits;
    while (bits != 0) {
        ++total_hits_[static_cast<std::size_t>(__builtin_ctzll(bits))];
        bits &= bits - 1;
    }

    if (window_.mode == WindowMode::trailing) {
        auto& day = day_deltas_[edge.day];
        auto d = day.find(edge.node);
        if (d == day.end()) {
            d = day.emplace(edge.node, NodeAccumulator(edge.node, registry_.size())).first;
        }
        d->second.add(edge);
    }
    ++edges_ingested_;
}

void StreamEngine::advance_to(std::int64_t day) {
    if (current_day_ && day < *current_day_) {
        throw Error(ErrorCode::unsorted_input, "cannot move the scoring day backwards");
    }
    current_day_ = day;
    if (window_.mode == WindowMode::trailing) evict_through(day - window_.days);
}

void StreamEngine::add_counts(const NodeAccumulator& delta, int sign) {
    auto it = nodes_.find(delta.node);
    if (sign > 0) {
        if (it == nodes_.end()) {
            it = nodes_.emplace(delta.node, NodeAccumulator(delta.node, registry_.size())).first;
        }
        it->second = merge_accumulators(it->second, delta);
        total_transactions_ += delta.transactions;
        for (std::size_t k = 0; k < total_hits_.size(); ++k) total_hits_[k] += delta.hit_count(k);
        return;
    }
    // Eviction: the delta was previously added, so every count is covered.
    auto& acc = it->second;
    acc.transactions -= delta.transactions;
    total_transactions_ -= delta.transactions;
    for (std::size_t k = 0; k < total_hits_.size(); ++k) {
        acc.hits[k] -= delta.hit_count(k);
        total_hits_[k] -= delta.hit_count(k);
    }
    if (acc.transactions == 0) nodes_.erase(it);
}

void StreamEngine::evict_through(std::int64_t last_expired_day) {
    while (!day_deltas_.empty() && day_deltas_.begin()->first <= last_expired_day) {
        for (const auto& [node, delta] : day_deltas_.begin()->second) add_counts(delta, -1);
        day_deltas_.erase(day_deltas_.begin());
    }
}

GlobalBaseline StreamEngine::baseline(SignalIndex signal) const {
    if (signal >= registry_.size()) {
        throw Error(ErrorCode::unknown_signal, "signal index out of range");
    }
    if (total_transactions_ == 0) {
        throw Error(ErrorCode::no_baseline, "no transactions in window; cannot score");
    }
    return {total_hits_[signal], total_transactions_, nodes_.size()};
}

NodeScore StreamEngine::query_score(const NodeId& node, SignalIndex signal) const {
    auto it = nodes_.find(node);
    if (it == nodes_.end()) {
        throw Error(ErrorCode::not_found, "node not in window: " + node.str());
    }
    return score_node(it->second, baseline(signal), signal);
}

std::vector<NodeScore> StreamEngine::score_all(SignalIndex signal) const {
    if (nodes_.empty()) return {};
    const auto accs = snapshot();
    return sigamp::score_all(accs, baseline(signal), signal);
}

std::vector<NodeAccumulator> StreamEngine::snapshot() const {
    std::vector<NodeAccumulator> out;
    out.reserve(nodes_.size());
    for (const auto& [node, acc] : nodes_) out.push_back(acc);
    std::sort(out.begin(), out.end(),
              [](const NodeAccumulator& a, const NodeAccumulator& b) { return a.node < b.node; });
    return out;
}

const NodeAccumulator* StreamEngine::find(const NodeId& node) const {
    auto it = nodes_.find(node);
    return it == nodes_.end() ? nullptr : &it->second;
}

void StreamEngine::merge(const StreamEngine& shard) {
    if (!(shard.registry_ == registry_) || !(shard.window_ == window_)) {
        throw Error(ErrorCode::invalid_argument, "shards differ in signals or window");
    }
    if (window_.mode == WindowMode::trailing) {
        for (const auto& [day, table] : shard.day_deltas_) {
            auto& mine = day_deltas_[day];
            for (const auto& [node, delta] : table) {
                auto it = mine.find(node);
                if (it == mine.end()) {
                    mine.emplace(node, delta);
                } else {
                    it->second = merge_accumulators(it->second, delta);
                }
            }
        }
    }
    for (const auto& [node, acc] : shard.nodes_) add_counts(acc, +1);
    edges_ingested_ += shard.edges_ingested_;
    if (shard.current_day_ && (!current_day_ || *shard.current_day_ > *current_day_)) {
        current_day_ = shard.current_day_;
    }
    if (current_day_ && window_.mode == WindowMode::trailing) {
        evict_through(*current_day_ - window_.days);
    }
}

namespace {

json encode_accumulator(const NodeAccumulator& acc) {
    return json::array({acc.node.str(), acc.transactions, acc.hits});
}

NodeAccumulator decode_accumulator(const json& j, std::size_t signal_count) {
    if (!j.is_array() || j.size() != 3) {
        throw Error(ErrorCode::malformed_input, "checkpoint node entry must be [id, t, [s...]]");
    }
    NodeAccumulator acc(NodeId(j[0].get<std::string>()), signal_count);
    acc.transactions = j[1].get<std::uint64_t>();
    const auto hits = j[2].get<std::vector<std::uint64_t>>();
    if (hits.size() != signal_count) {
        throw Error(ErrorCode::malformed_input, "checkpoint hit vector has wrong width");
    }
    for (std::size_t k = 0; k < signal_count; ++k) {
        if (hits[k] > acc.transactions) {
            throw Error(ErrorCode::malformed_input, "checkpoint node has hits > transactions");
        }
        acc.hits[k] = hits[k];
    }
    return acc;
}

constexpr const char* kCheckpointFormat = "sigamp-checkpoint";
constexpr int kCheckpointVersion = 1;

}  // namespace

void StreamEngine::save_checkpoint(std::ostream& out) const {
    json j;
    j["format"] = kCheckpointFormat;
    j["version"] = kCheckpointVersion;
    j["signals"] = registry_.ids();
    j["window"] = {{"mode", window_.mode == WindowMode::cumulative ? "cumulative" : "trailing"},
                   {"days", window_.days}};
    j["current_day"] = current_day_ ? json(*current_day_) : json(nullptr);
    j["edges_ingested"] = edges_ingested_;
    j["globals"] = {{"transactions", total_transactions_},
                    {"hits", total_hits_},
                    {"active_nodes", nodes_.size()}};
    auto nodes = json::array();
    for (const auto& acc : snapshot()) nodes.push_back(encode_accumulator(acc));
    j["nodes"] = std::move(nodes);
    auto days = json::array();
    for (const auto& [day, table] : day_deltas_) {
        std::vector<const NodeAccumulator*> sorted;
        for (const auto& [node, delta] : table) sorted.push_back(&delta);
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto* a, const auto* b) { return a->node < b->node; });
        auto entries = json::array();
        for (const auto* delta : sorted) entries.push_back(encode_accumulator(*delta));
        days.push_back({{"day", day}, {"nodes", std::move(entries)}});
    }
    j["day_deltas"] = std::move(days);
    out << j.dump() << '\n';
    if (!out) throw Error(ErrorCode::io, "failed to write checkpoint");
}

StreamEngine StreamEngine::load_checkpoint(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::malformed_input, std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format") != kCheckpointFormat) {
            throw Error(ErrorCode::malformed_input, "not a sigamp checkpoint");
        }
        if (j.at("version") != kCheckpointVersion) {
            throw Error(ErrorCode::malformed_input, "unsupported checkpoint version");
        }
        SignalRegistry registry(j.at("signals").get<std::vector<std::string>>());
        WindowConfig window;
        const auto mode = j.at("window").at("mode").get<std::string>();
        if (mode == "cumulative") {
            window.mode = WindowMode::cumulative;
        } else if (mode == "trailing") {
            window.mode = WindowMode::trailing;
        } else {
            throw Error(ErrorCode::malformed_input, "unknown window mode: " + mode);
        }
        window.days = j.at("window").at("days").get<std::int64_t>();

        StreamEngine engine(std::move(registry), window);
        const std::size_t width = engine.registry_.size();
        if (!j.at("current_day").is_null()) engine.current_day_ = j["current_day"].get<std::int64_t>();
        engine.edges_ingested_ = j.at("edges_ingested").get<std::uint64_t>();

        for (const auto& entry : j.at("nodes")) {
            auto acc = decode_accumulator(entry, width);
            if (acc.transactions == 0) {
                throw Error(ErrorCode::malformed_input, "checkpoint lists an idle node");
            }
            NodeId id = acc.node;
            if (!engine.nodes_.emplace(std::move(id), acc).second) {
                throw Error(ErrorCode::malformed_input, "duplicate node in checkpoint");
            }
            engine.total_transactions_ += acc.transactions;
            for (std::size_t k = 0; k < width; ++k) engine.total_hits_[k] += acc.hits[k];
        }
        const auto& globals = j.at("globals");
        if (globals.at("transactions").get<std::uint64_t>() != engine.total_transactions_ ||
            globals.at("hits").get<std::vector<std::uint64_t>>() != engine.total_hits_ ||
            globals.at("active_nodes").get<std::uint64_t>() != engine.nodes_.size()) {
            throw Error(ErrorCode::malformed_input, "checkpoint globals disagree with node table");
        }

        std::unordered_map<NodeId, NodeAccumulator> delta_sum;
        for (const auto& day : j.at("day_deltas")) {
            auto& table = engine.day_deltas_[day.at("day").get<std::int64_t>()];
            for (const auto& entry : day.at("nodes")) {
                auto delta = decode_accumulator(entry, width);
                auto [it, inserted] = delta_sum.try_emplace(delta.node, delta);
                if (!inserted) it->second = merge_accumulators(it->second, delta);
                NodeId id = delta.node;
                table.emplace(std::move(id), std::move(delta));
            }
        }
        if (window.mode == WindowMode::trailing) {
            bool consistent = delta_sum.size() == engine.nodes_.size();
            for (const auto& [node, sum] : delta_sum) {
                const auto* acc = engine.find(node);
                consistent = consistent && acc != nullptr && *acc == sum;
            }
            if (!consistent) {
                throw Error(ErrorCode::malformed_input, "checkpoint day deltas disagree with node table");
            }
        } else if (!engine.day_deltas_.empty()) {
            throw Error(ErrorCode::malformed_input, "cumulative checkpoint carries day deltas");
        }
        return engine;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::malformed_input, std::string("bad checkpoint field: ") + e.what());
    }
}

ReplayResult replay_daily(const SignalRegistry& registry,
                          std::span<const TransactionEdge> input,
                          const ReplayOptions& options) {
    options.window.validate();
    const bool sorted = std::is_sorted(input.begin(), input.end(),
                                       [](const auto& a, const auto& b) { return a.day < b.day; });
    std::vector<TransactionEdge> owned;
    std::span<const TransactionEdge> edges = input;
    if (!sorted) {
        if (!options.sort_input) {
            throw Error(ErrorCode::unsorted_input, "edges are not ordered by day");
        }
        owned.assign(input.begin(), input.end());
        std::stable_sort(owned.begin(), owned.end(),
                         [](const auto& a, const auto& b) { return a.day < b.day; });
        edges = owned;
    }

    ReplayResult result;
    result.threshold = options.threshold;
    result.window = options.window;
    result.signals = options.signals;
    if (result.signals.empty()) {
        for (SignalIndex k = 0; k < registry.size(); ++k) result.signals.push_back(k);
    }
    for (auto k : result.signals) {
        if (k >= registry.size()) throw Error(ErrorCode::unknown_signal, "signal index out of range");
    }
    std::vector<std::optional<double>> overall_max(result.signals.size());

    if (!edges.empty()) {
        StreamEngine engine(registry, options.window);
        const std::int64_t first = edges.front().day;
        const std::int64_t last = edges.back().day;
        std::size_t next = 0;  // first edge not yet ingested
        std::size_t window_begin = 0;
        for (std::int64_t day = first; day <= last; ++day) {
            engine.advance_to(day);
            const std::size_t day_begin = next;
            while (next < edges.size() && edges[next].day == day) engine.ingest(edges[next++]);
            const std::int64_t window_first = options.window.first_day(day);
            while (window_begin < next && edges[window_begin].day < window_first) ++window_begin;
            const auto window_edges = edges.subspan(window_begin, next - window_begin);
            const auto today = edges.subspan(day_begin, next - day_begin);

            DayTurn turn;
            turn.day = day;
            const auto accs = engine.snapshot();
            for (std::size_t i = 0; i < result.signals.size(); ++i) {
                const SignalIndex signal = result.signals[i];
                SignalOutcome outcome{signal, std::nullopt, {}};
                std::vector<UserId> daily;
                if (engine.total_transactions() > 0) {
                    const auto baseline = compute_baseline(accs, signal);
                    if (!is_degenerate(baseline)) {
                        const auto scores = score_all(accs, baseline, signal);
                        if (!scores.empty()) outcome.max_z = scores.front().z;
                        const auto flagged = flag_nodes(scores, options.threshold);
                        outcome.alerts = attach_users(flagged, window_edges, signal, day);
                        if (!outcome.alerts.empty()) {
                            auto day_alerts = attach_users(flagged, today, signal, day);
                            daily = flagged_users(day_alerts);
                        }
                    }
                }
                if (outcome.max_z &&
                    (!overall_max[i] || *outcome.max_z > *overall_max[i])) {
                    overall_max[i] = outcome.max_z;
                }
                turn.outcomes.push_back(std::move(outcome));
                turn.daily_users.push_back(std::move(daily));
            }
            std::vector<UserId> all;
            for (const auto& users : turn.daily_users) all.insert(all.end(), users.begin(), users.end());
            std::sort(all.begin(), all.end());
            all.erase(std::unique(all.begin(), all.end()), all.end());
            turn.daily_union = std::move(all);
            result.days.push_back(std::move(turn));
        }
    }
    result.activation = make_activation_report(result.signals, overall_max, options.threshold);
    return result;
}

}  // namespace sigamp
