#include "sigamp/detector.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <json.hpp>

#include "sigamp/errors.hpp"

namespace sigamp {

std::vector<NodeScore> flag_nodes(std::span<const NodeScore> scores, double threshold) {
    if (!std::isfinite(threshold)) {
        throw Error(ErrorCode::invalid_argument, "threshold must be finite");
    }
    std::vector<NodeScore> out;
    for (const auto& score : scores) {
        if (score.z >= threshold) out.push_back(score);
    }
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
}

std::vector<Alert> attach_users(std::span<const NodeScore> flagged,
                                std::span<const TransactionEdge> window_edges,
                                SignalIndex signal, std::int64_t day) {
    std::unordered_map<NodeId, std::size_t> slot;
    std::vector<Alert> alerts;
    alerts.reserve(flagged.size());
    for (const auto& score : flagged) {
        slot.emplace(score.node, alerts.size());
        alerts.push_back({day, signal, score.node, score.z, score.hits, score.transactions, {}});
    }
    if (!alerts.empty()) {
        for (const auto& edge : window_edges) {
            if (!edge.hit(signal)) continue;
            auto it = slot.find(edge.node);
            if (it != slot.end()) alerts[it->second].suspicious_users.push_back(edge.user);
        }
    }
    for (auto& alert : alerts) {
        auto& users = alert.suspicious_users;
        std::sort(users.begin(), users.end());
        users.erase(std::unique(users.begin(), users.end()), users.end());
    }
    return alerts;
}

std::vector<UserId> flagged_users(std::span<const Alert> alerts) {
    std::vector<UserId> users;
    for (const auto& alert : alerts) {
        users.insert(users.end(), alert.suspicious_users.begin(), alert.suspicious_users.end());
    }
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());
    return users;
}

const ActivationEntry* ActivationReport::find(SignalIndex signal) const {
    for (const auto& entry : entries) {
        if (entry.signal == signal) return &entry;
    }
    return nullptr;
}

ActivationReport make_activation_report(std::span<const SignalIndex> signals,
                                        std::span<const std::optional<double>> max_z,
                                        double threshold) {
    if (signals.size() != max_z.size()) {
        throw Error(ErrorCode::invalid_argument, "signal and max-z lists differ in length");
    }
    ActivationReport report{threshold, {}};
    for (std::size_t i = 0; i < signals.size(); ++i) {
        const bool active = max_z[i].has_value() && *max_z[i] >= threshold;
        report.entries.push_back({signals[i], max_z[i], active});
    }
    return report;
}

Incident compose_signals(std::span<const SignalOutcome> outcomes, double threshold) {
    Incident incident;
    std::vector<SignalIndex> signals;
    std::vector<std::optional<double>> max_z;
    for (const auto& outcome : outcomes) {
        signals.push_back(outcome.signal);
        max_z.push_back(outcome.max_z);
        incident.alerts.insert(incident.alerts.end(), outcome.alerts.begin(),
                               outcome.alerts.end());
    }
    incident.users = flagged_users(incident.alerts);
    incident.activation = make_activation_report(signals, max_z, threshold);
    return incident;
}

std::string serialize_alert(const Alert& alert, const SignalRegistry& registry) {
    nlohmann::ordered_json j;
    j["day"] = alert.day;
    j["signal"] = registry.id(alert.signal);
    j["node"] = alert.node.str();
    j["z"] = alert.z;
    j["s"] = alert.hits;
    j["t"] = alert.transactions;
    j["user_count"] = alert.suspicious_users.size();
    auto users = nlohmann::ordered_json::array();
    for (const auto& user : alert.suspicious_users) users.push_back(user.str());
    j["users"] = std::move(users);
    return j.dump();
}

}  // namespace sigamp
