#pragma once

// Thresholding, alert construction and multi-signal composition.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sigamp/amplifier.hpp"
#include "sigamp/signal_model.hpp"

namespace sigamp {

struct Alert {
    std::int64_t day = 0;
    SignalIndex signal = 0;
    NodeId node;
    double z = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t transactions = 0;
    /// Sorted, unique. Users with at least one hit-carrying transaction to
    /// the node inside the scoring window.
    std::vector<UserId> suspicious_users;

    friend bool operator==(const Alert&, const Alert&) = default;
};

/// Scores with z >= threshold, in ranking order. Throws invalid_argument on a
/// non-finite threshold.
std::vector<NodeScore> flag_nodes(std::span<const NodeScore> scores, double threshold);

/// One alert per flagged score, same order. `window_edges` must be the edges
/// the scores were computed from.
std::vector<Alert> attach_users(std::span<const NodeScore> flagged,
                                std::span<const TransactionEdge> window_edges,
                                SignalIndex signal, std::int64_t day);

/// Distinct users across alerts, sorted.
std::vector<UserId> flagged_users(std::span<const Alert> alerts);

/// Result of running one signal through a scoring turn.
struct SignalOutcome {
    SignalIndex signal = 0;
    /// Empty when the signal had no usable baseline in the window.
    std::optional<double> max_z;
    std::vector<Alert> alerts;
};

struct ActivationEntry {
    SignalIndex signal = 0;
    std::optional<double> max_z;
    bool active = false;
};

struct ActivationReport {
    double threshold = 0.0;
    std::vector<ActivationEntry> entries;

    const ActivationEntry* find(SignalIndex signal) const;
};

/// active <=> max_z >= threshold; a signal without a baseline is inactive.
ActivationReport make_activation_report(std::span<const SignalIndex> signals,
                                        std::span<const std::optional<double>> max_z,
                                        double threshold);

struct Incident {
    std::vector<UserId> users;  // union over signals, sorted
    std::vector<Alert> alerts;  // every signal's alerts, signal order preserved
    ActivationReport activation;
};

/// Merges independently produced per-signal outputs.
Incident compose_signals(std::span<const SignalOutcome> outcomes, double threshold);

/// One JSON object per alert with stable key order:
/// day, signal, node, z, s, t, user_count, users.
std::string serialize_alert(const Alert& alert, const SignalRegistry& registry);

}  // namespace sigamp
