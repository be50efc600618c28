#pragma once

// Seeded synthetic transaction generator with planted many-to-few cash-out
// structure and labeled ground truth.
//
// RNG contract (version 1): every (seed, stream, day) triple keys its own
// std::mt19937_64 through SplitMix64. Uniform doubles take the top 53 bits;
// bounded integers use the 128-bit multiply-shift reduction. No standard
// library distribution is used, so output is identical across toolchains.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sigamp/signal_model.hpp"

namespace sigamp {

inline constexpr std::string_view kRngAlgorithm = "mt19937_64/splitmix64-keyed v1";

struct SignalRates {
    std::string id;
    double background_rate = 0.0;  // per-edge hit probability for normal traffic
    double sybil_rate = 0.0;       // per-edge hit probability for an eligible sybil
    /// Fraction of sybils that ever emit this signal (a per-account trait).
    double sybil_carrier_fraction = 1.0;
};

enum class Popularity { zipf, uniform };
enum class CashoutSource { planted_new, existing_tail };

struct AttackConfig {
    std::uint64_t n_sybil = 0;
    std::uint64_t k_cashout = 0;
    std::int64_t start_day = 0;
    std::int64_t end_day = 0;  // inclusive
    double txn_per_sybil_per_day = 1.0;
    /// Share of sybil transactions that go to the planted cash-out nodes.
    double cashout_mix = 1.0;
    /// Background-looking traffic emitted by sybils on every day.
    double camouflage_txn_per_sybil_per_day = 0.0;
    /// planted_new creates fresh nodes; existing_tail picks from the less
    /// popular half of the background nodes.
    CashoutSource cashout_source = CashoutSource::planted_new;

    bool enabled() const noexcept { return n_sybil > 0; }
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::int64_t days = 1;
    std::uint64_t n_users = 0;
    std::uint64_t n_nodes = 1;
    double background_txn_per_user_per_day = 1.0;
    Popularity popularity = Popularity::zipf;
    double zipf_exponent = 1.0;
    std::vector<SignalRates> signals;
    AttackConfig attack;

    /// Throws infeasible_config.
    void validate() const;
    SignalRegistry registry() const;
};

struct GroundTruth {
    std::vector<std::string> signals;
    std::vector<UserId> sybil_users;    // sorted
    std::vector<NodeId> cashout_nodes;  // sorted
    /// Per sybil: bit k set if the account had at least one hit on signal k.
    std::unordered_map<UserId, SignalMask> carriers;
    std::optional<std::pair<std::int64_t, std::int64_t>> attack_window;

    bool is_sybil(const UserId& user) const;
    bool is_cashout(const NodeId& node) const;
    /// Sybils carrying `signal` per the recorded flags.
    std::uint64_t carrier_count(SignalIndex signal) const;
};

struct Scenario {
    SignalRegistry registry;
    std::vector<TransactionEdge> edges;  // ordered by day
    GroundTruth truth;
};

/// Deterministic given the config. Throws infeasible_config.
Scenario generate(const ScenarioConfig& config);

/// Expected share of sybils among all users carrying the first signal,
/// from the configured rates (no sampling).
double expected_raw_precision(const ScenarioConfig& config);

/// Shape of the promo-abuse preset before its background rate is solved.
ScenarioConfig case1_template();

/// Solves the first signal's background rate by bisection so that
/// expected_raw_precision hits `target`. Throws infeasible_config if the
/// target cannot be reached.
ScenarioConfig calibrate_case1(const ScenarioConfig& tmpl = case1_template(),
                               double target = 0.16);

/// "case1-desk", "case2-desk" or "calm". Throws invalid_argument otherwise.
ScenarioConfig preset(std::string_view name);
std::vector<std::string> preset_names();

namespace rng {

std::uint64_t splitmix64(std::uint64_t& state) noexcept;
/// Engine for one keyed substream.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::int64_t day) noexcept;
double uniform01(std::mt19937_64& gen) noexcept;
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t n) noexcept;
bool bernoulli(std::mt19937_64& gen, double p) noexcept;
/// floor(rate) plus one more with probability frac(rate).
std::uint64_t rate_count(std::mt19937_64& gen, double rate) noexcept;

}  // namespace rng

}  // namespace sigamp
