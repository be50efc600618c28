#include "sigamp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "sigamp/errors.hpp"

namespace sigamp {

namespace rng {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::int64_t day) noexcept {
    std::uint64_t state = seed;
    std::uint64_t key = splitmix64(state);
    state = key ^ stream;
    key = splitmix64(state);
    state = key ^ static_cast<std::uint64_t>(day);
    return std::mt19937_64(splitmix64(state));
}

double uniform01(std::mt19937_64& gen) noexcept {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

__extension__ using u128 = unsigned __int128;

std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<u128>(gen()) * n) >> 64);
}

bool bernoulli(std::mt19937_64& gen, double p) noexcept { return uniform01(gen) < p; }

std::uint64_t rate_count(std::mt19937_64& gen, double rate) noexcept {
    const double whole = std::floor(rate);
    const double frac = rate - whole;
    auto count = static_cast<std::uint64_t>(whole);
    if (frac > 0.0 && bernoulli(gen, frac)) ++count;
    return count;
}

}  // namespace rng

namespace {

enum Stream : std::uint64_t {
    kBackground = 1,
    kSybil = 2,
    kTraits = 3,
    kCashout = 4,
    kCamouflage = 5,
};

bool is_rate(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }
bool is_volume(double x) { return std::isfinite(x) && x >= 0.0; }

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::infeasible_config, what);
}

std::string node_name(std::uint64_t rank) { return fmt::format("n{:06d}", rank); }
std::string user_name(std::uint64_t i) { return fmt::format("u{:07d}", i); }
std::string sybil_name(std::uint64_t i) { return fmt::format("s{:06d}", i); }
std::string cashout_name(std::uint64_t i) { return fmt::format("c{:05d}", i); }

/// Popularity sampler over background node ranks.
class NodePicker {
public:
    explicit NodePicker(const ScenarioConfig& config) : n_(config.n_nodes) {
        if (config.popularity == Popularity::zipf) {
            cdf_.reserve(n_);
            double total = 0.0;
            for (std::uint64_t r = 0; r < n_; ++r) {
                total += 1.0 / std::pow(static_cast<double>(r + 1), config.zipf_exponent);
                cdf_.push_back(total);
            }
        }
    }

    std::uint64_t pick(std::mt19937_64& gen) const {
        if (cdf_.empty()) return rng::bounded(gen, n_);
        const double u = rng::uniform01(gen) * cdf_.back();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return std::min<std::uint64_t>(static_cast<std::uint64_t>(it - cdf_.begin()), n_ - 1);
    }

private:
    std::uint64_t n_;
    std::vector<double> cdf_;
};

/// E[(1-p)^N] for N = floor(rate) + Bernoulli(frac(rate)).
double miss_probability_one_day(double rate, double p) {
    const double whole = std::floor(rate);
    const double frac = rate - whole;
    const double base = std::pow(1.0 - p, whole);
    return base * ((1.0 - frac) + frac * (1.0 - p));
}

}  // namespace

void ScenarioConfig::validate() const {
    require(days >= 1, "days must be >= 1");
    require(n_nodes >= 1, "n_nodes must be >= 1");
    require(is_volume(background_txn_per_user_per_day), "background rate must be >= 0");
    require(std::isfinite(zipf_exponent) && zipf_exponent >= 0.0, "zipf exponent must be >= 0");
    require(!signals.empty(), "at least one signal is required");
    require(signals.size() <= kMaxSignals, "too many signals");
    std::set<std::string> seen;
    for (const auto& s : signals) {
        require(!s.id.empty(), "signal id must be non-empty");
        require(seen.insert(s.id).second, "duplicate signal id: " + s.id);
        require(is_rate(s.background_rate), s.id + ": background_rate outside [0,1]");
        require(is_rate(s.sybil_rate), s.id + ": sybil_rate outside [0,1]");
        require(is_rate(s.sybil_carrier_fraction), s.id + ": sybil_carrier_fraction outside [0,1]");
    }
    if (attack.enabled()) {
        require(attack.k_cashout >= 1, "attack needs at least one cash-out node");
        require(attack.k_cashout <= n_nodes, "k_cashout exceeds n_nodes");
        if (attack.cashout_source == CashoutSource::existing_tail) {
            require(attack.k_cashout <= n_nodes - n_nodes / 2,
                    "k_cashout exceeds the less popular half of the nodes");
        }
        require(attack.start_day >= 0 && attack.start_day <= attack.end_day &&
                    attack.end_day < days,
                "attack window must satisfy 0 <= start <= end < days");
        require(is_volume(attack.txn_per_sybil_per_day), "sybil rate must be >= 0");
        require(is_volume(attack.camouflage_txn_per_sybil_per_day), "camouflage rate must be >= 0");
        require(is_rate(attack.cashout_mix), "cashout_mix outside [0,1]");
    }
}

SignalRegistry ScenarioConfig::registry() const {
    SignalRegistry registry;
    for (const auto& s : signals) registry.register_signal(s.id);
    return registry;
}

bool GroundTruth::is_sybil(const UserId& user) const {
    return std::binary_search(sybil_users.begin(), sybil_users.end(), user);
}

bool GroundTruth::is_cashout(const NodeId& node) const {
    return std::binary_search(cashout_nodes.begin(), cashout_nodes.end(), node);
}

std::uint64_t GroundTruth::carrier_count(SignalIndex signal) const {
    std::uint64_t n = 0;
    for (const auto& [user, mask] : carriers) n += (mask >> signal) & 1U;
    return n;
}

Scenario generate(const ScenarioConfig& config) {
    config.validate();
    Scenario out;
    out.registry = config.registry();
    out.truth.signals = out.registry.ids();
    const std::size_t n_signals = config.signals.size();
    const NodePicker picker(config);
    const auto& attack = config.attack;

    std::vector<NodeId> background_nodes;
    background_nodes.reserve(config.n_nodes);
    for (std::uint64_t r = 0; r < config.n_nodes; ++r) background_nodes.emplace_back(node_name(r));
    std::vector<UserId> users;
    users.reserve(config.n_users);
    for (std::uint64_t i = 0; i < config.n_users; ++i) users.emplace_back(user_name(i));

    std::vector<UserId> sybils;
    std::vector<NodeId> cashout;
    std::vector<SignalMask> eligible;
    if (attack.enabled()) {
        for (std::uint64_t i = 0; i < attack.n_sybil; ++i) sybils.emplace_back(sybil_name(i));
        auto traits = rng::substream(config.seed, kTraits, 0);
        eligible.resize(sybils.size(), 0);
        for (auto& mask : eligible) {
            for (std::size_t k = 0; k < n_signals; ++k) {
                if (rng::bernoulli(traits, config.signals[k].sybil_carrier_fraction)) {
                    mask |= SignalMask{1} << k;
                }
            }
        }
        if (attack.cashout_source == CashoutSource::planted_new) {
            for (std::uint64_t i = 0; i < attack.k_cashout; ++i) cashout.emplace_back(cashout_name(i));
        } else {
            // Partial Fisher-Yates over the less popular half.
            const std::uint64_t lo = config.n_nodes / 2;
            std::vector<std::uint64_t> pool(config.n_nodes - lo);
            for (std::uint64_t i = 0; i < pool.size(); ++i) pool[i] = lo + i;
            auto gen = rng::substream(config.seed, kCashout, 0);
            for (std::uint64_t i = 0; i < attack.k_cashout; ++i) {
                const auto j = i + rng::bounded(gen, pool.size() - i);
                std::swap(pool[i], pool[j]);
                cashout.push_back(background_nodes[pool[i]]);
            }
        }
    }

    auto draw_hits = [&](std::mt19937_64& gen, bool sybil, SignalMask eligible_mask) {
        SignalMask hits = 0;
        for (std::size_t k = 0; k < n_signals; ++k) {
            const auto& s = config.signals[k];
            const bool hit = sybil ? (((eligible_mask >> k) & 1U) != 0 &&
                                      rng::bernoulli(gen, s.sybil_rate))
                                   : rng::bernoulli(gen, s.background_rate);
            if (hit) hits |= SignalMask{1} << k;
        }
        return hits;
    };

    for (std::int64_t day = 0; day < config.days; ++day) {
        auto bg = rng::substream(config.seed, kBackground, day);
        for (const auto& user : users) {
            const auto count = rng::rate_count(bg, config.background_txn_per_user_per_day);
            for (std::uint64_t i = 0; i < count; ++i) {
                const auto& node = background_nodes[picker.pick(bg)];
                out.edges.push_back({user, node, day, draw_hits(bg, false, 0)});
            }
        }
        if (!attack.enabled()) continue;

        if (attack.camouflage_txn_per_sybil_per_day > 0.0) {
            auto cam = rng::substream(config.seed, kCamouflage, day);
            for (const auto& sybil : sybils) {
                const auto count = rng::rate_count(cam, attack.camouflage_txn_per_sybil_per_day);
                for (std::uint64_t i = 0; i < count; ++i) {
                    const auto& node = background_nodes[picker.pick(cam)];
                    out.edges.push_back({sybil, node, day, draw_hits(cam, false, 0)});
                }
            }
        }
        if (day < attack.start_day || day > attack.end_day) continue;
        auto syb = rng::substream(config.seed, kSybil, day);
        for (std::size_t s = 0; s < sybils.size(); ++s) {
            const auto count = rng::rate_count(syb, attack.txn_per_sybil_per_day);
            for (std::uint64_t i = 0; i < count; ++i) {
                const bool to_cashout = rng::bernoulli(syb, attack.cashout_mix);
                const NodeId& node = to_cashout ? cashout[rng::bounded(syb, cashout.size())]
                                                : background_nodes[picker.pick(syb)];
                out.edges.push_back({sybils[s], node, day, draw_hits(syb, true, eligible[s])});
            }
        }
    }

    auto& truth = out.truth;
    truth.sybil_users = sybils;
    std::sort(truth.sybil_users.begin(), truth.sybil_users.end());
    truth.cashout_nodes = cashout;
    std::sort(truth.cashout_nodes.begin(), truth.cashout_nodes.end());
    if (attack.enabled()) {
        truth.attack_window = std::make_pair(attack.start_day, attack.end_day);
        for (const auto& sybil : sybils) truth.carriers.emplace(sybil, 0);
        for (const auto& edge : out.edges) {
            if (edge.hits == 0) continue;
            auto it = truth.carriers.find(edge.user);
            if (it != truth.carriers.end()) it->second |= edge.hits;
        }
    }
    return out;
}

double expected_raw_precision(const ScenarioConfig& config) {
    config.validate();
    const auto& s = config.signals.front();
    const auto& attack = config.attack;
    if (!attack.enabled()) return 0.0;
    const double days = static_cast<double>(config.days);
    const double attack_days = static_cast<double>(attack.end_day - attack.start_day + 1);

    const double bg_carrier =
        1.0 - std::pow(miss_probability_one_day(config.background_txn_per_user_per_day,
                                                s.background_rate),
                       days);
    const double attack_miss =
        std::pow(miss_probability_one_day(attack.txn_per_sybil_per_day, s.sybil_rate), attack_days);
    const double camouflage_miss = std::pow(
        miss_probability_one_day(attack.camouflage_txn_per_sybil_per_day, s.background_rate), days);
    const double eligible_carrier = 1.0 - attack_miss * camouflage_miss;
    const double ineligible_carrier = 1.0 - camouflage_miss;
    const double sybil_carrier = s.sybil_carrier_fraction * eligible_carrier +
                                 (1.0 - s.sybil_carrier_fraction) * ineligible_carrier;

    const double sybil_carriers = static_cast<double>(attack.n_sybil) * sybil_carrier;
    const double bg_carriers = static_cast<double>(config.n_users) * bg_carrier;
    if (sybil_carriers + bg_carriers <= 0.0) return 0.0;
    return sybil_carriers / (sybil_carriers + bg_carriers);
}

ScenarioConfig case1_template() {
    ScenarioConfig c;
    c.seed = 20251;
    c.days = 14;
    c.n_users = 45000;
    c.n_nodes = 5000;
    c.background_txn_per_user_per_day = 0.9;
    c.popularity = Popularity::zipf;
    c.zipf_exponent = 1.0;
    c.signals = {
        {"use_promo", 0.03, 0.9, 1.0},
        {"device_spoofing", 0.01, 0.9, 0.25},
    };
    c.attack.n_sybil = 3000;
    c.attack.k_cashout = 60;
    c.attack.start_day = 4;
    c.attack.end_day = 11;
    c.attack.txn_per_sybil_per_day = 1.0;
    c.attack.cashout_mix = 1.0;
    c.attack.cashout_source = CashoutSource::existing_tail;
    return c;
}

ScenarioConfig calibrate_case1(const ScenarioConfig& tmpl, double target) {
    require(std::isfinite(target) && target > 0.0 && target < 1.0, "target precision outside (0,1)");
    ScenarioConfig config = tmpl;
    config.validate();
    require(config.attack.enabled(), "calibration needs an attack");
    auto precision_at = [&](double p) {
        config.signals.front().background_rate = p;
        return expected_raw_precision(config);
    };
    // Raw precision falls as the background rate rises.
    double lo = 0.0;
    double hi = 1.0;
    require(precision_at(hi) <= target && precision_at(1e-12) >= target,
            "target raw precision unreachable for this template");
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (precision_at(mid) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    config.signals.front().background_rate = 0.5 * (lo + hi);
    return config;
}

ScenarioConfig preset(std::string_view name) {
    if (name == "case1-desk") return calibrate_case1(case1_template(), 0.16);
    if (name == "case2-desk") {
        ScenarioConfig c;
        c.seed = 20252;
        c.days = 30;
        c.n_users = 20000;
        c.n_nodes = 2000;
        c.background_txn_per_user_per_day = 0.5;
        c.signals = {
            {"device_spoofing", 0.01, 0.9, 0.56},
            {"payment_failure", 0.03, 0.6, 1.0},
            {"foreign_ip", 0.05, 0.05, 1.0},
        };
        c.attack.n_sybil = 300;
        c.attack.k_cashout = 7;
        c.attack.start_day = 10;
        c.attack.end_day = 20;
        c.attack.txn_per_sybil_per_day = 1.5;
        c.attack.cashout_source = CashoutSource::existing_tail;
        return c;
    }
    if (name == "calm") {
        ScenarioConfig c;
        c.seed = 20250;
        c.days = 30;
        c.n_users = 10000;
        c.n_nodes = 1000;
        c.background_txn_per_user_per_day = 0.4;
        c.signals = {
            {"use_promo", 0.05, 0.0, 0.0},
            {"device_spoofing", 0.01, 0.0, 0.0},
        };
        return c;
    }
    throw Error(ErrorCode::invalid_argument, "unknown preset: " + std::string(name));
}

std::vector<std::string> preset_names() { return {"case1-desk", "case2-desk", "calm"}; }

}  // namespace sigamp
