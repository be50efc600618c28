#include "sigamp/run_config.hpp"

#include <fstream>
#include <set>

#include "sigamp/errors.hpp"

namespace sigamp {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw Error(ErrorCode::invalid_argument, where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw Error(ErrorCode::invalid_argument, "unknown key in " + where + ": " + key);
        }
    }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename T>
void read_if(const json& j, const char* key, std::optional<T>& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

const char* popularity_name(Popularity p) { return p == Popularity::zipf ? "zipf" : "uniform"; }

const char* source_name(CashoutSource s) {
    return s == CashoutSource::planted_new ? "planted_new" : "existing_tail";
}

}  // namespace

WindowConfig parse_window(const std::string& mode, std::int64_t days) {
    WindowConfig window;
    if (mode == "cumulative") {
        window.mode = WindowMode::cumulative;
    } else if (mode == "trailing") {
        window.mode = WindowMode::trailing;
    } else {
        throw Error(ErrorCode::invalid_argument, "window mode must be cumulative or trailing");
    }
    window.days = days;
    window.validate();
    return window;
}

ScenarioConfig scenario_from_json(const json& j, ScenarioConfig c) {
    try {
        check_keys(j,
                   {"preset", "seed", "days", "n_users", "n_nodes",
                    "background_txn_per_user_per_day", "popularity", "zipf_exponent", "signals",
                    "attack"},
                   "scenario");
        read_if(j, "seed", c.seed);
        read_if(j, "days", c.days);
        read_if(j, "n_users", c.n_users);
        read_if(j, "n_nodes", c.n_nodes);
        read_if(j, "background_txn_per_user_per_day", c.background_txn_per_user_per_day);
        read_if(j, "zipf_exponent", c.zipf_exponent);
        if (j.contains("popularity")) {
            const auto p = j["popularity"].get<std::string>();
            if (p == "zipf") {
                c.popularity = Popularity::zipf;
            } else if (p == "uniform") {
                c.popularity = Popularity::uniform;
            } else {
                throw Error(ErrorCode::invalid_argument, "popularity must be zipf or uniform");
            }
        }
        if (j.contains("signals")) {
            c.signals.clear();
            for (const auto& s : j["signals"]) {
                check_keys(s, {"id", "background_rate", "sybil_rate", "sybil_carrier_fraction"},
                           "scenario.signals[]");
                SignalRates rates;
                rates.id = s.at("id").get<std::string>();
                read_if(s, "background_rate", rates.background_rate);
                read_if(s, "sybil_rate", rates.sybil_rate);
                read_if(s, "sybil_carrier_fraction", rates.sybil_carrier_fraction);
                c.signals.push_back(std::move(rates));
            }
        }
        if (j.contains("attack")) {
            const auto& a = j["attack"];
            check_keys(a,
                       {"n_sybil", "k_cashout", "start_day", "end_day", "txn_per_sybil_per_day",
                        "cashout_mix", "camouflage_txn_per_sybil_per_day", "cashout_source"},
                       "scenario.attack");
            read_if(a, "n_sybil", c.attack.n_sybil);
            read_if(a, "k_cashout", c.attack.k_cashout);
            read_if(a, "start_day", c.attack.start_day);
            read_if(a, "end_day", c.attack.end_day);
            read_if(a, "txn_per_sybil_per_day", c.attack.txn_per_sybil_per_day);
            read_if(a, "cashout_mix", c.attack.cashout_mix);
            read_if(a, "camouflage_txn_per_sybil_per_day", c.attack.camouflage_txn_per_sybil_per_day);
            if (a.contains("cashout_source")) {
                const auto s = a["cashout_source"].get<std::string>();
                if (s == "planted_new") {
                    c.attack.cashout_source = CashoutSource::planted_new;
                } else if (s == "existing_tail") {
                    c.attack.cashout_source = CashoutSource::existing_tail;
                } else {
                    throw Error(ErrorCode::invalid_argument,
                                "cashout_source must be planted_new or existing_tail");
                }
            }
        }
        return c;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_argument, std::string("scenario config: ") + e.what());
    }
}

json scenario_to_json(const ScenarioConfig& c) {
    json signals = json::array();
    for (const auto& s : c.signals) {
        signals.push_back({{"id", s.id},
                           {"background_rate", s.background_rate},
                           {"sybil_rate", s.sybil_rate},
                           {"sybil_carrier_fraction", s.sybil_carrier_fraction}});
    }
    return {{"seed", c.seed},
            {"days", c.days},
            {"n_users", c.n_users},
            {"n_nodes", c.n_nodes},
            {"background_txn_per_user_per_day", c.background_txn_per_user_per_day},
            {"popularity", popularity_name(c.popularity)},
            {"zipf_exponent", c.zipf_exponent},
            {"signals", signals},
            {"attack",
             {{"n_sybil", c.attack.n_sybil},
              {"k_cashout", c.attack.k_cashout},
              {"start_day", c.attack.start_day},
              {"end_day", c.attack.end_day},
              {"txn_per_sybil_per_day", c.attack.txn_per_sybil_per_day},
              {"cashout_mix", c.attack.cashout_mix},
              {"camouflage_txn_per_sybil_per_day", c.attack.camouflage_txn_per_sybil_per_day},
              {"cashout_source", source_name(c.attack.cashout_source)}}}};
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    try {
        check_keys(j,
                   {"edges", "truth", "output_dir", "signals", "window", "threshold", "thresholds",
                    "snapshot_day", "top", "preset", "scenario", "seed", "checkpoint_in",
                    "checkpoint_out", "max_edges", "bounds"},
                   "config");
        read_if(j, "edges", c.edges);
        read_if(j, "truth", c.truth);
        read_if(j, "output_dir", c.output_dir);
        read_if(j, "signals", c.signals);
        if (j.contains("window")) {
            const auto& w = j["window"];
            check_keys(w, {"mode", "days"}, "window");
            c.window = parse_window(w.value("mode", std::string("cumulative")),
                                    w.value("days", std::int64_t{1}));
        }
        read_if(j, "threshold", c.threshold);
        read_if(j, "thresholds", c.thresholds);
        read_if(j, "snapshot_day", c.snapshot_day);
        read_if(j, "top", c.top);
        read_if(j, "preset", c.preset);
        if (j.contains("scenario")) {
            c.scenario = j["scenario"];
            check_keys(c.scenario,
                       {"preset", "seed", "days", "n_users", "n_nodes",
                        "background_txn_per_user_per_day", "popularity", "zipf_exponent",
                        "signals", "attack"},
                       "scenario");
            if (c.scenario.contains("preset")) c.preset = c.scenario["preset"].get<std::string>();
        }
        read_if(j, "seed", c.seed);
        read_if(j, "checkpoint_in", c.checkpoint_in);
        read_if(j, "checkpoint_out", c.checkpoint_out);
        read_if(j, "max_edges", c.max_edges);
        if (j.contains("bounds")) {
            const auto& b = j["bounds"];
            check_keys(b, {"min_precision", "min_scr", "min_amplification", "max_calm_flags"},
                       "bounds");
            read_if(b, "min_precision", c.bounds.min_precision);
            read_if(b, "min_scr", c.bounds.min_scr);
            read_if(b, "min_amplification", c.bounds.min_amplification);
            read_if(b, "max_calm_flags", c.bounds.max_calm_flags);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_argument, std::string("config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_argument, std::string("config is not valid JSON: ") + e.what());
    }
    return run_config_from_json(j);
}

ScenarioConfig resolve_scenario(const RunConfig& config) {
    ScenarioConfig scenario = scenario_from_json(config.scenario, preset(config.preset));
    if (config.seed) scenario.seed = *config.seed;
    scenario.validate();
    return scenario;
}

}  // namespace sigamp
