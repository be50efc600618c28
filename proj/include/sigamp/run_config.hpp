#pragma once

// Declarative run configuration shared by the CLI commands. A JSON file
// provides defaults; command-line flags override individual fields.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sigamp/scenario.hpp"
#include "sigamp/stream_engine.hpp"

namespace sigamp {

struct AcceptanceBounds {
    std::optional<double> min_precision;
    std::optional<double> min_scr;
    std::optional<double> min_amplification;
    std::optional<std::uint64_t> max_calm_flags;
};

struct RunConfig {
    std::string edges;
    std::string truth;
    std::string output_dir;
    std::vector<std::string> signals;  // empty: every signal in the edge file
    WindowConfig window;
    double threshold = 40.0;
    std::vector<double> thresholds = {1.0, 5.0, 10.0, 40.0};
    std::optional<std::int64_t> snapshot_day;
    std::size_t top = 20;

    std::string preset = "case1-desk";
    /// Field overrides applied on top of the preset.
    nlohmann::json scenario = nlohmann::json::object();
    std::optional<std::uint64_t> seed;

    std::string checkpoint_in;
    std::string checkpoint_out;
    std::optional<std::uint64_t> max_edges;

    AcceptanceBounds bounds;
};

/// Throws invalid_argument on unknown keys or wrong types.
RunConfig run_config_from_json(const nlohmann::json& j);
/// Throws io if unreadable, invalid_argument if not valid JSON.
RunConfig load_run_config(const std::string& path);

/// Applies `overrides` (same keys as scenario_to_json) to `base`.
ScenarioConfig scenario_from_json(const nlohmann::json& overrides, ScenarioConfig base);
nlohmann::json scenario_to_json(const ScenarioConfig& config);

/// Preset, then scenario overrides, then seed.
ScenarioConfig resolve_scenario(const RunConfig& config);

WindowConfig parse_window(const std::string& mode, std::int64_t days);

}  // namespace sigamp
