#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace msek {

// Static description of the managed system and of the control loop.
struct SystemConfig {
    int max_servers = 3;
    int initial_servers = 3;
    double initial_dimmer = 0.9;
    double boot_delay = 120.0;        // seconds from add_server to Active
    double service_mandatory = 0.02;  // mean service time without optional content
    double service_optional = 0.03;   // extra mean service time for optional content
    double control_period = 200.0;
    int token_budget = 8192;
    double rt_threshold = 0.1;        // manager's response-time goal
    double http_timeout = 60.0;
    int http_retries = 2;

    double mean_service(double dimmer) const { return service_mandatory + dimmer * service_optional; }

    // Throws Errc::InvalidConfig.
    void validate() const;
};

// Revenue/cost model used to score runs.
struct UtilityParams {
    double revenue_optional = 1.5;
    double revenue_mandatory = 1.0;
    double server_cost = 0.1;         // per server per second
    double rt_threshold = 0.75;
    double penalty_multiplier = 1.0;

    void validate() const;
};

struct ReactiveThresholds {
    double rt_hi = 0.1;
    double rt_lo = 0.05;
    double util_lo = 0.4;
};

struct RunConfig {
    SystemConfig system;
    UtilityParams utility;
    ReactiveThresholds reactive;
};

// Parses "key=value" lines; '#' starts a comment. Keys for the utility and
// reactive blocks are prefixed "utility." and "reactive.".
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical "key=value" rendering of every field, in a fixed order.
std::string render_config(const RunConfig& cfg);

// FNV-1a over render_config, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

} // namespace msek
