#pragma once

#include "msek/channel.hpp"
#include "msek/config.hpp"
#include "msek/knowledge.hpp"
#include "msek/sim.hpp"
#include "msek/synthesize.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace msek {

struct PeriodRow {
    ContextSnapshot snapshot;
    AdaptationDecision decision;
    std::string verdict;   // outcome for the engine's first proposal
    double utility_inc = 0.0;
    int engine_calls = 0;
};

struct RunMetadata {
    std::uint64_t seed = 0;
    std::string trace_id;
    std::string engine;
    std::string config_hash;
    bool verify = true;
    int periods_planned = 0;
    bool complete = false;
    std::string abort_reason;
};

struct RunTotals {
    double utility = 0.0;
    double mean_rt = 0.0;
    double p95_rt = 0.0;
    double max_rt = 0.0;
    double fraction_rt_ok = 0.0; // periods with avg rt <= 0.1 s
    std::map<std::string, int> decisions;
};

struct RunReport {
    std::vector<PeriodRow> rows;
    RunMetadata meta;

    RunTotals totals() const;
};

// Utility earned over one period of length `period` that ended with `c`.
double utility_increment(const ContextSnapshot& c, double period, const UtilityParams& p);

double utility(std::span<const PeriodRow> rows, double period, const UtilityParams& p);

struct LoopOptions {
    RunConfig config;
    int periods = 1;
    bool verify = true;
    ParseMode parse_mode = ParseMode::Lenient;
    std::uint64_t seed = 0;
    std::string trace_id;
    std::string engine_name;
    std::filesystem::path out_dir;  // empty: nothing is written
    // Logs-collector hook: returns new log lines of the managed system.
    std::function<std::vector<std::string>()> log_source;
};

// Engine re-prompts allowed after a verifier rejection.
inline constexpr int max_verify_retries = 2;

// The MSE-K loop: per period advance the managed system, collect context,
// synthesize a decision, verify it, execute it and record it in Knowledge.
// On a fatal error the partial report is written (when out_dir is set) and
// the error is rethrown.
RunReport run_mse_loop(LineChannel& system, Engine& engine, Knowledge& knowledge, const LoopOptions& opts);

// Same plumbing driven by reactive_decide instead of an engine.
RunReport run_reactive_loop(LineChannel& system, Knowledge& knowledge, const LoopOptions& opts);

// Simulator wired to an in-process protocol channel.
class EmbeddedSystem {
public:
    EmbeddedSystem(const SystemConfig& cfg, ArrivalTrace trace, std::uint64_t seed);
    EmbeddedSystem(const EmbeddedSystem&) = delete;
    EmbeddedSystem& operator=(const EmbeddedSystem&) = delete;

    LineChannel& channel() noexcept { return channel_; }
    sim::Simulator& simulator() noexcept { return sim_; }
    std::function<std::vector<std::string>()> log_source();

private:
    sim::Simulator sim_;
    sim::SimService service_;
    InProcessChannel channel_;
};

int periods_for(const ArrivalTrace& trace, double control_period);

std::string report_csv(const RunReport& report);
std::string summary_json(const RunReport& report);
std::string timeline_svg(const RunReport& report);

// Writes report.csv, summary.json and, for non-empty reports, timeline.svg.
// Throws Errc::IoError.
void emit_outputs(const RunReport& report, const std::filesystem::path& dir);

// Reads a run directory written by emit_outputs.
RunReport load_report(const std::filesystem::path& dir);

struct Comparison {
    RunTotals a;
    RunTotals b;
    double ratio = 1.0; // utility a / utility b
};

// Throws Errc::TraceMismatch unless both runs share trace id and seed.
Comparison compare(const RunReport& a, const RunReport& b);
std::string render_comparison(const Comparison& cmp, std::string_view name_a, std::string_view name_b);

} // namespace msek
