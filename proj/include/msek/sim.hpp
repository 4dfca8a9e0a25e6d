#pragma once

#include "msek/config.hpp"
#include "msek/core.hpp"
#include "msek/trace.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace msek::sim {

enum class ServerState { Active, Booting, Draining };

struct Request {
    std::uint64_t id = 0;
    double arrival_time = 0.0;
    double service_time = 0.0;
    bool optional_content = false;
};

struct Server {
    std::uint32_t id = 0;
    ServerState state = ServerState::Active;
    double ready_at = 0.0;              // meaningful while Booting
    std::optional<Request> current;     // request in service
    double busy_until = 0.0;            // completion time of `current`
    double busy_since = 0.0;            // start of the busy interval counted in the window
    double window_busy = 0.0;           // closed busy time inside the window
};

// Window accumulators behind the window-scoped probes.
struct WindowStats {
    double start = 0.0;
    std::uint64_t arrivals = 0;
    std::uint64_t completed = 0;
    std::uint64_t completed_optional = 0;
    double sum_response_time = 0.0;
};

// Run-long counters used by conservation and Little's-law checks.
struct RunStats {
    std::uint64_t arrivals = 0;
    std::uint64_t completed = 0;
    std::uint64_t completed_optional = 0;
    double sum_response_time = 0.0;
    double sum_service_time = 0.0;
    double area_in_system = 0.0;        // integral of number-in-system over time
    double min_slack = 0.0;             // min over completions of (response - service)
};

enum class EventKind { Arrival, Completion, BootDone, DrainDone, Dimmer, AddServer, RemoveServer, Reset };

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::Arrival;
    std::uint64_t subject = 0;          // request id or server id

    bool operator==(const Event&) const = default;
};

std::string_view event_name(EventKind k);

enum class Metric { Dimmer, ActiveServers, MaxServers, Utilization, BasicRt, ArrivalRate, Time };

// Throws Errc::UnknownMetric.
Metric parse_metric(std::string_view name);

struct SimOptions {
    bool record_requests = false;       // log per-request events, not only structural ones
};

// Discrete-event model of an elastic server farm with a brownout dimmer.
// Virtual time advances only through step_until.
class Simulator {
public:
    Simulator(SystemConfig cfg, ArrivalTrace trace, std::uint64_t seed, SimOptions opts = {});

    // Processes every event with timestamp <= t_end in time order.
    void step_until(double t_end);

    // Throws Errc::PoolFull, Errc::LastServer or Errc::BadDimmer and leaves
    // the state untouched on error.
    void apply_effector(const AdaptationDecision& d);
    void set_dimmer(double v);
    void add_server();
    void remove_server();

    double read_probe(Metric m) const;
    void reset_window();

    double clock() const noexcept { return clock_; }
    double dimmer() const noexcept { return dimmer_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<Server>& servers() const noexcept { return servers_; }
    const std::deque<Request>& queue() const noexcept { return queue_; }
    const WindowStats& window() const noexcept { return window_; }
    const RunStats& stats() const noexcept { return stats_; }
    const SystemConfig& config() const noexcept { return cfg_; }
    const ArrivalTrace& trace() const noexcept { return trace_; }
    const std::vector<Event>& events() const noexcept { return events_; }

    int count(ServerState s) const;
    std::uint64_t in_service() const;

    // Moves structural events logged since the last call out of the simulator.
    std::vector<Event> drain_events();

private:
    enum class Next { None, Arrival, Completion, Boot };

    void schedule_next_arrival();
    void advance_clock(double t);
    void on_arrival();
    void on_completion(std::size_t server);
    void on_boot(std::size_t server);
    void start_service(Server& s, Request r);
    void pull_from_queue(Server& s);
    void log(EventKind k, std::uint64_t subject, bool per_request = false);

    SystemConfig cfg_;
    ArrivalTrace trace_;
    std::uint64_t seed_;
    SimOptions opts_;
    std::mt19937_64 rng_;

    double clock_ = 0.0;
    double dimmer_ = 0.0;
    std::vector<Server> servers_;
    std::deque<Request> queue_;
    std::uint32_t next_server_id_ = 0;
    std::uint64_t next_request_id_ = 0;
    std::optional<double> next_arrival_;
    WindowStats window_;
    RunStats stats_;
    std::vector<Event> events_;
    std::size_t drained_upto_ = 0;
};

// Line-protocol front end: one command in, one reply line out (no newline).
class SimService {
public:
    explicit SimService(Simulator& sim) : sim_(sim) {}

    std::string handle(std::string_view line);

private:
    Simulator& sim_;
};

} // namespace msek::sim
