#include "msek/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msek::sim {

std::string_view event_name(EventKind k)
{
    switch (k) {
    case EventKind::Arrival: return "arrival";
    case EventKind::Completion: return "completion";
    case EventKind::BootDone: return "boot_done";
    case EventKind::DrainDone: return "drain_done";
    case EventKind::Dimmer: return "set_dimmer";
    case EventKind::AddServer: return "add_server";
    case EventKind::RemoveServer: return "remove_server";
    case EventKind::Reset: return "reset_window";
    }
    return "?";
}

Metric parse_metric(std::string_view name)
{
    if (name == "dimmer") return Metric::Dimmer;
    if (name == "active_servers") return Metric::ActiveServers;
    if (name == "max_servers") return Metric::MaxServers;
    if (name == "utilization") return Metric::Utilization;
    if (name == "basic_rt") return Metric::BasicRt;
    if (name == "arrival_rate") return Metric::ArrivalRate;
    if (name == "time") return Metric::Time;
    throw Error(Errc::UnknownMetric, "no metric named '" + std::string(name) + "'");
}

Simulator::Simulator(SystemConfig cfg, ArrivalTrace trace, std::uint64_t seed, SimOptions opts)
    : cfg_(cfg), trace_(std::move(trace)), seed_(seed), opts_(opts), rng_(seed)
{
    cfg_.validate();
    trace_.validate();
    dimmer_ = cfg_.initial_dimmer;
    for (int i = 0; i < cfg_.initial_servers; ++i) {
        Server s;
        s.id = next_server_id_++;
        servers_.push_back(s);
    }
    stats_.min_slack = std::numeric_limits<double>::infinity();
    schedule_next_arrival();
}

int Simulator::count(ServerState st) const
{
    return static_cast<int>(std::count_if(servers_.begin(), servers_.end(),
                                          [st](const Server& s) { return s.state == st; }));
}

std::uint64_t Simulator::in_service() const
{
    return static_cast<std::uint64_t>(std::count_if(servers_.begin(), servers_.end(),
                                                    [](const Server& s) { return s.current.has_value(); }));
}

void Simulator::log(EventKind k, std::uint64_t subject, bool per_request)
{
    if (per_request && !opts_.record_requests)
        return;
    events_.push_back({clock_, k, subject});
}

std::vector<Event> Simulator::drain_events()
{
    std::vector<Event> out;
    for (std::size_t i = drained_upto_; i < events_.size(); ++i) {
        switch (events_[i].kind) {
        case EventKind::Arrival:
        case EventKind::Completion:
            break;
        default:
            out.push_back(events_[i]);
        }
    }
    drained_upto_ = events_.size();
    return out;
}

void Simulator::schedule_next_arrival()
{
    next_arrival_.reset();
    if (trace_.segments.empty())
        return;
    double t = clock_;
    for (;;) {
        const auto idx = trace_.segment_index(t);
        const double rate = trace_.segments[idx].rate;
        const double seg_end = idx + 1 < trace_.segments.size() ? trace_.segments[idx + 1].start
                                                               : std::numeric_limits<double>::infinity();
        if (rate > 0.0) {
            const double gap = std::exponential_distribution<double>(rate)(rng_);
            if (t + gap < seg_end) {
                next_arrival_ = t + gap;
                return;
            }
        }
        if (!std::isfinite(seg_end))
            return;
        // Exponential gaps are memoryless, so redraw from the boundary.
        t = seg_end;
    }
}

void Simulator::advance_clock(double t)
{
    const auto n = static_cast<double>(queue_.size() + in_service());
    stats_.area_in_system += n * (t - clock_);
    clock_ = t;
}

void Simulator::step_until(double t_end)
{
    if (t_end < clock_)
        t_end = clock_;
    for (;;) {
        // Ties resolve as completion, then boot, then arrival; servers by index.
        double best = std::numeric_limits<double>::infinity();
        Next kind = Next::None;
        std::size_t which = 0;
        for (std::size_t i = 0; i < servers_.size(); ++i) {
            const auto& s = servers_[i];
            if (s.current && s.busy_until < best) {
                best = s.busy_until;
                kind = Next::Completion;
                which = i;
            }
        }
        for (std::size_t i = 0; i < servers_.size(); ++i) {
            const auto& s = servers_[i];
            if (s.state == ServerState::Booting && s.ready_at < best) {
                best = s.ready_at;
                kind = Next::Boot;
                which = i;
            }
        }
        if (next_arrival_ && *next_arrival_ < best) {
            best = *next_arrival_;
            kind = Next::Arrival;
        }
        if (kind == Next::None || best > t_end) {
            advance_clock(t_end);
            return;
        }
        advance_clock(best);
        switch (kind) {
        case Next::Arrival: on_arrival(); break;
        case Next::Completion: on_completion(which); break;
        case Next::Boot: on_boot(which); break;
        case Next::None: break;
        }
    }
}

void Simulator::start_service(Server& s, Request r)
{
    s.busy_until = clock_ + r.service_time;
    s.busy_since = clock_;
    s.current = r;
}

void Simulator::pull_from_queue(Server& s)
{
    if (s.state != ServerState::Active || s.current || queue_.empty())
        return;
    Request r = queue_.front();
    queue_.pop_front();
    start_service(s, r);
}

void Simulator::on_arrival()
{
    Request r;
    r.id = next_request_id_++;
    r.arrival_time = clock_;
    r.optional_content = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < dimmer_;
    const double mean = r.optional_content ? cfg_.service_mandatory + cfg_.service_optional
                                           : cfg_.service_mandatory;
    r.service_time = std::exponential_distribution<double>(1.0 / mean)(rng_);
    ++stats_.arrivals;
    ++window_.arrivals;
    log(EventKind::Arrival, r.id, true);

    auto idle = std::find_if(servers_.begin(), servers_.end(), [](const Server& s) {
        return s.state == ServerState::Active && !s.current;
    });
    if (idle != servers_.end())
        start_service(*idle, r);
    else
        queue_.push_back(r);
    schedule_next_arrival();
}

void Simulator::on_completion(std::size_t idx)
{
    Server& s = servers_[idx];
    const Request r = *s.current;
    s.current.reset();
    s.window_busy += clock_ - s.busy_since;

    const double rt = clock_ - r.arrival_time;
    ++stats_.completed;
    stats_.sum_response_time += rt;
    stats_.sum_service_time += r.service_time;
    stats_.min_slack = std::min(stats_.min_slack, rt - r.service_time);
    ++window_.completed;
    window_.sum_response_time += rt;
    if (r.optional_content) {
        ++stats_.completed_optional;
        ++window_.completed_optional;
    }
    log(EventKind::Completion, r.id, true);

    if (s.state == ServerState::Draining) {
        log(EventKind::DrainDone, s.id);
        servers_.erase(servers_.begin() + static_cast<std::ptrdiff_t>(idx));
        return;
    }
    pull_from_queue(s);
}

void Simulator::on_boot(std::size_t idx)
{
    Server& s = servers_[idx];
    s.state = ServerState::Active;
    s.window_busy = 0.0;
    log(EventKind::BootDone, s.id);
    pull_from_queue(s);
}

void Simulator::set_dimmer(double v)
{
    if (!(v >= 0.0 && v <= 1.0))
        throw Error(Errc::BadDimmer, "dimmer " + format_number(v) + " outside [0,1]");
    dimmer_ = v;
    log(EventKind::Dimmer, 0);
}

void Simulator::add_server()
{
    if (count(ServerState::Active) + count(ServerState::Booting) >= cfg_.max_servers)
        throw Error(Errc::PoolFull, "server pool is at max_servers");
    Server s;
    s.id = next_server_id_++;
    s.state = ServerState::Booting;
    s.ready_at = clock_ + cfg_.boot_delay;
    servers_.push_back(s);
    log(EventKind::AddServer, s.id);
}

void Simulator::remove_server()
{
    // A pending boot is cancelled before any Active server is drained.
    for (auto it = servers_.rbegin(); it != servers_.rend(); ++it) {
        if (it->state == ServerState::Booting) {
            log(EventKind::RemoveServer, it->id);
            servers_.erase(std::next(it).base());
            return;
        }
    }
    if (count(ServerState::Active) <= 1)
        throw Error(Errc::LastServer, "cannot remove the last active server");

    // Prefer an idle server so it leaves at once; otherwise drain the newest.
    auto pick = servers_.rend();
    for (auto it = servers_.rbegin(); it != servers_.rend(); ++it) {
        if (it->state != ServerState::Active)
            continue;
        if (pick == servers_.rend())
            pick = it;
        if (!it->current) {
            pick = it;
            break;
        }
    }
    pick->state = ServerState::Draining;
    log(EventKind::RemoveServer, pick->id);
    if (!pick->current) {
        log(EventKind::DrainDone, pick->id);
        servers_.erase(std::next(pick).base());
    }
}

void Simulator::apply_effector(const AdaptationDecision& d)
{
    switch (d.action()) {
    case Action::SetDimmer:
        if (!d.argument())
            throw Error(Errc::BadDimmer, "set dimmer without a value");
        set_dimmer(*d.argument());
        break;
    case Action::AddServer: add_server(); break;
    case Action::RemoveServer: remove_server(); break;
    case Action::DoNothing: break;
    }
}

double Simulator::read_probe(Metric m) const
{
    const double length = clock_ - window_.start;
    switch (m) {
    case Metric::Dimmer: return dimmer_;
    case Metric::ActiveServers:
        return static_cast<double>(count(ServerState::Active) + count(ServerState::Booting));
    case Metric::MaxServers: return static_cast<double>(cfg_.max_servers);
    case Metric::Time: return clock_;
    case Metric::BasicRt:
        return window_.completed == 0 ? 0.0
                                      : window_.sum_response_time / static_cast<double>(window_.completed);
    case Metric::ArrivalRate:
        return length > 0.0 ? static_cast<double>(window_.arrivals) / length : 0.0;
    case Metric::Utilization: {
        if (length <= 0.0)
            return 0.0;
        double sum = 0.0;
        int active = 0;
        for (const auto& s : servers_) {
            if (s.state != ServerState::Active)
                continue;
            double busy = s.window_busy;
            if (s.current)
                busy += clock_ - s.busy_since;
            sum += busy / length;
            ++active;
        }
        return active == 0 ? 0.0 : std::clamp(sum / active, 0.0, 1.0);
    }
    }
    return 0.0;
}

void Simulator::reset_window()
{
    window_ = WindowStats{};
    window_.start = clock_;
    for (auto& s : servers_) {
        s.window_busy = 0.0;
        if (s.current)
            s.busy_since = clock_;
    }
    log(EventKind::Reset, 0);
}

namespace {

std::vector<std::string_view> tokens_of(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
            ++i;
        const auto b = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t')
            ++i;
        if (i > b)
            out.push_back(s.substr(b, i - b));
    }
    return out;
}

std::string error_reply(const Error& e)
{
    switch (e.code()) {
    case Errc::PoolFull: return "error: pool full";
    case Errc::LastServer: return "error: last server";
    case Errc::BadDimmer: return "error: bad dimmer";
    default: return "error: " + std::string(to_string(e.code()));
    }
}

} // namespace

std::string SimService::handle(std::string_view line)
{
    const auto tok = tokens_of(trim(line));
    if (tok.empty())
        return "error: unknown command";
    const auto cmd = tok[0];

    if (cmd.starts_with("get_") && tok.size() == 1) {
        auto name = cmd.substr(4);
        try {
            return format_number(sim_.read_probe(parse_metric(name)));
        } catch (const Error&) {
            return "error: unknown command";
        }
    }
    try {
        if (cmd == "set_dimmer" && tok.size() == 2) {
            const auto v = parse_number(tok[1]);
            if (!v)
                return "error: bad argument";
            sim_.set_dimmer(*v);
            return "OK";
        }
        if (cmd == "add_server" && tok.size() == 1) {
            sim_.add_server();
            return "OK";
        }
        if (cmd == "remove_server" && tok.size() == 1) {
            sim_.remove_server();
            return "OK";
        }
        if (cmd == "reset_window" && tok.size() == 1) {
            sim_.reset_window();
            return "OK";
        }
        if (cmd == "advance" && tok.size() == 2) {
            const auto v = parse_number(tok[1]);
            if (!v || !(*v >= 0.0) || !std::isfinite(*v))
                return "error: bad argument";
            sim_.step_until(sim_.clock() + *v);
            return "OK";
        }
    } catch (const Error& e) {
        return error_reply(e);
    }
    if (cmd == "set_dimmer" || cmd == "advance" || cmd == "add_server" || cmd == "remove_server" ||
        cmd == "reset_window")
        return "error: bad argument";
    return "error: unknown command";
}

} // namespace msek::sim
