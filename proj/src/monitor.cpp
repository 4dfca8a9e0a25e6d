#include "msek/monitor.hpp"

namespace msek {

namespace {

std::string ask(LineChannel& ch, std::string_view cmd)
{
    try {
        return ch.request(cmd);
    } catch (const Error& e) {
        if (e.code() == Errc::ChannelTimeout)
            throw Error(Errc::ProbeTimeout, std::string(cmd) + " timed out");
        throw;
    }
}

double read_number(LineChannel& ch, std::string_view cmd)
{
    const auto reply = ask(ch, cmd);
    const auto v = parse_number(reply);
    if (!v)
        throw Error(Errc::ProtocolError, std::string(cmd) + " returned '" + reply + "'");
    return *v;
}

} // namespace

ContextSnapshot collect_context(LineChannel& probes)
{
    ContextSnapshot c;
    c.dimmer = read_number(probes, "get_dimmer");
    c.active_servers = read_number(probes, "get_active_servers");
    c.max_servers = read_number(probes, "get_max_servers");
    c.utilization = read_number(probes, "get_utilization");
    c.avg_response_time = read_number(probes, "get_basic_rt");
    c.arrival_rate = read_number(probes, "get_arrival_rate");
    c.sim_time = read_number(probes, "get_time");
    if (const auto ack = ask(probes, "reset_window"); ack != "OK")
        throw Error(Errc::ProtocolError, "reset_window returned '" + ack + "'");
    return c;
}

ContextSnapshot collect_context(LineChannel& probes, Knowledge& knowledge)
{
    auto c = collect_context(probes);
    knowledge.observe(c);
    return c;
}

std::vector<std::string> format_event_log(std::span<const sim::Event> events)
{
    std::vector<std::string> out;
    out.reserve(events.size());
    for (const auto& e : events)
        out.push_back("t=" + format_number(e.time) + " " + std::string(sim::event_name(e.kind)) + " " +
                      std::to_string(e.subject));
    return out;
}

} // namespace msek
