#include "msek/core.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace msek {

std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::UnknownAction: return "UnknownAction";
    case Errc::MissingArgument: return "MissingArgument";
    case Errc::ArgumentOutOfRange: return "ArgumentOutOfRange";
    case Errc::SpuriousArgument: return "SpuriousArgument";
    case Errc::NoDecisionFound: return "NoDecisionFound";
    case Errc::PoolFull: return "PoolFull";
    case Errc::LastServer: return "LastServer";
    case Errc::BadDimmer: return "BadDimmer";
    case Errc::UnknownMetric: return "UnknownMetric";
    case Errc::ChannelTimeout: return "ChannelTimeout";
    case Errc::ConnectionLost: return "ConnectionLost";
    case Errc::ProbeTimeout: return "ProbeTimeout";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::OutOfOrderSnapshot: return "OutOfOrderSnapshot";
    case Errc::CorruptRecord: return "CorruptRecord";
    case Errc::BudgetTooSmall: return "BudgetTooSmall";
    case Errc::EngineTimeout: return "EngineTimeout";
    case Errc::EngineHttpError: return "EngineHttpError";
    case Errc::ReplayExhausted: return "ReplayExhausted";
    case Errc::EffectorRejected: return "EffectorRejected";
    case Errc::EffectorTimeout: return "EffectorTimeout";
    case Errc::TraceMismatch: return "TraceMismatch";
    case Errc::IoError: return "IoError";
    case Errc::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

std::string_view action_name(Action a)
{
    switch (a) {
    case Action::SetDimmer: return "SetDimmer";
    case Action::AddServer: return "AddServer";
    case Action::RemoveServer: return "RemoveServer";
    case Action::DoNothing: return "DoNothing";
    }
    return "?";
}

std::optional<Action> action_from_name(std::string_view name)
{
    for (Action a : {Action::SetDimmer, Action::AddServer, Action::RemoveServer, Action::DoNothing}) {
        if (action_name(a) == name)
            return a;
    }
    return std::nullopt;
}

std::string_view trim(std::string_view s)
{
    constexpr std::string_view ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (v == 0.0)
        v = 0.0; // drop the sign of -0
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

std::string format_float(double v)
{
    std::string s = format_number(v);
    if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos)
        s += ".0";
    return s;
}

std::optional<double> parse_number(std::string_view text)
{
    text = trim(text);
    if (text.empty())
        return std::nullopt;
    if (text.front() == '+')
        text.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        return std::nullopt;
    return v;
}

namespace {

struct StatusKey {
    std::string_view key;
    double ContextSnapshot::*field;
    bool integral_style;
};

constexpr std::array<StatusKey, 7> status_keys{{
    {"dimmer", &ContextSnapshot::dimmer, false},
    {"active_servers", &ContextSnapshot::active_servers, false},
    {"utilization", &ContextSnapshot::utilization, false},
    {"avg_response_time", &ContextSnapshot::avg_response_time, false},
    {"arrival_rate", &ContextSnapshot::arrival_rate, false},
    {"time", &ContextSnapshot::sim_time, true},
    {"max_servers", &ContextSnapshot::max_servers, false},
}};

std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
            ++i;
        const auto start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t')
            ++i;
        if (i > start)
            out.push_back(s.substr(start, i - start));
    }
    return out;
}

} // namespace

std::string render_status_block(const ContextSnapshot& c)
{
    std::string out = "Status:\n";
    for (const auto& k : status_keys) {
        const double v = c.*(k.field);
        out += "- ";
        out += k.key;
        out += ": ";
        out += k.integral_style ? format_number(v) : format_float(v);
        out += '\n';
    }
    return out;
}

ContextSnapshot parse_status_block(std::string_view text)
{
    ContextSnapshot c;
    std::array<bool, status_keys.size()> seen{};
    bool in_block = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos)
            nl = text.size();
        auto line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        if (line == "Status:") {
            in_block = true;
            continue;
        }
        if (!in_block)
            continue;
        if (line.starts_with("- "))
            line.remove_prefix(2);
        const auto colon = line.find(':');
        if (colon == std::string_view::npos)
            continue;
        const auto key = trim(line.substr(0, colon));
        for (std::size_t i = 0; i < status_keys.size(); ++i) {
            if (status_keys[i].key != key || seen[i])
                continue;
            auto v = parse_number(line.substr(colon + 1));
            if (!v)
                throw Error(Errc::ProtocolError, "non-numeric value for " + std::string(key));
            c.*(status_keys[i].field) = *v;
            seen[i] = true;
        }
    }
    for (std::size_t i = 0; i < status_keys.size(); ++i) {
        if (!seen[i])
            throw Error(Errc::ProtocolError, "status block lacks " + std::string(status_keys[i].key));
    }
    return c;
}

double quantize_dimmer(double v)
{
    return std::round(v * 100.0) / 100.0;
}

AdaptationDecision AdaptationDecision::set_dimmer(double value)
{
    AdaptationDecision d(Action::SetDimmer);
    d.argument_ = quantize_dimmer(value);
    return d;
}

std::string encode_decision(const AdaptationDecision& d)
{
    std::string out = std::to_string(static_cast<int>(d.action()));
    if (d.action() == Action::SetDimmer && d.argument()) {
        out += ' ';
        out += format_number(quantize_dimmer(*d.argument()));
    }
    return out;
}

AdaptationDecision decode_decision(std::string_view line)
{
    const auto tokens = split_ws(trim(line));
    if (tokens.empty())
        throw Error(Errc::UnknownAction, "empty decision");

    int id = 0;
    const auto& head = tokens.front();
    auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), id);
    if (ec != std::errc() || ptr != head.data() + head.size() || id < 1 || id > 4)
        throw Error(Errc::UnknownAction, "action id '" + std::string(head) + "' not in 1..4");

    AdaptationDecision d;
    const auto action = static_cast<Action>(id);
    if (action == Action::SetDimmer) {
        if (tokens.size() < 2)
            throw Error(Errc::MissingArgument, "set dimmer needs a value");
        const auto v = parse_number(tokens[1]);
        if (!v)
            throw Error(Errc::MissingArgument, "dimmer value '" + std::string(tokens[1]) + "' is not a number");
        if (tokens.size() > 2)
            throw Error(Errc::SpuriousArgument, "set dimmer takes one value");
        if (!(*v >= 0.0 && *v <= 1.0))
            throw Error(Errc::ArgumentOutOfRange, "dimmer " + std::string(tokens[1]) + " outside [0,1]");
        d = AdaptationDecision::set_dimmer(*v);
    } else {
        if (tokens.size() > 1)
            throw Error(Errc::SpuriousArgument,
                        "action " + std::to_string(id) + " takes no argument");
        switch (action) {
        case Action::AddServer: d = AdaptationDecision::add_server(); break;
        case Action::RemoveServer: d = AdaptationDecision::remove_server(); break;
        default: d = AdaptationDecision::do_nothing(); break;
        }
    }
    d.with_raw_text(std::string(line));
    return d;
}

std::string Objective::render() const
{
    std::ostringstream os;
    os << "The first priority is to keep the average response time low, at or below "
       << format_number(rt_threshold)
       << " seconds. The second priority is to keep the dimmer as high as possible. "
          "The third priority is to use as few servers as possible. "
          "Never trade a higher priority for a lower one.";
    return os.str();
}

} // namespace msek
