#include "msek/trace.hpp"

#include "msek/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace msek {

std::size_t ArrivalTrace::segment_index(double t) const
{
    auto it = std::upper_bound(segments.begin(), segments.end(), t,
                               [](double v, const TraceSegment& s) { return v < s.start; });
    if (it == segments.begin())
        return 0;
    return static_cast<std::size_t>(std::distance(segments.begin(), it) - 1);
}

double ArrivalTrace::rate_at(double t) const
{
    if (segments.empty())
        return 0.0;
    return segments[segment_index(t)].rate;
}

void ArrivalTrace::validate() const
{
    if (!segments.empty() && segments.front().start != 0.0)
        throw Error(Errc::InvalidConfig, "trace must start at 0");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (!(segments[i].rate >= 0.0) || !std::isfinite(segments[i].rate))
            throw Error(Errc::InvalidConfig, "trace rate must be finite and >= 0");
        if (i > 0 && !(segments[i].start > segments[i - 1].start))
            throw Error(Errc::InvalidConfig, "trace segment starts must increase");
    }
    if (duration < 0.0)
        throw Error(Errc::InvalidConfig, "trace duration must be >= 0");
}

ArrivalTrace ArrivalTrace::constant(double rate, double duration)
{
    ArrivalTrace t;
    t.id = "constant-" + format_number(rate);
    t.segments = {{0.0, rate}};
    t.duration = duration;
    return t;
}

ArrivalTrace parse_trace_csv(const std::string& text, std::string id)
{
    ArrivalTrace trace;
    trace.id = std::move(id);
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    bool header = false;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty())
            continue;
        if (!header) {
            if (line != "start_s,rate_rps")
                throw Error(Errc::InvalidConfig, "trace header must be start_s,rate_rps");
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        std::optional<double> start, rate;
        if (comma != std::string_view::npos) {
            start = parse_number(line.substr(0, comma));
            rate = parse_number(line.substr(comma + 1));
        }
        if (!start || !rate)
            throw Error(Errc::InvalidConfig, "trace line " + std::to_string(lineno) + " is malformed");
        trace.segments.push_back({*start, *rate});
    }
    if (!header)
        throw Error(Errc::InvalidConfig, "trace is missing its header");
    trace.duration = trace.segments.empty() ? 0.0 : trace.segments.back().start;
    trace.validate();
    return trace;
}

ArrivalTrace load_trace_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::IoError, "cannot read trace " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_trace_csv(ss.str(), path.stem().string());
}

std::string render_trace_csv(const ArrivalTrace& trace)
{
    std::string out = "start_s,rate_rps\n";
    for (const auto& s : trace.segments)
        out += format_number(s.start) + "," + format_number(s.rate) + "\n";
    // The reader takes the last start as the duration; add a closing row that
    // keeps the final rate when the segments end earlier.
    if (trace.segments.empty())
        out += format_number(trace.duration) + ",0\n";
    else if (trace.segments.back().start < trace.duration)
        out += format_number(trace.duration) + "," + format_number(trace.segments.back().rate) + "\n";
    return out;
}

ArrivalTrace make_worldcup_like_trace()
{
    // 60 s steps. Rates are rounded to 0.1 req/s so the CSV stays readable.
    constexpr double total = 105.0 * 60.0;
    constexpr double step = 60.0;
    constexpr double ramp_end = 2700.0;
    constexpr double decay_start = 3300.0;
    // The surge lands on the way down, where the farm can still absorb it
    // once the dimmer drops; at the 45 req/s peak it would exceed even
    // dimmer-0 capacity for most of its length.
    constexpr double spike_start = 4860.0;
    constexpr double spike_len = 8.0 * 60.0;
    constexpr double base_lo = 5.0;
    constexpr double base_hi = 45.0;
    constexpr double decay_floor = 12.0;
    constexpr double spike_factor = 2.5;

    ArrivalTrace trace;
    trace.id = "worldcup-like";
    for (double t = 0.0; t < total; t += step) {
        double rate;
        if (t < ramp_end) {
            // Concave ramp: traffic builds quickly, then levels off.
            rate = base_lo + (base_hi - base_lo) * std::sqrt(t / ramp_end);
        } else if (t < decay_start) {
            rate = base_hi;
        } else {
            const double frac = (t - decay_start) / (total - decay_start);
            rate = base_hi + (decay_floor - base_hi) * frac;
        }
        if (t >= spike_start && t < spike_start + spike_len)
            rate *= spike_factor;
        trace.segments.push_back({t, std::round(rate * 10.0) / 10.0});
    }
    trace.segments.push_back({total, 0.0});
    trace.duration = total;
    return trace;
}

} // namespace msek
