#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace msek {

struct TraceSegment {
    double start = 0.0; // seconds
    double rate = 0.0;  // requests/second

    bool operator==(const TraceSegment&) const = default;
};

// Piecewise-constant arrival rate. Segment i covers [start_i, start_{i+1});
// the last segment extends indefinitely. `duration` bounds an experiment.
struct ArrivalTrace {
    std::string id;
    std::vector<TraceSegment> segments;
    double duration = 0.0;

    double rate_at(double t) const;

    // Index of the segment holding t (segments must be non-empty).
    std::size_t segment_index(double t) const;

    // Throws Errc::InvalidConfig on non-increasing starts or negative rates.
    void validate() const;

    static ArrivalTrace constant(double rate, double duration);
};

// CSV with header "start_s,rate_rps". The last row's start is the trace
// duration; its rate applies beyond it.
ArrivalTrace parse_trace_csv(const std::string& text, std::string id);
ArrivalTrace load_trace_csv(const std::filesystem::path& path);
std::string render_trace_csv(const ArrivalTrace& trace);

// 105-minute ramp, spike and decay workload shaped like a major sporting
// event's web traffic.
ArrivalTrace make_worldcup_like_trace();

} // namespace msek
