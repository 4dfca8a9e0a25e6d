#pragma once

#include "msek/error.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace msek {

// Action catalog. The numeric values are the wire ids.
enum class Action : int {
    SetDimmer = 1,
    AddServer = 2,
    RemoveServer = 3,
    DoNothing = 4,
};

std::string_view action_name(Action a);
std::optional<Action> action_from_name(std::string_view name);

// Monitored state of the managed system over one window.
struct ContextSnapshot {
    double dimmer = 0.0;
    double active_servers = 0.0;
    double max_servers = 1.0;
    double utilization = 0.0;
    double avg_response_time = 0.0;
    double arrival_rate = 0.0;
    double sim_time = 0.0;

    bool operator==(const ContextSnapshot&) const = default;
};

// Renders "Status:" followed by one "- key: value" line per metric.
std::string render_status_block(const ContextSnapshot& c);

// Inverse of render_status_block. Ignores lines before "Status:" and any
// unknown keys; throws Errc::ProtocolError if a metric is missing.
ContextSnapshot parse_status_block(std::string_view text);

class AdaptationDecision {
public:
    AdaptationDecision() = default;

    static AdaptationDecision set_dimmer(double value);
    static AdaptationDecision add_server() { return AdaptationDecision(Action::AddServer); }
    static AdaptationDecision remove_server() { return AdaptationDecision(Action::RemoveServer); }
    static AdaptationDecision do_nothing() { return AdaptationDecision(Action::DoNothing); }

    Action action() const noexcept { return action_; }
    const std::optional<double>& argument() const noexcept { return argument_; }
    const std::string& raw_text() const noexcept { return raw_text_; }

    AdaptationDecision& with_raw_text(std::string raw)
    {
        raw_text_ = std::move(raw);
        return *this;
    }

    // Compares action and argument only; raw_text is provenance.
    bool operator==(const AdaptationDecision& o) const
    {
        return action_ == o.action_ && argument_ == o.argument_;
    }

private:
    explicit AdaptationDecision(Action a) : action_(a) {}

    Action action_ = Action::DoNothing;
    std::optional<double> argument_;
    std::string raw_text_;
};

// Dimmer values are kept on a 0.01 grid.
double quantize_dimmer(double v);

std::string encode_decision(const AdaptationDecision& d);

// Strict decode of a single "<id>[ <arg>]" line. The result's raw_text is
// the input line.
AdaptationDecision decode_decision(std::string_view line);

struct Objective {
    double rt_threshold = 0.1;

    std::string render() const;
};

// Shortest round-trip decimal rendering of a double ("0.8", "3000", "inf").
std::string format_number(double v);

// Same as format_number, but integral values keep a trailing ".0".
std::string format_float(double v);

std::optional<double> parse_number(std::string_view text);

std::string_view trim(std::string_view s);

} // namespace msek
