#pragma once

#include "msek/channel.hpp"
#include "msek/knowledge.hpp"

namespace msek {

// Reads the seven probes in a fixed order, then closes the measurement
// window with reset_window. The snapshot is ingested into `knowledge`.
// Throws Errc::ProbeTimeout or Errc::ProtocolError.
ContextSnapshot collect_context(LineChannel& probes, Knowledge& knowledge);

// Same probe sequence without a Knowledge sink.
ContextSnapshot collect_context(LineChannel& probes);

// Formats simulator structural events as "t=<time> <event> <subject>" lines.
std::vector<std::string> format_event_log(std::span<const sim::Event> events);

} // namespace msek
