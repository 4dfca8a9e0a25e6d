#pragma once

#include "msek/config.hpp"
#include "msek/core.hpp"

namespace msek {

// Threshold-triggered, memoryless scaling rule used as the comparison point.
AdaptationDecision reactive_decide(const ContextSnapshot& c, const ReactiveThresholds& t);

} // namespace msek
