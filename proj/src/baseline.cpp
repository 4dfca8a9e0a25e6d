#include "msek/baseline.hpp"

#include <algorithm>

namespace msek {

AdaptationDecision reactive_decide(const ContextSnapshot& c, const ReactiveThresholds& t)
{
    constexpr double step = 0.1;
    constexpr double eps = 1e-9;
    AdaptationDecision d;
    if (c.avg_response_time > t.rt_hi) {
        if (c.active_servers < c.max_servers)
            d = AdaptationDecision::add_server();
        else
            d = AdaptationDecision::set_dimmer(std::max(0.0, c.dimmer - step));
    } else if (c.avg_response_time < t.rt_lo) {
        if (c.dimmer < 1.0 - eps)
            d = AdaptationDecision::set_dimmer(std::min(1.0, c.dimmer + step));
        else if (c.utilization < t.util_lo && c.active_servers > 1)
            d = AdaptationDecision::remove_server();
        else
            d = AdaptationDecision::do_nothing();
    } else {
        d = AdaptationDecision::do_nothing();
    }
    d.with_raw_text(encode_decision(d));
    return d;
}

} // namespace msek
