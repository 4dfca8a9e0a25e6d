#include "msek/execute.hpp"

#include <cmath>
#include <limits>

namespace msek {

double erlang_c_wait_probability(double lambda, int servers, double mean_service)
{
    const double a = lambda * mean_service; // offered load in erlangs
    const double c = static_cast<double>(servers);
    if (a >= c)
        return 1.0;
    if (a <= 0.0)
        return 0.0;
    // Erlang B by recursion, then convert to C.
    double b = 1.0;
    for (int k = 1; k <= servers; ++k)
        b = a * b / (static_cast<double>(k) + a * b);
    return c * b / (c - a * (1.0 - b));
}

double erlang_c_response_time(double lambda, int servers, double mean_service)
{
    const double mu = 1.0 / mean_service;
    const double capacity = static_cast<double>(servers) * mu;
    if (lambda >= capacity)
        return std::numeric_limits<double>::infinity();
    if (lambda <= 0.0)
        return mean_service;
    return erlang_c_wait_probability(lambda, servers, mean_service) / (capacity - lambda) + mean_service;
}

std::string_view verdict_name(VerdictReason r)
{
    switch (r) {
    case VerdictReason::Ok: return "Ok";
    case VerdictReason::LastServer: return "LastServer";
    case VerdictReason::PoolFull: return "PoolFull";
    case VerdictReason::BadDimmer: return "BadDimmer";
    case VerdictReason::PredictedRtViolation: return "PredictedRtViolation";
    case VerdictReason::UnstableQueue: return "UnstableQueue";
    }
    return "?";
}

VerdictReason check_structure(const AdaptationDecision& ad, const ContextSnapshot& c, int booting)
{
    switch (ad.action()) {
    case Action::RemoveServer:
        // A booting server can always be cancelled; otherwise one Active must stay.
        return booting == 0 && c.active_servers <= 1.0 ? VerdictReason::LastServer : VerdictReason::Ok;
    case Action::AddServer:
        return c.active_servers >= c.max_servers ? VerdictReason::PoolFull : VerdictReason::Ok;
    case Action::SetDimmer: {
        const auto& v = ad.argument();
        return v && *v >= 0.0 && *v <= 1.0 ? VerdictReason::Ok : VerdictReason::BadDimmer;
    }
    case Action::DoNothing: return VerdictReason::Ok;
    }
    return VerdictReason::Ok;
}

PredictedState predict(const AdaptationDecision& ad, const ContextSnapshot& c, const SystemConfig& cfg,
                       int booting)
{
    PredictedState s;
    // Servers already booting do not serve yet. The one an AddServer would
    // start is counted: the prediction is for the configuration it leads to.
    s.servers = static_cast<int>(std::lround(c.active_servers)) - booting;
    s.dimmer = c.dimmer;
    switch (ad.action()) {
    case Action::AddServer: ++s.servers; break;
    case Action::RemoveServer:
        if (booting == 0)
            --s.servers;
        break;
    case Action::SetDimmer: s.dimmer = ad.argument().value_or(c.dimmer); break;
    case Action::DoNothing: break;
    }
    s.rt = s.servers < 1 ? std::numeric_limits<double>::infinity()
                         : erlang_c_response_time(c.arrival_rate, s.servers, cfg.mean_service(s.dimmer));
    return s;
}

std::vector<AdaptationDecision> catalog_candidates()
{
    std::vector<AdaptationDecision> out{AdaptationDecision::do_nothing(), AdaptationDecision::add_server(),
                                        AdaptationDecision::remove_server()};
    for (int k = 0; k <= 10; ++k)
        out.push_back(AdaptationDecision::set_dimmer(k / 10.0));
    return out;
}

AdaptationDecision best_alternative(const ContextSnapshot& c, const SystemConfig& cfg, int booting)
{
    std::optional<AdaptationDecision> best;
    PredictedState best_state;
    bool best_ok = false;
    for (const auto& cand : catalog_candidates()) {
        if (check_structure(cand, c, booting) != VerdictReason::Ok)
            continue;
        const auto s = predict(cand, c, cfg, booting);
        const bool ok = s.rt <= cfg.rt_threshold;
        bool better;
        if (!best)
            better = true;
        else if (ok != best_ok)
            better = ok;
        else if (ok)
            better = s.dimmer > best_state.dimmer + 1e-12 ||
                     (std::abs(s.dimmer - best_state.dimmer) <= 1e-12 && s.servers < best_state.servers);
        else
            better = s.rt < best_state.rt;
        if (better) {
            best = cand;
            best_state = s;
            best_ok = ok;
        }
    }
    return best.value_or(AdaptationDecision::do_nothing());
}

Verdict verify(const AdaptationDecision& ad, const ContextSnapshot& c, const SystemConfig& cfg, int booting)
{
    Verdict v;
    v.reason = check_structure(ad, c, booting);
    if (v.reason != VerdictReason::Ok) {
        v.accepted = false;
        v.predicted_rt = std::numeric_limits<double>::quiet_NaN();
        v.alternative = best_alternative(c, cfg, booting);
        return v;
    }
    v.predicted_rt = predict(ad, c, cfg, booting).rt;
    if (v.predicted_rt <= cfg.rt_threshold)
        return v;

    for (const auto& cand : catalog_candidates()) {
        if (cand == ad || check_structure(cand, c, booting) != VerdictReason::Ok)
            continue;
        if (predict(cand, c, cfg, booting).rt <= cfg.rt_threshold) {
            v.accepted = false;
            v.reason = std::isinf(v.predicted_rt) ? VerdictReason::UnstableQueue
                                                  : VerdictReason::PredictedRtViolation;
            v.alternative = best_alternative(c, cfg, booting);
            return v;
        }
    }
    return v;
}

int execute(const AdaptationDecision& ad, LineChannel& effectors)
{
    std::string cmd;
    switch (ad.action()) {
    case Action::SetDimmer: cmd = "set_dimmer " + format_number(ad.argument().value_or(0.0)); break;
    case Action::AddServer: cmd = "add_server"; break;
    case Action::RemoveServer: cmd = "remove_server"; break;
    case Action::DoNothing: return 0;
    }
    std::string reply;
    try {
        reply = effectors.request(cmd);
    } catch (const Error& e) {
        if (e.code() == Errc::ChannelTimeout)
            throw Error(Errc::EffectorTimeout, cmd + " timed out");
        throw;
    }
    if (reply != "OK")
        throw Error(Errc::EffectorRejected, cmd + " -> " + reply);
    return 1;
}

} // namespace msek
