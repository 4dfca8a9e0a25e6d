#pragma once

#include "msek/execute.hpp"

#include "oracles.hpp"

#include <cmath>
#include <string>
#include <vector>

// Exhaustive verifier sweep over servers 1..3, dimmer 0..1 step 0.1 and
// lambda 5..60 step 5, for seven candidate decisions per state.
struct SweepResult {
    int cases = 0;
    int invalid_accepted = 0;
    int all_rejected_states = 0;
    int unjustified_rejections = 0;  // rejected on rt with no alternative within the threshold
    int monotonicity_violations = 0;
    std::vector<std::string> notes;
};

inline SweepResult run_verifier_sweep()
{
    using namespace msek;
    const SystemConfig cfg;
    const double T = cfg.rt_threshold;
    const AdaptationDecision actions[] = {AdaptationDecision::do_nothing(),     AdaptationDecision::add_server(),
                                          AdaptationDecision::remove_server(),  AdaptationDecision::set_dimmer(0.0),
                                          AdaptationDecision::set_dimmer(0.5),  AdaptationDecision::set_dimmer(1.0),
                                          AdaptationDecision::set_dimmer(1.5)};
    SweepResult r;
    for (int servers = 1; servers <= 3; ++servers) {
        for (int di = 0; di <= 10; ++di) {
            const double dimmer = di / 10.0;
            for (int li = 1; li <= 12; ++li) {
                const double lambda = 5.0 * li;
                const ContextSnapshot c{dimmer, double(servers), double(cfg.max_servers), 0.5, 0.1, lambda, 100.0};

                // Oracle: best reachable response time over the same catalog.
                bool some_within = false;
                auto oracle_rt = [&](int s, double d) {
                    return s < 1 ? INFINITY : oracle::mmc_response_time(lambda, s, 1.0 / cfg.mean_service(d));
                };
                for (int k = 0; k <= 10; ++k)
                    some_within |= oracle_rt(servers, k / 10.0) <= T;
                if (servers < cfg.max_servers)
                    some_within |= oracle_rt(servers + 1, dimmer) <= T;
                if (servers > 1)
                    some_within |= oracle_rt(servers - 1, dimmer) <= T;

                int accepted = 0;
                for (const auto& ad : actions) {
                    ++r.cases;
                    const bool invalid = (ad.action() == Action::AddServer && servers >= cfg.max_servers) ||
                                         (ad.action() == Action::RemoveServer && servers <= 1) ||
                                         (ad.action() == Action::SetDimmer && *ad.argument() > 1.0);
                    const auto v = verify(ad, c, cfg);
                    if (v.accepted) {
                        ++accepted;
                        if (invalid) {
                            ++r.invalid_accepted;
                            r.notes.push_back("accepted invalid " + encode_decision(ad));
                        }
                    } else if (!invalid && !some_within) {
                        ++r.unjustified_rejections;
                    }
                }
                if (accepted == 0)
                    ++r.all_rejected_states;

                const double s = cfg.mean_service(dimmer);
                const double w = erlang_c_response_time(lambda, servers, s);
                if (erlang_c_response_time(lambda, servers + 1, s) > w ||
                    erlang_c_response_time(lambda + 5.0, servers, s) < w ||
                    erlang_c_response_time(lambda, servers, s + 0.003) < w)
                    ++r.monotonicity_violations;
            }
        }
    }
    return r;
}
