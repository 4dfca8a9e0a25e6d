#pragma once

#include "msek/channel.hpp"
#include "msek/config.hpp"
#include "msek/core.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace msek {

// Mean response time of an M/M/c queue with arrival rate `lambda` and
// exponential service of mean `mean_service`. +infinity when the queue is
// unstable (lambda >= servers / mean_service).
double erlang_c_response_time(double lambda, int servers, double mean_service);

// Probability that an arrival waits, Erlang's C formula.
double erlang_c_wait_probability(double lambda, int servers, double mean_service);

enum class VerdictReason { Ok, LastServer, PoolFull, BadDimmer, PredictedRtViolation, UnstableQueue };

std::string_view verdict_name(VerdictReason r);

struct Verdict {
    bool accepted = true;
    VerdictReason reason = VerdictReason::Ok;
    double predicted_rt = 0.0;
    // Best catalog action under the model, set when a decision is rejected.
    std::optional<AdaptationDecision> alternative;
};

// Configuration the managed system would be in after `ad`, as seen by the
// queueing model.
struct PredictedState {
    int servers = 0;
    double dimmer = 0.0;
    double rt = 0.0;
};

// `booting` is how many of c.active_servers are still starting up; they are
// unavailable to the queueing prediction.

// Structural check only: LastServer, PoolFull, BadDimmer or Ok.
VerdictReason check_structure(const AdaptationDecision& ad, const ContextSnapshot& c, int booting = 0);

PredictedState predict(const AdaptationDecision& ad, const ContextSnapshot& c, const SystemConfig& cfg,
                       int booting = 0);

// Candidate actions the verifier compares against: DoNothing, AddServer,
// RemoveServer and SetDimmer on a 0.1 grid.
std::vector<AdaptationDecision> catalog_candidates();

// Structural checks first, then the response-time prediction. A decision
// predicted above cfg.rt_threshold is rejected only when some structurally
// valid alternative is predicted within it.
Verdict verify(const AdaptationDecision& ad, const ContextSnapshot& c, const SystemConfig& cfg,
               int booting = 0);

// Among valid candidates within the threshold, the one with the highest
// dimmer, then fewest servers; if none is within it, the lowest predicted rt.
AdaptationDecision best_alternative(const ContextSnapshot& c, const SystemConfig& cfg, int booting = 0);

// Sends the effector command for `ad` and waits for "OK". DoNothing sends
// nothing. Returns the number of commands sent.
// Throws Errc::EffectorRejected or Errc::EffectorTimeout.
int execute(const AdaptationDecision& ad, LineChannel& effectors);

} // namespace msek
