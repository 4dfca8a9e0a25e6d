#include "msek/execute.hpp"
#include "msek/harness.hpp"

#include "oracles.hpp"
#include "scripted.hpp"
#include "sweep.hpp"

#include <doctest.h>

#include <cmath>

using namespace msek;

namespace {

ContextSnapshot state(double servers, double dimmer, double lambda)
{
    return {dimmer, servers, 3.0, 0.5, 0.2, lambda, 1000.0};
}

} // namespace

TEST_SUITE("execute") {

TEST_CASE("erlang-c examples")
{
    CHECK(erlang_c_response_time(15, 1, 0.05) == doctest::Approx(0.2));
    CHECK(erlang_c_response_time(0, 3, 0.05) == 0.05);
    CHECK(std::isinf(erlang_c_response_time(40, 2, 0.05)));
    CHECK(std::isinf(erlang_c_response_time(60, 1, 0.05)));
    CHECK(erlang_c_wait_probability(15, 1, 0.05) == doctest::Approx(0.75));
}

TEST_CASE("erlang-c agrees with the sum form")
{
    for (int c = 1; c <= 6; ++c)
        for (double lambda = 1; lambda < c * 20.0; lambda += 1.7)
            CHECK(erlang_c_response_time(lambda, c, 0.05) ==
                  doctest::Approx(oracle::mmc_response_time(lambda, c, 20.0)).epsilon(1e-9));
}

TEST_CASE("erlang-c monotonicity")
{
    for (double s = 0.01; s <= 0.08; s += 0.005)
        for (double lambda = 0; lambda <= 120; lambda += 2.5) {
            for (int c = 1; c < 5; ++c)
                CHECK(erlang_c_response_time(lambda, c + 1, s) <= erlang_c_response_time(lambda, c, s));
            for (int c = 1; c <= 5; ++c) {
                CHECK(erlang_c_response_time(lambda + 2.5, c, s) >= erlang_c_response_time(lambda, c, s));
                CHECK(erlang_c_response_time(lambda, c, s + 0.005) >= erlang_c_response_time(lambda, c, s));
            }
        }
}

TEST_CASE("verify examples")
{
    const SystemConfig cfg;
    auto v = verify(AdaptationDecision::remove_server(), state(1, 0.5, 5), cfg);
    CHECK_FALSE(v.accepted);
    CHECK(v.reason == VerdictReason::LastServer);

    const ContextSnapshot fig2{0.8, 2.0, 3.0, 0.89261, 0.35951825050096935, 42.9667, 3000.0};
    CHECK(verify(AdaptationDecision::add_server(), fig2, cfg).accepted);

    v = verify(AdaptationDecision::add_server(), state(3, 1, 10), cfg);
    CHECK(v.reason == VerdictReason::PoolFull);
    v = verify(AdaptationDecision::set_dimmer(0.5), state(3, 1, 10), cfg);
    CHECK(v.accepted);

    // One server at dimmer 1 serves 20 req/s. At 25 req/s the queue is
    // unstable, and a second server would bring it under the threshold.
    v = verify(AdaptationDecision::do_nothing(), state(1, 1, 25), cfg);
    CHECK_FALSE(v.accepted);
    CHECK(v.reason == VerdictReason::UnstableQueue);
    REQUIRE(v.alternative.has_value());
    CHECK(verify(*v.alternative, state(1, 1, 25), cfg).accepted);
    CHECK(verify(AdaptationDecision::add_server(), state(1, 1, 25), cfg).accepted);

    // At 60 req/s nothing single-step helps, so DoNothing stands.
    v = verify(AdaptationDecision::do_nothing(), state(1, 1, 60), cfg);
    CHECK(v.accepted);
    CHECK(std::isinf(v.predicted_rt));

    // A finite but slow prediction is a plain violation.
    v = verify(AdaptationDecision::do_nothing(), state(2, 1, 31), cfg);
    CHECK_FALSE(v.accepted);
    CHECK(v.reason == VerdictReason::PredictedRtViolation);
}

TEST_CASE("booting servers do not count toward the prediction")
{
    const SystemConfig cfg;
    // 2 reported, 1 of them still booting: only one serves 25 req/s.
    const auto c = state(2, 1, 25);
    CHECK(verify(AdaptationDecision::do_nothing(), c, cfg, 0).accepted);
    CHECK_FALSE(verify(AdaptationDecision::do_nothing(), c, cfg, 1).accepted);
    // Cancelling the booting server is always structurally fine.
    CHECK(check_structure(AdaptationDecision::remove_server(), state(2, 1, 5), 1) == VerdictReason::Ok);
    CHECK(predict(AdaptationDecision::remove_server(), c, cfg, 1).servers == 1);
}

TEST_CASE("best alternative prefers dimmer, then fewer servers")
{
    const SystemConfig cfg;
    const auto alt = best_alternative(state(3, 1, 10), cfg);
    // Everything meets the threshold at 10 req/s; highest dimmer with the
    // fewest servers is RemoveServer at dimmer 1.
    CHECK(alt == AdaptationDecision::remove_server());
    const auto tight = best_alternative(state(3, 1, 70), cfg);
    REQUIRE(tight.action() == Action::SetDimmer);
    const double d = *tight.argument();
    CHECK(erlang_c_response_time(70, 3, cfg.mean_service(d)) <= cfg.rt_threshold);
    CHECK(erlang_c_response_time(70, 3, cfg.mean_service(d + 0.1)) > cfg.rt_threshold);
}

TEST_CASE("verifier soundness sweep")
{
    const auto r = run_verifier_sweep();
    CHECK(r.cases == 2772);
    CHECK(r.invalid_accepted == 0);
    CHECK(r.all_rejected_states == 0);
    CHECK(r.unjustified_rejections == 0);
    CHECK(r.monotonicity_violations == 0);
}

TEST_CASE("execute sends one effector command")
{
    ScriptedChannel ch;
    CHECK(execute(AdaptationDecision::set_dimmer(0.6), ch) == 1);
    REQUIRE(ch.sent.size() == 1);
    CHECK(ch.sent[0] == "set_dimmer 0.6");
    CHECK(execute(AdaptationDecision::do_nothing(), ch) == 0);
    CHECK(ch.sent.size() == 1);
    execute(AdaptationDecision::add_server(), ch);
    execute(AdaptationDecision::remove_server(), ch);
    CHECK(ch.sent[1] == "add_server");
    CHECK(ch.sent[2] == "remove_server");

    ch.time_out = true;
    try {
        execute(AdaptationDecision::add_server(), ch);
        FAIL("no timeout");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::EffectorTimeout);
    }
}

TEST_CASE("execute against a full pool")
{
    EmbeddedSystem sys(SystemConfig{}, ArrivalTrace::constant(0, 100), 1);
    try {
        execute(AdaptationDecision::add_server(), sys.channel());
        FAIL("pool full accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::EffectorRejected);
    }
    CHECK(execute(AdaptationDecision::set_dimmer(0.6), sys.channel()) == 1);
    CHECK(sys.simulator().dimmer() == 0.6);
}

}
