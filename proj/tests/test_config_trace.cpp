#include "msek/config.hpp"
#include "msek/error.hpp"
#include "msek/trace.hpp"

#include <doctest.h>

#include <algorithm>

using namespace msek;

TEST_SUITE("config_trace") {

TEST_CASE("defaults describe the reference experiment")
{
    const SystemConfig c;
    CHECK(c.max_servers == 3);
    CHECK(c.initial_servers == 3);
    CHECK(c.initial_dimmer == 0.9);
    CHECK(c.control_period == 200.0);
    CHECK(c.mean_service(1.0) == doctest::Approx(0.05));
    CHECK(c.mean_service(0.0) == doctest::Approx(0.02));
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("config text round trips and hashes stably")
{
    auto cfg = parse_config("# comment\nmax_servers = 4\nutility.server_cost=0.2\nreactive.rt_hi=0.2\n");
    CHECK(cfg.system.max_servers == 4);
    CHECK(cfg.utility.server_cost == 0.2);
    CHECK(cfg.reactive.rt_hi == 0.2);
    const auto again = parse_config(render_config(cfg));
    CHECK(render_config(again) == render_config(cfg));
    CHECK(config_hash(again) == config_hash(cfg));
    CHECK(config_hash(cfg) != config_hash(RunConfig{}));
    CHECK(config_hash(cfg).size() == 16);
}

TEST_CASE("bad config is rejected")
{
    CHECK_THROWS_AS(parse_config("no_such_key=1\n"), Error);
    CHECK_THROWS_AS(parse_config("max_servers=abc\n"), Error);
    CHECK_THROWS_AS(parse_config("initial_dimmer=1.5\n"), Error);
    CHECK_THROWS_AS(parse_config("initial_servers=5\n"), Error);
}

TEST_CASE("trace lookup is piecewise constant")
{
    ArrivalTrace t{"t", {{0, 5}, {60, 10}, {120, 0}}, 180};
    CHECK(t.rate_at(0) == 5);
    CHECK(t.rate_at(59.9) == 5);
    CHECK(t.rate_at(60) == 10);
    CHECK(t.rate_at(1000) == 0);
    CHECK(t.segment_index(130) == 2);
    CHECK_NOTHROW(t.validate());
    ArrivalTrace bad{"b", {{0, 5}, {0, 6}}, 10};
    CHECK_THROWS_AS(bad.validate(), Error);
    ArrivalTrace neg{"n", {{0, -1}}, 10};
    CHECK_THROWS_AS(neg.validate(), Error);
}

TEST_CASE("trace csv round trip")
{
    const auto t = make_worldcup_like_trace();
    const auto back = parse_trace_csv(render_trace_csv(t), t.id);
    CHECK(back.duration == t.duration);
    REQUIRE(back.segments.size() >= t.segments.size() - 1);
    for (double s = 0; s < t.duration; s += 30)
        CHECK(back.rate_at(s) == t.rate_at(s));
    CHECK_THROWS_AS(parse_trace_csv("start,rate\n0,1\n", "x"), Error);
    CHECK_THROWS_AS(parse_trace_csv("start_s,rate_rps\n0,abc\n", "x"), Error);
}

TEST_CASE("bundled trace shape")
{
    const auto t = make_worldcup_like_trace();
    CHECK(t.duration == 105 * 60);
    CHECK(t.rate_at(0) == 5.0);
    CHECK(t.rate_at(2800) == 45.0);
    double peak = 0, peak_at = 0;
    for (const auto& s : t.segments)
        if (s.rate > peak) {
            peak = s.rate;
            peak_at = s.start;
        }
    // The surge is 2.5x the surrounding level for eight minutes.
    const double before = t.rate_at(peak_at - 60);
    CHECK(peak / before == doctest::Approx(2.5).epsilon(0.05));
    // Outside the surge the level never exceeds 45 req/s.
    int surge_minutes = 0;
    for (double s = 0; s < t.duration; s += 60)
        surge_minutes += t.rate_at(s) > 45.0 ? 1 : 0;
    CHECK(surge_minutes == 8);
    CHECK(t.rate_at(t.duration - 1) < 15.0);
}

}
