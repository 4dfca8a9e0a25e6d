#include "msek/core.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace msek;

namespace {

Errc decode_error(std::string_view line)
{
    try {
        decode_decision(line);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error for '" << line << "'");
    return Errc::IoError;
}

ContextSnapshot fig2()
{
    return {0.8, 2.0, 3.0, 0.89261, 0.35951825050096935, 42.9667, 3000.0};
}

} // namespace

TEST_SUITE("core") {

TEST_CASE("action ids follow the wire catalog")
{
    CHECK(static_cast<int>(Action::SetDimmer) == 1);
    CHECK(static_cast<int>(Action::AddServer) == 2);
    CHECK(static_cast<int>(Action::RemoveServer) == 3);
    CHECK(static_cast<int>(Action::DoNothing) == 4);
    for (auto a : {Action::SetDimmer, Action::AddServer, Action::RemoveServer, Action::DoNothing})
        CHECK(action_from_name(action_name(a)) == a);
    CHECK_FALSE(action_from_name("Reboot").has_value());
}

TEST_CASE("encode examples")
{
    CHECK(encode_decision(AdaptationDecision::set_dimmer(0.6)) == "1 0.6");
    CHECK(encode_decision(AdaptationDecision::do_nothing()) == "4");
    CHECK(encode_decision(AdaptationDecision::add_server()) == "2");
    CHECK(encode_decision(AdaptationDecision::remove_server()) == "3");
    CHECK(encode_decision(AdaptationDecision::set_dimmer(1.0)) == "1 1");
    CHECK(encode_decision(AdaptationDecision::set_dimmer(0.0)) == "1 0");
}

TEST_CASE("decode examples")
{
    const auto d = decode_decision("1 0.6");
    CHECK(d.action() == Action::SetDimmer);
    REQUIRE(d.argument().has_value());
    CHECK(*d.argument() == 0.6);
    CHECK(d.raw_text() == "1 0.6");
    CHECK(decode_decision("1 0.8") == AdaptationDecision::set_dimmer(0.8));
    CHECK(decode_decision("3") == AdaptationDecision::remove_server());
    CHECK(decode_decision("  2  ") == AdaptationDecision::add_server());
    CHECK(decode_decision("1 .5") == AdaptationDecision::set_dimmer(0.5));
}

TEST_CASE("decode errors")
{
    CHECK(decode_error("5 0.3") == Errc::UnknownAction);
    CHECK(decode_error("0") == Errc::UnknownAction);
    CHECK(decode_error("") == Errc::UnknownAction);
    CHECK(decode_error("add") == Errc::UnknownAction);
    CHECK(decode_error("1") == Errc::MissingArgument);
    CHECK(decode_error("1 high") == Errc::MissingArgument);
    CHECK(decode_error("1 1.5") == Errc::ArgumentOutOfRange);
    CHECK(decode_error("1 -0.1") == Errc::ArgumentOutOfRange);
    CHECK(decode_error("1 0.5 0.6") == Errc::SpuriousArgument);
    CHECK(decode_error("2 1") == Errc::SpuriousArgument);
    CHECK(decode_error("4 x") == Errc::SpuriousArgument);
}

TEST_CASE("round trip over every action and a 0.01 dimmer grid")
{
    int checked = 0;
    for (int k = 0; k <= 100; ++k) {
        const auto d = AdaptationDecision::set_dimmer(k / 100.0);
        CHECK(decode_decision(encode_decision(d)) == d);
        ++checked;
    }
    for (auto d : {AdaptationDecision::add_server(), AdaptationDecision::remove_server(),
                   AdaptationDecision::do_nothing()}) {
        CHECK(decode_decision(encode_decision(d)) == d);
        ++checked;
    }
    CHECK(checked == 104);
}

TEST_CASE("set_dimmer keeps values on the 0.01 grid")
{
    CHECK(*AdaptationDecision::set_dimmer(0.7 + 1e-12).argument() == 0.7);
    CHECK(*AdaptationDecision::set_dimmer(0.9 - 0.1).argument() == 0.8);
    CHECK(quantize_dimmer(0.123) == 0.12);
}

TEST_CASE("status block renders the example snapshot")
{
    const std::string want = "Status:\n"
                             "- dimmer: 0.8\n"
                             "- active_servers: 2.0\n"
                             "- utilization: 0.89261\n"
                             // Shortest round-trip spelling of the same double.
                             "- avg_response_time: 0.35951825050096936\n"
                             "- arrival_rate: 42.9667\n"
                             "- time: 3000\n"
                             "- max_servers: 3.0\n";
    CHECK(render_status_block(fig2()) == want);
    CHECK(0.35951825050096936 == 0.35951825050096935);
    CHECK(parse_status_block(want) == fig2());
}

TEST_CASE("status block parse ignores noise and rejects missing keys")
{
    const auto text = "Here is the state.\n" + render_status_block(fig2()) + "- colour: blue\n";
    CHECK(parse_status_block(text) == fig2());
    CHECK_THROWS_AS(parse_status_block("Status:\n- dimmer: 0.5\n"), Error);
    try {
        parse_status_block("Status:\n- dimmer: zero\n");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ProtocolError);
    }
}

TEST_CASE("number formatting")
{
    CHECK(format_number(0.8) == "0.8");
    CHECK(format_number(3000) == "3000");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_float(3.0) == "3.0");
    CHECK(format_float(0.35951825050096935) == "0.35951825050096936");
    CHECK(parse_number(format_float(0.1 + 0.2)) == 0.1 + 0.2);
    CHECK(parse_number("+0.5") == 0.5);
    CHECK_FALSE(parse_number("0.5x").has_value());
    CHECK_FALSE(parse_number("").has_value());
}

TEST_CASE("objective names the threshold")
{
    CHECK(Objective{0.1}.render().find("0.1") != std::string::npos);
}

}
