#include "msek/harness.hpp"

#include "oracles.hpp"
#include "tmpdir.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

using namespace msek;

namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& s)
{
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

LoopOptions options(int periods, std::uint64_t seed = 42)
{
    LoopOptions o;
    o.periods = periods;
    o.seed = seed;
    o.trace_id = "worldcup-like";
    o.engine_name = "test";
    return o;
}

RunReport run_mock(std::uint64_t seed, int periods, Engine* wrap = nullptr,
                   const std::filesystem::path& out = {})
{
    const RunConfig cfg;
    EmbeddedSystem sys(cfg.system, make_worldcup_like_trace(), seed);
    Knowledge k(cfg.system, PromptTemplate::builtin(Objective{cfg.system.rt_threshold}));
    MockOracleEngine mock(cfg.system.rt_threshold);
    auto o = options(periods, seed);
    o.out_dir = out;
    o.log_source = sys.log_source();
    return run_mse_loop(sys.channel(), wrap ? *wrap : mock, k, o);
}

// Engine that answers from a fixed list, cycling.
class CyclingEngine final : public Engine {
public:
    explicit CyclingEngine(std::vector<std::string> outs) : outs_(std::move(outs)) {}
    EngineKind kind() const override { return EngineKind::Replay; }
    std::string complete(const Prompt&) override
    {
        ++calls;
        return outs_[next_++ % outs_.size()];
    }
    int calls = 0;

private:
    std::vector<std::string> outs_;
    std::size_t next_ = 0;
};

PeriodRow row_with(double utility)
{
    PeriodRow r;
    r.utility_inc = utility;
    r.snapshot.sim_time = 200;
    r.snapshot.avg_response_time = 0.05;
    return r;
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("utility formula")
{
    const UtilityParams p;
    ContextSnapshot c{0.8, 2, 3, 0.5, 0.05, 40, 200};
    CHECK(utility_increment(c, 200, p) == doctest::Approx(11160));
    CHECK(utility_increment(c, 200, p) == doctest::Approx(oracle::utility_increment(200, 40, 0.8, 0.05, 2)));
    c.arrival_rate = 0;
    CHECK(utility_increment(c, 200, p) == doctest::Approx(-40));
    c.arrival_rate = 40;
    c.avg_response_time = 2 * p.rt_threshold;
    CHECK(utility_increment(c, 200, p) == doctest::Approx(-40));
    c.avg_response_time = 1.0;
    CHECK(utility_increment(c, 200, p) == doctest::Approx(oracle::utility_increment(200, 40, 0.8, 1.0, 2)));
}

TEST_CASE("utility is additive over any split")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<PeriodRow> rows(31);
    double t = 0;
    for (auto& r : rows)
        r.snapshot = {u(rng), std::floor(1 + 3 * u(rng)), 3, u(rng), 2 * u(rng), 60 * u(rng), t += 200};
    const UtilityParams p;
    const double total = utility(rows, 200, p);
    for (std::size_t cut = 0; cut <= rows.size(); ++cut) {
        const std::span<const PeriodRow> all(rows);
        CHECK(utility(all.first(cut), 200, p) + utility(all.subspan(cut), 200, p) ==
              doctest::Approx(total).epsilon(1e-12));
    }
}

TEST_CASE("comparison")
{
    RunReport a, b;
    a.meta.trace_id = b.meta.trace_id = "x";
    a.rows = {row_with(2500)};
    b.rows = {row_with(3500)};
    CHECK(compare(a, b).ratio == doctest::Approx(0.714).epsilon(0.001));
    CHECK(compare(a, a).ratio == 1.0);
    CHECK(render_comparison(compare(a, b), "mse", "reactive").find("0.714") != std::string::npos);
    b.meta.trace_id = "y";
    try {
        compare(a, b);
        FAIL("trace mismatch accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::TraceMismatch);
    }
    b.meta.trace_id = "x";
    b.meta.seed = 7;
    CHECK_THROWS_AS(compare(a, b), Error);
}

TEST_CASE("full run: period count, outputs and determinism")
{
    TempDir dir;
    const auto trace = make_worldcup_like_trace();
    CHECK(periods_for(trace, 200) == 31);
    const auto r = run_mock(42, 31, nullptr, dir / "a");
    CHECK(r.rows.size() == 31);
    CHECK(r.meta.complete);
    const auto csv = slurp(dir / "a" / "report.csv");
    CHECK(count_lines(csv) == 32);
    CHECK(std::filesystem::exists(dir / "a" / "timeline.svg"));
    CHECK(load_history(dir / "a" / "history.jsonl").size() == 31);
    const auto summary = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
    CHECK(summary["metadata"]["seed"] == 42);
    CHECK(summary["totals"]["periods"] == 31);

    run_mock(42, 31, nullptr, dir / "b");
    CHECK(slurp(dir / "b" / "report.csv") == csv);

    const auto back = load_report(dir / "a");
    REQUIRE(back.rows.size() == 31);
    CHECK(report_csv(back) == csv);
    CHECK(back.meta.seed == 42);
}

TEST_CASE("empty report writes a header and no timeline")
{
    TempDir dir;
    RunReport empty;
    { std::ofstream(dir / "timeline.svg") << "<svg/>"; }
    emit_outputs(empty, dir.path);
    CHECK(count_lines(slurp(dir / "report.csv")) == 1);
    CHECK_FALSE(std::filesystem::exists(dir / "timeline.svg"));
}

TEST_CASE("replay reproduces a recorded run")
{
    TempDir dir;
    MockOracleEngine mock(0.1);
    std::string csv;
    {
        RecordingEngine rec(mock, dir / "transcript.txt");
        csv = report_csv(run_mock(9, 31, &rec));
    }
    auto replay = ReplayEngine::from_file(dir / "transcript.txt");
    CHECK(report_csv(run_mock(9, 31, &replay)) == csv);
    CHECK(replay.remaining() == 0);
}

TEST_CASE("garbage engine falls back to DoNothing")
{
    CyclingEngine junk({"I am not sure what to do here.", "", "???"});
    const auto r = run_mock(42, 31, &junk);
    REQUIRE(r.rows.size() == 31);
    for (const auto& row : r.rows) {
        CHECK(row.decision.action() == Action::DoNothing);
        CHECK(row.verdict == "NoDecision");
    }
    CHECK(junk.calls == 31);
}

TEST_CASE("rejections retry then fall back, never executing a rejected decision")
{
    // Always asks for a server, which is structurally invalid at 3 of 3.
    CyclingEngine eager({"2"});
    const auto r = run_mock(42, 5, &eager);
    for (const auto& row : r.rows) {
        if (row.snapshot.active_servers >= row.snapshot.max_servers) {
            CHECK(row.verdict == "PoolFull");
            CHECK(row.engine_calls == 1 + max_verify_retries);
            CHECK(row.decision.action() != Action::AddServer);
        }
        CHECK(row.verdict != "EffectorRejected");
    }
}

TEST_CASE("random engine output never reaches the effectors unverified")
{
    std::mt19937_64 rng(77);
    std::vector<std::string> outs;
    const char* pool[] = {"1 0.2", "1 1", "2", "3", "4", "3", "1 0.9", "2", "1 1.5", "nothing"};
    for (int i = 0; i < 200; ++i)
        outs.emplace_back(pool[rng() % std::size(pool)]);
    CyclingEngine eng(outs);
    const auto r = run_mock(3, 31, &eng);
    CHECK(r.rows.size() == 31);
    for (const auto& row : r.rows)
        CHECK(row.verdict != "EffectorRejected");
}

TEST_CASE("aborted run keeps the partial report")
{
    TempDir dir;
    ReplayEngine short_tape({"4", "4", "4"});
    CHECK_THROWS_AS(run_mock(42, 10, &short_tape, dir.path), Error);
    CHECK(count_lines(slurp(dir / "report.csv")) == 4);
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["metadata"]["complete"] == false);
}

TEST_CASE("reactive loop")
{
    const RunConfig cfg;
    EmbeddedSystem sys(cfg.system, make_worldcup_like_trace(), 42);
    Knowledge k(cfg.system, PromptTemplate::builtin(Objective{}));
    auto o = options(31);
    o.verify = false;
    const auto r = run_reactive_loop(sys.channel(), k, o);
    CHECK(r.rows.size() == 31);
    CHECK(k.history().size() == 31);
    for (const auto& row : r.rows)
        CHECK(row.verdict == "Unverified");
}

}
