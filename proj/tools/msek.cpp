#include "msek/channel.hpp"
#include "msek/harness.hpp"
#include "msek/knowledge.hpp"
#include "msek/sim.hpp"
#include "msek/synthesize.hpp"
#include "msek/trace.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

namespace {

using namespace msek;

msek::LineServer* g_server = nullptr;

void on_signal(int)
{
    if (g_server)
        g_server->stop();
}

struct CommonOptions {
    std::uint64_t seed = 42;
    std::string trace_path;
    std::string config_path;
    std::string prompt_dir;
    std::string connect;
    std::string out;
    int periods = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o)
{
    cmd->add_option("--seed", o.seed, "Simulator RNG seed")->capture_default_str();
    cmd->add_option("--trace", o.trace_path, "Arrival trace CSV (default: built-in worldcup-like trace)");
    cmd->add_option("--config", o.config_path, "key=value configuration file");
    cmd->add_option("--periods", o.periods, "Control periods to run (default: trace duration / period)");
    cmd->add_option("--connect", o.connect, "host:port of a running `msek sim` (default: embedded simulator)");
    cmd->add_option("--out", o.out, "Output directory (default: runs/<engine>-<seed>)");
}

RunConfig config_of(const CommonOptions& o)
{
    return o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
}

ArrivalTrace trace_of(const CommonOptions& o)
{
    return o.trace_path.empty() ? make_worldcup_like_trace() : load_trace_csv(o.trace_path);
}

// Runs `body` against either an embedded simulator or a remote one.
template <typename Body>
RunReport with_system(const CommonOptions& o, const RunConfig& cfg, const ArrivalTrace& trace,
                      LoopOptions& loop, Body&& body)
{
    if (!o.connect.empty()) {
        const auto colon = o.connect.rfind(':');
        if (colon == std::string::npos)
            throw Error(Errc::InvalidConfig, "--connect expects host:port");
        TcpLineChannel ch(o.connect.substr(0, colon), std::stoi(o.connect.substr(colon + 1)));
        return body(static_cast<LineChannel&>(ch));
    }
    EmbeddedSystem system(cfg.system, trace, o.seed);
    loop.log_source = system.log_source();
    return body(system.channel());
}

void print_summary(const RunReport& r, const std::filesystem::path& out)
{
    const auto t = r.totals();
    std::cout << "periods: " << r.rows.size() << "\n"
              << "utility: " << t.utility << "\n"
              << "mean rt: " << t.mean_rt << " s, max rt: " << t.max_rt << " s\n"
              << "periods with rt <= 0.1 s: " << 100.0 * t.fraction_rt_ok << "%\n"
              << "outputs: " << out.string() << "\n";
}

int cmd_sim(int port, std::uint64_t seed, const std::string& trace_path, const std::string& config_path,
            bool any_address)
{
    CommonOptions o;
    o.seed = seed;
    o.trace_path = trace_path;
    o.config_path = config_path;
    const auto cfg = config_of(o);
    sim::Simulator simulator(cfg.system, trace_of(o), seed);
    sim::SimService service(simulator);
    LineServer server(port, any_address);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "msek sim listening on port " << server.port() << " (seed " << seed << ")\n";
    server.serve([&](std::string_view line) { return service.handle(line); });
    g_server = nullptr;
    return 0;
}

int cmd_run(const CommonOptions& o, const std::string& engine_kind, bool no_verify, bool strict,
            const std::string& transcript, const std::string& endpoint, const std::string& model,
            double temperature)
{
    const auto cfg = config_of(o);
    const auto trace = trace_of(o);

    EngineConfig ec;
    if (engine_kind == "http")
        ec.kind = EngineKind::HttpChat;
    else if (engine_kind == "mock")
        ec.kind = EngineKind::MockOracle;
    else if (engine_kind == "replay")
        ec.kind = EngineKind::Replay;
    else
        throw Error(Errc::InvalidConfig, "unknown engine '" + engine_kind + "'");
    if (!endpoint.empty())
        ec.endpoint = endpoint;
    if (!model.empty())
        ec.model = model;
    ec.temperature = temperature;
    ec.timeout_s = cfg.system.http_timeout;
    ec.max_retries = cfg.system.http_retries;
    ec.replay_path = transcript;
    ec.rt_threshold = cfg.system.rt_threshold;
    auto engine = make_engine(ec);

    const std::filesystem::path out =
        o.out.empty() ? std::filesystem::path("runs") / (engine_kind + "-" + std::to_string(o.seed)) : std::filesystem::path(o.out);
    std::filesystem::create_directories(out);

    // Every non-replay run keeps its raw outputs so it can be replayed.
    std::optional<RecordingEngine> recorder;
    Engine* active = engine.get();
    if (ec.kind != EngineKind::Replay) {
        recorder.emplace(*engine, out / "transcript.txt");
        active = &*recorder;
    }

    LoopOptions loop;
    loop.config = cfg;
    loop.periods = o.periods > 0 ? o.periods : periods_for(trace, cfg.system.control_period);
    loop.verify = !no_verify;
    loop.parse_mode = strict ? ParseMode::Strict : ParseMode::Lenient;
    loop.seed = o.seed;
    loop.trace_id = trace.id;
    loop.engine_name = engine_kind;
    loop.out_dir = out;

    Objective objective{cfg.system.rt_threshold};
    Knowledge knowledge(cfg.system, o.prompt_dir.empty() ? PromptTemplate::builtin(objective)
                                                         : PromptTemplate::load(o.prompt_dir, objective));
    const auto report = with_system(o, cfg, trace, loop, [&](LineChannel& ch) {
        return run_mse_loop(ch, *active, knowledge, loop);
    });
    print_summary(report, out);
    return 0;
}

int cmd_baseline(const CommonOptions& o)
{
    const auto cfg = config_of(o);
    const auto trace = trace_of(o);
    const std::filesystem::path out =
        o.out.empty() ? std::filesystem::path("runs") / ("baseline-" + std::to_string(o.seed)) : std::filesystem::path(o.out);

    LoopOptions loop;
    loop.config = cfg;
    loop.periods = o.periods > 0 ? o.periods : periods_for(trace, cfg.system.control_period);
    loop.verify = false;
    loop.seed = o.seed;
    loop.trace_id = trace.id;
    loop.engine_name = "reactive";
    loop.out_dir = out;

    Knowledge knowledge(cfg.system, PromptTemplate::builtin(Objective{cfg.system.rt_threshold}));
    const auto report = with_system(o, cfg, trace, loop, [&](LineChannel& ch) {
        return run_reactive_loop(ch, knowledge, loop);
    });
    print_summary(report, out);
    return 0;
}

int cmd_compare(const std::string& a, const std::string& b)
{
    const auto ra = load_report(a);
    const auto rb = load_report(b);
    const auto cmp = compare(ra, rb);
    std::cout << render_comparison(cmp, ra.meta.engine, rb.meta.engine);
    return 0;
}

int cmd_trace_gen(const std::string& kind, const std::string& out)
{
    if (kind != "worldcup-like")
        throw Error(Errc::InvalidConfig, "unknown trace kind '" + kind + "'");
    const auto csv = render_trace_csv(make_worldcup_like_trace());
    if (out.empty() || out == "-") {
        std::cout << csv;
        return 0;
    }
    std::ofstream f(out, std::ios::trunc);
    if (!(f << csv))
        throw Error(Errc::IoError, "cannot write " + out);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"msek: monitor-synthesize-execute self-adaptation for a simulated server farm"};
    app.require_subcommand(1);

    int port = 4242;
    std::uint64_t sim_seed = 42;
    std::string sim_trace, sim_config;
    bool any_address = false;
    auto* sim_cmd = app.add_subcommand("sim", "Serve the managed-system simulator over TCP");
    sim_cmd->add_option("--port", port, "TCP port (0 = ephemeral)")->capture_default_str();
    sim_cmd->add_option("--seed", sim_seed, "RNG seed")->capture_default_str();
    sim_cmd->add_option("--trace", sim_trace, "Arrival trace CSV");
    sim_cmd->add_option("--config", sim_config, "key=value configuration file");
    sim_cmd->add_flag("--any-address", any_address, "Listen on all interfaces instead of loopback");

    CommonOptions run_opts;
    std::string engine = "mock", transcript, endpoint, model;
    double temperature = 0.0;
    bool no_verify = false, strict = false;
    auto* run_cmd = app.add_subcommand("run", "Run the MSE-K adaptation loop");
    add_common(run_cmd, run_opts);
    run_cmd->add_option("--engine", engine, "Decision engine")
        ->check(CLI::IsMember({"http", "mock", "replay"}))
        ->capture_default_str();
    run_cmd->add_option("--transcript", transcript, "Transcript to replay (--engine replay)");
    run_cmd->add_option("--endpoint", endpoint, "Chat-completion URL (--engine http)");
    run_cmd->add_option("--model", model, "Model name (--engine http)");
    run_cmd->add_option("--temperature", temperature, "Sampling temperature")->capture_default_str();
    run_cmd->add_option("--prompt-dir", run_opts.prompt_dir, "Directory with prompt template files");
    run_cmd->add_flag("--no-verify", no_verify, "Skip the verifier gate");
    run_cmd->add_flag("--strict-parse", strict, "Require the whole engine reply to be one decision");

    CommonOptions base_opts;
    auto* base_cmd = app.add_subcommand("baseline", "Run the reactive threshold manager");
    add_common(base_cmd, base_opts);

    std::string cmp_a, cmp_b;
    auto* cmp_cmd = app.add_subcommand("compare", "Compare two run directories");
    cmp_cmd->add_option("A", cmp_a, "First run directory")->required();
    cmp_cmd->add_option("B", cmp_b, "Second run directory")->required();

    std::string trace_kind = "worldcup-like", trace_out;
    auto* trace_cmd = app.add_subcommand("trace", "Trace utilities");
    trace_cmd->require_subcommand(1);
    auto* gen_cmd = trace_cmd->add_subcommand("gen", "Generate a bundled trace as CSV");
    gen_cmd->add_option("--kind", trace_kind, "Trace kind")->capture_default_str();
    gen_cmd->add_option("--out", trace_out, "Output file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim_cmd)
            return cmd_sim(port, sim_seed, sim_trace, sim_config, any_address);
        if (*run_cmd) {
            if (engine == "replay" && transcript.empty())
                throw Error(Errc::InvalidConfig, "--engine replay needs --transcript");
            return cmd_run(run_opts, engine, no_verify, strict, transcript, endpoint, model, temperature);
        }
        if (*base_cmd)
            return cmd_baseline(base_opts);
        if (*cmp_cmd)
            return cmd_compare(cmp_a, cmp_b);
        if (*gen_cmd)
            return cmd_trace_gen(trace_kind, trace_out);
    } catch (const msek::Error& e) {
        std::cerr << "msek: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "msek: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
