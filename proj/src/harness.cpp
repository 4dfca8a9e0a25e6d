#include "msek/harness.hpp"

#include "msek/baseline.hpp"
#include "msek/execute.hpp"
#include "msek/monitor.hpp"

#include <json.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <sstream>

namespace msek {

using json = nlohmann::json;

namespace {

constexpr double stable_rt = 0.1;

} // namespace

double utility_increment(const ContextSnapshot& c, double period, const UtilityParams& p)
{
    const double served = period * c.arrival_rate;
    double revenue;
    if (c.avg_response_time <= p.rt_threshold) {
        revenue = served * (c.dimmer * p.revenue_optional + (1.0 - c.dimmer) * p.revenue_mandatory);
    } else {
        const double keep = std::max(0.0, 1.0 - c.avg_response_time / (2.0 * p.rt_threshold));
        revenue = served * p.revenue_mandatory * p.penalty_multiplier * keep;
    }
    return revenue - period * c.active_servers * p.server_cost;
}

double utility(std::span<const PeriodRow> rows, double period, const UtilityParams& p)
{
    double total = 0.0;
    for (const auto& r : rows)
        total += utility_increment(r.snapshot, period, p);
    return total;
}

RunTotals RunReport::totals() const
{
    RunTotals t;
    if (rows.empty())
        return t;
    std::vector<double> rts;
    rts.reserve(rows.size());
    int ok = 0;
    for (const auto& r : rows) {
        t.utility += r.utility_inc;
        rts.push_back(r.snapshot.avg_response_time);
        t.max_rt = std::max(t.max_rt, r.snapshot.avg_response_time);
        ok += r.snapshot.avg_response_time <= stable_rt ? 1 : 0;
        ++t.decisions[std::string(action_name(r.decision.action()))];
    }
    double sum = 0.0;
    for (double v : rts)
        sum += v;
    t.mean_rt = sum / static_cast<double>(rts.size());
    std::sort(rts.begin(), rts.end());
    // Nearest-rank percentile.
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(rts.size())));
    t.p95_rt = rts[std::max<std::size_t>(rank, 1) - 1];
    t.fraction_rt_ok = static_cast<double>(ok) / static_cast<double>(rows.size());
    return t;
}

int periods_for(const ArrivalTrace& trace, double control_period)
{
    return static_cast<int>(std::floor(trace.duration / control_period + 1e-9));
}

namespace {

void advance(LineChannel& system, double seconds)
{
    const auto reply = system.request("advance " + format_number(seconds));
    if (reply != "OK")
        throw Error(Errc::ProtocolError, "advance returned '" + reply + "'");
}

std::string rejection_feedback(const AdaptationDecision& ad, const Verdict& v)
{
    std::string text = "The verifier rejected your previous answer \"" + encode_decision(ad) + "\" (" +
                       std::string(verdict_name(v.reason)) + ")";
    if (std::isfinite(v.predicted_rt))
        text += ", predicted response time " + format_number(v.predicted_rt) + " s";
    else if (v.reason == VerdictReason::UnstableQueue)
        text += ", the queue would grow without bound";
    return text + ". Choose a different action.";
}

struct Decided {
    AdaptationDecision decision;
    std::string verdict;
    int engine_calls = 0;
    bool verified = false;
};

Decided synthesize_and_verify(const ContextSnapshot& c, int booting, Engine& engine, const Knowledge& k,
                              const LoopOptions& opts)
{
    const auto& sys = opts.config.system;
    const auto budget = static_cast<std::size_t>(sys.token_budget);
    Decided out;
    std::string feedback;
    for (int attempt = 0; attempt <= max_verify_retries; ++attempt) {
        const auto prompt = generate_prompt(c, k.history(), k.prompts(), budget, feedback);
        const auto raw = engine.complete(prompt);
        ++out.engine_calls;
        AdaptationDecision ad;
        try {
            ad = parse_response(raw, opts.parse_mode);
        } catch (const Error&) {
            if (attempt == 0) {
                // Unusable output: hold the current configuration this period.
                out.decision = AdaptationDecision::do_nothing().with_raw_text(raw);
                out.verdict = "NoDecision";
                return out;
            }
            feedback = "Your previous answer could not be parsed. Reply with one action number.";
            continue;
        }
        if (!opts.verify) {
            out.decision = ad;
            out.verdict = "Unverified";
            return out;
        }
        const auto v = verify(ad, c, sys, booting);
        if (attempt == 0)
            out.verdict = std::string(verdict_name(v.reason));
        if (v.accepted) {
            out.decision = ad;
            out.verified = true;
            return out;
        }
        feedback = rejection_feedback(ad, v);
    }

    // Retries spent: use the rule policy, and the model's own pick if that
    // is rejected too.
    auto fallback = parse_response(MockOracleEngine::decide(c, sys.rt_threshold));
    const auto v = verify(fallback, c, sys, booting);
    if (v.accepted)
        out.decision = fallback;
    else
        out.decision = v.alternative.value_or(AdaptationDecision::do_nothing());
    out.decision.with_raw_text(encode_decision(out.decision));
    out.verified = true;
    assert(verify(out.decision, c, sys, booting).accepted);
    return out;
}

template <typename Decide>
RunReport run_loop(LineChannel& system, Knowledge& knowledge, const LoopOptions& opts, Decide&& decide)
{
    const auto& sys = opts.config.system;
    RunReport report;
    report.meta.seed = opts.seed;
    report.meta.trace_id = opts.trace_id;
    report.meta.engine = opts.engine_name;
    report.meta.config_hash = config_hash(opts.config);
    report.meta.verify = opts.verify;
    report.meta.periods_planned = opts.periods;

    if (!opts.out_dir.empty()) {
        std::filesystem::create_directories(opts.out_dir);
        knowledge.persist_to(opts.out_dir / "history.jsonl");
    }

    // Start times of servers this loop added that may still be booting.
    std::vector<double> started;
    try {
        for (int i = 0; i < opts.periods; ++i) {
            advance(system, sys.control_period);
            const auto c = collect_context(system, knowledge);
            if (opts.log_source) {
                for (auto& line : opts.log_source())
                    knowledge.ingest_log(std::move(line));
            }

            std::erase_if(started, [&](double t) { return t + sys.boot_delay <= c.sim_time; });
            const int booting = static_cast<int>(started.size());

            Decided d = decide(c, booting);
            if (d.decision.action() != Action::DoNothing) {
                try {
                    execute(d.decision, system);
                    if (d.decision.action() == Action::AddServer)
                        started.push_back(c.sim_time);
                    else if (d.decision.action() == Action::RemoveServer && !started.empty())
                        started.pop_back(); // the simulator cancels the newest boot first
                } catch (const Error& e) {
                    if (e.code() != Errc::EffectorRejected)
                        throw;
                    d.verdict = "EffectorRejected";
                }
            }
            knowledge.record(c, d.decision);

            PeriodRow row;
            row.snapshot = c;
            row.decision = d.decision;
            row.verdict = d.verdict;
            row.engine_calls = d.engine_calls;
            row.utility_inc = utility_increment(c, sys.control_period, opts.config.utility);
            report.rows.push_back(std::move(row));
        }
        report.meta.complete = true;
    } catch (const Error& e) {
        report.meta.abort_reason = e.what();
        if (!opts.out_dir.empty())
            emit_outputs(report, opts.out_dir);
        throw;
    }
    if (!opts.out_dir.empty())
        emit_outputs(report, opts.out_dir);
    return report;
}

} // namespace

RunReport run_mse_loop(LineChannel& system, Engine& engine, Knowledge& knowledge, const LoopOptions& opts)
{
    return run_loop(system, knowledge, opts, [&](const ContextSnapshot& c, int booting) {
        auto d = synthesize_and_verify(c, booting, engine, knowledge, opts);
        if (opts.verify && d.decision.action() != Action::DoNothing && !d.verified)
            throw std::logic_error("unverified decision reached the executor");
        return d;
    });
}

RunReport run_reactive_loop(LineChannel& system, Knowledge& knowledge, const LoopOptions& opts)
{
    return run_loop(system, knowledge, opts, [&](const ContextSnapshot& c, int) {
        Decided d;
        d.decision = reactive_decide(c, opts.config.reactive);
        d.verdict = "Unverified";
        return d;
    });
}

EmbeddedSystem::EmbeddedSystem(const SystemConfig& cfg, ArrivalTrace trace, std::uint64_t seed)
    : sim_(cfg, std::move(trace), seed), service_(sim_), channel_(service_)
{
}

std::function<std::vector<std::string>()> EmbeddedSystem::log_source()
{
    return [this] {
        const auto events = sim_.drain_events();
        return format_event_log(events);
    };
}

std::string report_csv(const RunReport& report)
{
    std::string out =
        "time_s,dimmer,active_servers,max_servers,utilization,avg_rt_s,arrival_rate_rps,action,arg,verdict,utility_inc\n";
    for (const auto& r : report.rows) {
        const auto& c = r.snapshot;
        out += format_number(c.sim_time) + "," + format_number(c.dimmer) + "," +
               format_number(c.active_servers) + "," + format_number(c.max_servers) + "," +
               format_number(c.utilization) + "," + format_number(c.avg_response_time) + "," +
               format_number(c.arrival_rate) + "," + std::string(action_name(r.decision.action())) + "," +
               (r.decision.argument() ? format_number(*r.decision.argument()) : std::string()) + "," +
               r.verdict + "," + format_number(r.utility_inc) + "\n";
    }
    return out;
}

std::string summary_json(const RunReport& report)
{
    const auto t = report.totals();
    json j;
    j["metadata"] = {
        {"seed", report.meta.seed},
        {"trace_id", report.meta.trace_id},
        {"engine", report.meta.engine},
        {"config_hash", report.meta.config_hash},
        {"verify", report.meta.verify},
        {"periods_planned", report.meta.periods_planned},
        {"complete", report.meta.complete},
        {"abort_reason", report.meta.abort_reason},
    };
    json decisions = json::object();
    for (const auto& [name, n] : t.decisions)
        decisions[name] = n;
    j["totals"] = {
        {"periods", report.rows.size()},
        {"utility", t.utility},
        {"mean_rt", t.mean_rt},
        {"p95_rt", t.p95_rt},
        {"max_rt", t.max_rt},
        {"fraction_rt_ok", t.fraction_rt_ok},
        {"decisions", decisions},
    };
    return j.dump(2) + "\n";
}

namespace {

struct Series {
    std::string label;
    std::string colour;
    std::function<double(const PeriodRow&)> value;
};

} // namespace

std::string timeline_svg(const RunReport& report)
{
    constexpr double width = 800.0;
    constexpr double panel = 140.0;
    constexpr double margin_left = 70.0;
    constexpr double margin_right = 20.0;
    constexpr double gap = 30.0;
    const std::vector<Series> series{
        {"arrival rate (req/s)", "#1f77b4", [](const PeriodRow& r) { return r.snapshot.arrival_rate; }},
        {"active servers", "#2ca02c", [](const PeriodRow& r) { return r.snapshot.active_servers; }},
        {"dimmer", "#ff7f0e", [](const PeriodRow& r) { return r.snapshot.dimmer; }},
        {"avg response time (s)", "#d62728", [](const PeriodRow& r) { return r.snapshot.avg_response_time; }},
    };
    const double height = gap + static_cast<double>(series.size()) * (panel + gap);

    double t_min = report.rows.empty() ? 0.0 : report.rows.front().snapshot.sim_time;
    double t_max = report.rows.empty() ? 1.0 : report.rows.back().snapshot.sim_time;
    if (t_max <= t_min)
        t_max = t_min + 1.0;
    const double plot_w = width - margin_left - margin_right;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const double top = gap + static_cast<double>(i) * (panel + gap);
        double v_max = 0.0;
        for (const auto& r : report.rows) {
            const double v = s.value(r);
            if (std::isfinite(v))
                v_max = std::max(v_max, v);
        }
        if (v_max <= 0.0)
            v_max = 1.0;
        os << "<text x=\"" << margin_left << "\" y=\"" << top - 8 << "\">" << s.label << "</text>\n";
        os << "<rect x=\"" << margin_left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\""
           << panel << "\" fill=\"none\" stroke=\"#999\"/>\n";
        os << "<text x=\"" << margin_left - 6 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">"
           << format_number(std::round(v_max * 1000.0) / 1000.0) << "</text>\n";
        os << "<text x=\"" << margin_left - 6 << "\" y=\"" << top + panel << "\" text-anchor=\"end\">0</text>\n";
        os << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& r : report.rows) {
            const double x = margin_left + (r.snapshot.sim_time - t_min) / (t_max - t_min) * plot_w;
            const double v = std::clamp(s.value(r), 0.0, v_max);
            const double y = top + panel - v / v_max * panel;
            os << format_number(std::round(x * 10.0) / 10.0) << ","
               << format_number(std::round(y * 10.0) / 10.0) << " ";
        }
        os << "\"/>\n";
    }
    os << "<text x=\"" << margin_left << "\" y=\"" << height - 8 << "\">time (s): "
       << format_number(t_min) << " to " << format_number(t_max) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out)
        throw Error(Errc::IoError, "cannot write " + path.string());
    out << text;
    if (!out.flush())
        throw Error(Errc::IoError, "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

} // namespace

void emit_outputs(const RunReport& report, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
    write_text(dir / "report.csv", report_csv(report));
    write_text(dir / "summary.json", summary_json(report));
    const auto svg = dir / "timeline.svg";
    if (report.rows.empty())
        std::filesystem::remove(svg, ec);
    else
        write_text(svg, timeline_svg(report));
}

RunReport load_report(const std::filesystem::path& dir)
{
    RunReport report;
    const auto summary = json::parse(read_text(dir / "summary.json"), nullptr, false);
    if (summary.is_discarded())
        throw Error(Errc::IoError, "summary.json in " + dir.string() + " is not JSON");
    const auto& m = summary.at("metadata");
    report.meta.seed = m.at("seed").get<std::uint64_t>();
    report.meta.trace_id = m.at("trace_id").get<std::string>();
    report.meta.engine = m.at("engine").get<std::string>();
    report.meta.config_hash = m.at("config_hash").get<std::string>();
    report.meta.verify = m.at("verify").get<bool>();
    report.meta.periods_planned = m.at("periods_planned").get<int>();
    report.meta.complete = m.at("complete").get<bool>();
    report.meta.abort_reason = m.at("abort_reason").get<std::string>();

    std::istringstream csv(read_text(dir / "report.csv"));
    std::string line;
    std::getline(csv, line); // header
    std::size_t lineno = 1;
    while (std::getline(csv, line)) {
        ++lineno;
        if (line.empty())
            continue;
        const auto cells = split_csv(line);
        const auto num = [&](std::size_t i) {
            const auto v = i < cells.size() ? parse_number(cells[i]) : std::nullopt;
            if (!v)
                throw Error(Errc::CorruptRecord, "report.csv line " + std::to_string(lineno));
            return *v;
        };
        if (cells.size() != 11)
            throw Error(Errc::CorruptRecord, "report.csv line " + std::to_string(lineno) + " has " +
                                                 std::to_string(cells.size()) + " cells");
        PeriodRow r;
        r.snapshot = {num(1), num(2), num(3), num(4), num(5), num(6), num(0)};
        const auto action = action_from_name(cells[7]);
        if (!action)
            throw Error(Errc::CorruptRecord, "report.csv line " + std::to_string(lineno) + ": bad action");
        switch (*action) {
        case Action::SetDimmer: r.decision = AdaptationDecision::set_dimmer(num(8)); break;
        case Action::AddServer: r.decision = AdaptationDecision::add_server(); break;
        case Action::RemoveServer: r.decision = AdaptationDecision::remove_server(); break;
        case Action::DoNothing: r.decision = AdaptationDecision::do_nothing(); break;
        }
        r.verdict = cells[9];
        r.utility_inc = num(10);
        report.rows.push_back(std::move(r));
    }
    return report;
}

Comparison compare(const RunReport& a, const RunReport& b)
{
    if (a.meta.trace_id != b.meta.trace_id || a.meta.seed != b.meta.seed)
        throw Error(Errc::TraceMismatch, "runs differ in trace (" + a.meta.trace_id + " vs " + b.meta.trace_id +
                                             ") or seed (" + std::to_string(a.meta.seed) + " vs " +
                                             std::to_string(b.meta.seed) + ")");
    Comparison cmp;
    cmp.a = a.totals();
    cmp.b = b.totals();
    if (cmp.b.utility != 0.0)
        cmp.ratio = cmp.a.utility / cmp.b.utility;
    else
        cmp.ratio = cmp.a.utility == 0.0 ? 1.0 : std::copysign(INFINITY, cmp.a.utility);
    return cmp;
}

std::string render_comparison(const Comparison& cmp, std::string_view name_a, std::string_view name_b)
{
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-22s %14s %14s\n", "", std::string(name_a).c_str(),
                  std::string(name_b).c_str());
    out += buf;
    const auto row = [&](const char* label, double a, double b) {
        std::snprintf(buf, sizeof buf, "%-22s %14.4f %14.4f\n", label, a, b);
        out += buf;
    };
    row("utility", cmp.a.utility, cmp.b.utility);
    row("mean rt (s)", cmp.a.mean_rt, cmp.b.mean_rt);
    row("max rt (s)", cmp.a.max_rt, cmp.b.max_rt);
    row("periods rt<=0.1s (%)", 100.0 * cmp.a.fraction_rt_ok, 100.0 * cmp.b.fraction_rt_ok);
    std::snprintf(buf, sizeof buf, "utility ratio %s/%s: %.4f\n", std::string(name_a).c_str(),
                  std::string(name_b).c_str(), cmp.ratio);
    out += buf;
    return out;
}

} // namespace msek
