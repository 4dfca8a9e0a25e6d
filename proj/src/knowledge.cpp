#include "msek/knowledge.hpp"

#include <json.hpp>

#include <sstream>

namespace msek {

using json = nlohmann::json;

void ConversationHistory::append(const ContextSnapshot& c, const AdaptationDecision& ad)
{
    if (!entries_.empty() && !(c.sim_time > entries_.back().context.sim_time))
        throw Error(Errc::OutOfOrderSnapshot, "snapshot at t=" + format_number(c.sim_time) +
                                                  " is not after t=" +
                                                  format_number(entries_.back().context.sim_time));
    entries_.push_back({c, ad});
}

std::span<const HistoryEntry> ConversationHistory::window(std::size_t k) const
{
    const auto n = std::min(k, entries_.size());
    return std::span<const HistoryEntry>(entries_).last(n);
}

std::string history_record(const HistoryEntry& e)
{
    const auto& c = e.context;
    json j;
    j["context"] = {
        {"dimmer", c.dimmer},
        {"active_servers", c.active_servers},
        {"max_servers", c.max_servers},
        {"utilization", c.utilization},
        {"avg_response_time", c.avg_response_time},
        {"arrival_rate", c.arrival_rate},
        {"time", c.sim_time},
    };
    json d = {{"action", static_cast<int>(e.decision.action())}, {"raw", e.decision.raw_text()}};
    if (e.decision.argument())
        d["arg"] = *e.decision.argument();
    j["decision"] = std::move(d);
    return j.dump();
}

HistoryEntry parse_history_record(std::string_view line, std::size_t lineno)
{
    const auto corrupt = [lineno](const std::string& why) {
        return Error(Errc::CorruptRecord, "line " + std::to_string(lineno) + ": " + why);
    };
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw corrupt(e.what());
    }
    try {
        HistoryEntry e;
        const auto& c = j.at("context");
        e.context.dimmer = c.at("dimmer").get<double>();
        e.context.active_servers = c.at("active_servers").get<double>();
        e.context.max_servers = c.at("max_servers").get<double>();
        e.context.utilization = c.at("utilization").get<double>();
        e.context.avg_response_time = c.at("avg_response_time").get<double>();
        e.context.arrival_rate = c.at("arrival_rate").get<double>();
        e.context.sim_time = c.at("time").get<double>();

        const auto& d = j.at("decision");
        const int id = d.at("action").get<int>();
        const bool has_arg = d.contains("arg");
        switch (id) {
        case 1: {
            if (!has_arg)
                throw corrupt("set dimmer without arg");
            const double v = d.at("arg").get<double>();
            if (!(v >= 0.0 && v <= 1.0))
                throw corrupt("dimmer arg outside [0,1]");
            e.decision = AdaptationDecision::set_dimmer(v);
            break;
        }
        case 2: e.decision = AdaptationDecision::add_server(); break;
        case 3: e.decision = AdaptationDecision::remove_server(); break;
        case 4: e.decision = AdaptationDecision::do_nothing(); break;
        default: throw corrupt("action id outside 1..4");
        }
        if (id != 1 && has_arg)
            throw corrupt("arg given for an action without one");
        e.decision.with_raw_text(d.at("raw").get<std::string>());
        return e;
    } catch (const json::exception& ex) {
        throw corrupt(ex.what());
    }
}

void save_history(const std::filesystem::path& path, const ConversationHistory& h)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(Errc::IoError, "cannot write " + path.string());
    for (const auto& e : h.entries())
        out << history_record(e) << '\n';
    if (!out.flush())
        throw Error(Errc::IoError, "write failed for " + path.string());
}

ConversationHistory load_history(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::IoError, "cannot read " + path.string());
    ConversationHistory h;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        auto e = parse_history_record(line, lineno);
        try {
            h.append(e.context, e.decision);
        } catch (const Error&) {
            throw Error(Errc::CorruptRecord, "line " + std::to_string(lineno) + ": out of order");
        }
    }
    return h;
}

HistoryStore::HistoryStore(const std::filesystem::path& path) : path_(path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::trunc);
    if (!out_)
        throw Error(Errc::IoError, "cannot open " + path.string());
}

void HistoryStore::append(const HistoryEntry& e)
{
    out_ << history_record(e) << '\n';
    if (!out_.flush())
        throw Error(Errc::IoError, "write failed for " + path_.string());
}

namespace {

constexpr std::string_view builtin_system = R"(You manage a web server system. Each control period you get its current status and decide whether to adapt it.

Objective:
{objective}

Terminology:
{terminologies}

Examples:
{few_shot}
Reply with one action number. Action 1 also takes the new dimmer value in [0, 1], e.g. "1 0.6".
)";

constexpr std::string_view builtin_user = "{context}\n{actions}";

constexpr std::string_view builtin_terminologies =
    R"(- dimmer: share of requests served with optional content, which earns more but is slower.
- active_servers: running plus booting servers. New servers boot before taking requests.
- max_servers: server limit.
- utilization: busy fraction of running servers last period.
- avg_response_time: mean seconds per request completed last period.
- arrival_rate: requests per second last period.
- time: seconds since start.
)";

std::vector<HistoryEntry> builtin_few_shot()
{
    // Ordered by time so the file form loads as a valid history.
    std::vector<HistoryEntry> ex(3);
    ex[0].context = {1.0, 3.0, 3.0, 0.18, 0.052, 8.2, 600.0};
    ex[0].decision = AdaptationDecision::remove_server().with_raw_text("3");
    ex[1].context = {0.9, 1.0, 3.0, 0.97, 0.84, 21.5, 1200.0};
    ex[1].decision = AdaptationDecision::add_server().with_raw_text("2");
    ex[2].context = {0.8, 3.0, 3.0, 0.95, 0.62, 58.3, 3400.0};
    ex[2].decision = AdaptationDecision::set_dimmer(0.5).with_raw_text("1 0.5");
    return ex;
}

std::string read_file_or(const std::filesystem::path& path, std::string_view fallback)
{
    std::ifstream in(path);
    if (!in)
        return std::string(fallback);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view text)
{
    std::ofstream out(path, std::ios::trunc);
    out << text;
    if (!out.flush())
        throw Error(Errc::IoError, "cannot write " + path.string());
}

} // namespace

std::string actions_block()
{
    return "Actions you can take:\n"
           "1. Set Dimmer (A1)\n"
           "2. Add Server (A2)\n"
           "3. Remove Server (A3)\n"
           "4. Do Nothing (A4)\n";
}

std::string render_few_shot(std::span<const HistoryEntry> examples)
{
    std::string out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        out += "Example " + std::to_string(i + 1) + ":\n";
        out += render_status_block(examples[i].context);
        out += "Decision: " + encode_decision(examples[i].decision) + "\n\n";
    }
    return out;
}

std::string fill_placeholders(std::string_view text,
                              std::span<const std::pair<std::string_view, std::string>> values)
{
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            const auto close = text.find('}', i);
            if (close != std::string_view::npos) {
                const auto name = text.substr(i + 1, close - i - 1);
                bool replaced = false;
                for (const auto& [key, value] : values) {
                    if (key == name) {
                        out += value;
                        replaced = true;
                        break;
                    }
                }
                if (replaced) {
                    i = close + 1;
                    continue;
                }
            }
        }
        out += text[i++];
    }
    return out;
}

PromptTemplate PromptTemplate::builtin(const Objective& objective)
{
    PromptTemplate t;
    t.system_text = std::string(builtin_system);
    t.user_text = std::string(builtin_user);
    t.objective_text = objective.render();
    t.terminologies = std::string(builtin_terminologies);
    t.few_shot = builtin_few_shot();
    return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& dir, const Objective& objective)
{
    PromptTemplate t = builtin(objective);
    t.system_text = read_file_or(dir / "system.txt", t.system_text);
    t.user_text = read_file_or(dir / "user.txt", t.user_text);
    t.terminologies = read_file_or(dir / "terminologies.txt", t.terminologies);
    if (std::filesystem::exists(dir / "few_shot.jsonl")) {
        const auto h = load_history(dir / "few_shot.jsonl");
        t.few_shot.assign(h.entries().begin(), h.entries().end());
    }
    return t;
}

void PromptTemplate::save(const std::filesystem::path& dir) const
{
    std::filesystem::create_directories(dir);
    write_file(dir / "system.txt", system_text);
    write_file(dir / "user.txt", user_text);
    write_file(dir / "terminologies.txt", terminologies);
    std::string lines;
    for (const auto& e : few_shot)
        lines += history_record(e) + "\n";
    write_file(dir / "few_shot.jsonl", lines);
}

Knowledge::Knowledge(SystemConfig config, PromptTemplate prompts)
    : config_(config), prompts_(std::move(prompts))
{
}

void Knowledge::persist_to(const std::filesystem::path& history_path)
{
    store_.emplace(history_path);
    for (const auto& e : history_.entries())
        store_->append(e);
}

void Knowledge::observe(const ContextSnapshot& c)
{
    if (!observations_.empty() && !(c.sim_time > observations_.back().sim_time))
        throw Error(Errc::OutOfOrderSnapshot, "observation at t=" + format_number(c.sim_time) +
                                                  " does not advance time");
    observations_.push_back(c);
}

void Knowledge::record(const ContextSnapshot& c, const AdaptationDecision& ad)
{
    history_.append(c, ad);
    if (store_)
        store_->append(history_.entries().back());
}

} // namespace msek
