#include "msek/synthesize.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <regex>
#include <sstream>
#include <thread>

namespace msek {

using json = nlohmann::json;

std::string_view role_name(Role r)
{
    switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    }
    return "user";
}

std::size_t estimate_tokens(std::string_view text)
{
    return (text.size() + 3) / 4;
}

std::size_t estimate_tokens(std::span<const Message> messages)
{
    std::size_t chars = 0;
    for (const auto& m : messages)
        chars += m.content.size();
    return (chars + 3) / 4;
}

namespace {

std::string render_user(const PromptTemplate& t, const ContextSnapshot& c, const std::string& history_text)
{
    const std::pair<std::string_view, std::string> values[] = {
        {"context", render_status_block(c)},
        {"actions", actions_block()},
        {"history", history_text},
    };
    return fill_placeholders(t.user_text, values);
}

std::string render_inline_history(std::span<const HistoryEntry> entries)
{
    std::string out;
    for (const auto& e : entries) {
        out += render_status_block(e.context);
        out += "Decision: " + encode_decision(e.decision) + "\n\n";
    }
    return out;
}

} // namespace

Prompt generate_prompt(const ContextSnapshot& c, const ConversationHistory& history,
                       const PromptTemplate& tmpl, std::size_t budget, std::string_view feedback)
{
    const std::pair<std::string_view, std::string> sys_values[] = {
        {"objective", tmpl.objective_text},
        {"terminologies", tmpl.terminologies},
        {"few_shot", render_few_shot(tmpl.few_shot)},
    };
    const Message system{Role::System, fill_placeholders(tmpl.system_text, sys_values)};
    const bool inline_history = tmpl.user_text.find("{history}") != std::string::npos;

    const auto build = [&](std::size_t k) {
        const auto entries = history.window(k);
        Prompt p;
        p.messages.push_back(system);
        std::string current;
        if (inline_history) {
            current = render_user(tmpl, c, render_inline_history(entries));
        } else {
            for (const auto& e : entries) {
                p.messages.push_back({Role::User, render_user(tmpl, e.context, {})});
                p.messages.push_back({Role::Assistant, encode_decision(e.decision)});
            }
            current = render_user(tmpl, c, {});
        }
        if (!feedback.empty()) {
            current += "\n";
            current += feedback;
        }
        p.messages.push_back({Role::User, std::move(current)});
        p.token_estimate = estimate_tokens(p.messages);
        p.history_entries = entries.size();
        return p;
    };

    Prompt best = build(0);
    if (best.token_estimate > budget)
        throw Error(Errc::BudgetTooSmall, "prompt without history needs " +
                                              std::to_string(best.token_estimate) + " tokens, budget is " +
                                              std::to_string(budget));
    // Size grows with k, so binary search for the longest suffix that fits.
    std::size_t lo = 0;
    std::size_t hi = history.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo + 1) / 2;
        Prompt p = build(mid);
        if (p.token_estimate <= budget) {
            lo = mid;
            best = std::move(p);
        } else {
            hi = mid - 1;
        }
    }
    if (best.history_entries != lo)
        best = build(lo);
    return best;
}

std::string_view engine_kind_name(EngineKind k)
{
    switch (k) {
    case EngineKind::HttpChat: return "http";
    case EngineKind::MockOracle: return "mock";
    case EngineKind::Replay: return "replay";
    }
    return "?";
}

void EngineConfig::validate() const
{
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw Error(Errc::InvalidConfig, "temperature must be in [0,2]");
    if (max_retries < 0)
        throw Error(Errc::InvalidConfig, "max_retries must be >= 0");
    if (!(timeout_s > 0.0))
        throw Error(Errc::InvalidConfig, "timeout must be positive");
    if (kind == EngineKind::Replay && replay_path.empty())
        throw Error(Errc::InvalidConfig, "replay engine needs a transcript path");
}

const std::vector<std::pair<std::string, EngineConfig>>& engine_profiles()
{
    static const std::vector<std::pair<std::string, EngineConfig>> profiles = [] {
        std::vector<std::pair<std::string, EngineConfig>> v;
        EngineConfig gpt4;
        gpt4.kind = EngineKind::HttpChat;
        v.emplace_back("gpt-4", gpt4);
        EngineConfig local = gpt4;
        local.endpoint = "http://127.0.0.1:8080/v1/chat/completions";
        local.model = "local";
        v.emplace_back("local", local);
        EngineConfig mock;
        mock.kind = EngineKind::MockOracle;
        v.emplace_back("mock", mock);
        return v;
    }();
    return profiles;
}

std::string MockOracleEngine::decide(const ContextSnapshot& c, double rt_threshold)
{
    constexpr double eps = 1e-9;
    const double rt = c.avg_response_time;
    const bool at_max = c.active_servers >= c.max_servers;
    if (rt > rt_threshold && !at_max)
        return "2";
    if (rt > rt_threshold && at_max && c.dimmer > 0.1 + eps)
        return encode_decision(AdaptationDecision::set_dimmer(std::max(0.0, c.dimmer - 0.1)));
    if (rt <= rt_threshold / 2 && c.dimmer < 1.0 - eps)
        return encode_decision(AdaptationDecision::set_dimmer(std::min(1.0, c.dimmer + 0.1)));
    if (rt <= rt_threshold / 2 && c.utilization < 0.4 && c.active_servers > 1)
        return "3";
    return "4";
}

std::string MockOracleEngine::complete(const Prompt& p)
{
    for (auto it = p.messages.rbegin(); it != p.messages.rend(); ++it) {
        if (it->role == Role::User)
            return decide(parse_status_block(it->content), rt_threshold_);
    }
    throw Error(Errc::ProtocolError, "prompt has no user message");
}

ReplayEngine ReplayEngine::from_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::IoError, "cannot read transcript " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        lines.push_back(unescape_transcript_line(line));
    return ReplayEngine(std::move(lines));
}

std::string ReplayEngine::complete(const Prompt&)
{
    if (next_ >= outputs_.size())
        throw Error(Errc::ReplayExhausted, "transcript has " + std::to_string(outputs_.size()) + " outputs");
    return outputs_[next_++];
}

HttpChatEngine::HttpChatEngine(EngineConfig cfg) : cfg_(std::move(cfg))
{
    cfg_.validate();
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()))
        api_key_ = key;
}

std::string HttpChatEngine::request_body(const EngineConfig& cfg, const Prompt& p)
{
    json messages = json::array();
    for (const auto& m : p.messages)
        messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    json body = {{"model", cfg.model}, {"temperature", cfg.temperature}, {"messages", std::move(messages)}};
    return body.dump();
}

std::string HttpChatEngine::complete(const Prompt& p)
{
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(cfg_.endpoint, m, url_re))
        throw Error(Errc::InvalidConfig, "bad endpoint URL '" + cfg_.endpoint + "'");
    const std::string base = m[1].str();
    const std::string path = m[2].matched ? m[2].str() : "/";

    httplib::Client client(base);
    const auto whole = static_cast<time_t>(cfg_.timeout_s);
    const auto micros = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(whole)) * 1e6);
    client.set_connection_timeout(whole, micros);
    client.set_read_timeout(whole, micros);
    client.set_write_timeout(whole, micros);

    httplib::Headers headers;
    if (!api_key_.empty())
        headers.emplace("Authorization", "Bearer " + api_key_);
    const std::string body = request_body(cfg_, p);

    httplib::Error last = httplib::Error::Success;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            const double delay = cfg_.backoff_s * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last = res.error();
            continue;
        }
        if (res->status != 200)
            throw Error(Errc::EngineHttpError, "status " + std::to_string(res->status));
        try {
            const auto j = json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw Error(Errc::EngineHttpError, std::string("unexpected response body: ") + e.what());
        }
    }
    throw Error(Errc::EngineTimeout, "no response after " + std::to_string(cfg_.max_retries + 1) +
                                         " attempts (" + httplib::to_string(last) + ")");
}

RecordingEngine::RecordingEngine(Engine& inner, const std::filesystem::path& transcript)
    : inner_(inner), out_(transcript, std::ios::trunc)
{
    if (!out_)
        throw Error(Errc::IoError, "cannot write transcript " + transcript.string());
}

std::string RecordingEngine::complete(const Prompt& p)
{
    auto text = inner_.complete(p);
    out_ << escape_transcript_line(text) << '\n';
    out_.flush();
    return text;
}

std::unique_ptr<Engine> make_engine(const EngineConfig& cfg)
{
    cfg.validate();
    switch (cfg.kind) {
    case EngineKind::HttpChat: return std::make_unique<HttpChatEngine>(cfg);
    case EngineKind::MockOracle: return std::make_unique<MockOracleEngine>(cfg.rt_threshold);
    case EngineKind::Replay: return std::make_unique<ReplayEngine>(ReplayEngine::from_file(cfg.replay_path));
    }
    throw Error(Errc::InvalidConfig, "unknown engine kind");
}

std::string escape_transcript_line(std::string_view raw)
{
    std::string out;
    out.reserve(raw.size());
    for (char ch : raw) {
        switch (ch) {
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        default: out += ch;
        }
    }
    return out;
}

std::string unescape_transcript_line(std::string_view line)
{
    std::string out;
    out.reserve(line.size());
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && i + 1 < line.size()) {
            const char n = line[++i];
            out += n == 'n' ? '\n' : n == 'r' ? '\r' : n;
        } else {
            out += line[i];
        }
    }
    return out;
}

AdaptationDecision parse_response(std::string_view raw, ParseMode mode)
{
    if (mode == ParseMode::Strict) {
        auto d = decode_decision(trim(raw));
        d.with_raw_text(std::string(raw));
        return d;
    }

    // The id must be a standalone token (markdown emphasis and brackets are
    // tolerated); a following number is its argument.
    static const std::regex decision_re(
        R"((?:^|[\s*_`(\["'])([1-4])(?:[ \t]+([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?))?(?=$|[\s.,;:!?)\]"'`*]))");
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        auto nl = raw.find('\n', pos);
        if (nl == std::string_view::npos)
            nl = raw.size();
        const std::string line(raw.substr(pos, nl - pos));
        pos = nl + 1;
        std::smatch m;
        if (std::regex_search(line, m, decision_re)) {
            std::string text = m[1].str();
            if (m[2].matched)
                text += " " + m[2].str();
            auto d = decode_decision(text);
            d.with_raw_text(std::string(raw));
            return d;
        }
    }
    throw Error(Errc::NoDecisionFound, "no action id in engine output");
}

} // namespace msek
