#pragma once

#include "msek/knowledge.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace msek {

enum class Role { System, User, Assistant };

std::string_view role_name(Role r);

struct Message {
    Role role = Role::User;
    std::string content;

    bool operator==(const Message&) const = default;
};

struct Prompt {
    std::vector<Message> messages;
    std::size_t token_estimate = 0;
    std::size_t history_entries = 0; // how many history pairs made it in
};

// ceil(characters / 4).
std::size_t estimate_tokens(std::string_view text);
std::size_t estimate_tokens(std::span<const Message> messages);

// Builds [system] ++ history pairs ++ [user(current context)], keeping the
// longest suffix of `history` that fits `budget`. `feedback`, when non-empty,
// is appended to the final user message. Throws Errc::BudgetTooSmall.
Prompt generate_prompt(const ContextSnapshot& c, const ConversationHistory& history,
                       const PromptTemplate& tmpl, std::size_t budget, std::string_view feedback = {});

enum class EngineKind { HttpChat, MockOracle, Replay };

std::string_view engine_kind_name(EngineKind k);

struct EngineConfig {
    EngineKind kind = EngineKind::MockOracle;
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4";
    double temperature = 0.0;
    double timeout_s = 60.0;
    int max_retries = 2;
    double backoff_s = 1.0;           // first retry delay; doubles each retry
    std::string api_key_env = "MSEK_API_KEY";
    std::filesystem::path replay_path;
    double rt_threshold = 0.1;        // used by MockOracle

    // Throws Errc::InvalidConfig.
    void validate() const;
};

// Named engine setups the loop can be pointed at.
const std::vector<std::pair<std::string, EngineConfig>>& engine_profiles();

class Engine {
public:
    virtual ~Engine() = default;
    virtual EngineKind kind() const = 0;

    // Returns the raw completion text for `p`.
    virtual std::string complete(const Prompt& p) = 0;
};

// Deterministic rule policy standing in for the LLM. It reads the status
// block of the last user message, so it sees exactly what an LLM would.
class MockOracleEngine final : public Engine {
public:
    explicit MockOracleEngine(double rt_threshold) : rt_threshold_(rt_threshold) {}

    EngineKind kind() const override { return EngineKind::MockOracle; }
    std::string complete(const Prompt& p) override;

    static std::string decide(const ContextSnapshot& c, double rt_threshold);

private:
    double rt_threshold_;
};

// Replays recorded outputs in order; throws Errc::ReplayExhausted past the end.
class ReplayEngine final : public Engine {
public:
    explicit ReplayEngine(std::vector<std::string> outputs) : outputs_(std::move(outputs)) {}
    static ReplayEngine from_file(const std::filesystem::path& path);

    EngineKind kind() const override { return EngineKind::Replay; }
    std::string complete(const Prompt& p) override;

    std::size_t remaining() const noexcept { return outputs_.size() - next_; }

private:
    std::vector<std::string> outputs_;
    std::size_t next_ = 0;
};

// OpenAI-style chat-completion client.
class HttpChatEngine final : public Engine {
public:
    explicit HttpChatEngine(EngineConfig cfg);

    EngineKind kind() const override { return EngineKind::HttpChat; }
    std::string complete(const Prompt& p) override;

    static std::string request_body(const EngineConfig& cfg, const Prompt& p);

private:
    EngineConfig cfg_;
    std::string api_key_;
};

// Writes every output of `inner` to a transcript, one escaped line each.
class RecordingEngine final : public Engine {
public:
    RecordingEngine(Engine& inner, const std::filesystem::path& transcript);

    EngineKind kind() const override { return inner_.kind(); }
    std::string complete(const Prompt& p) override;

private:
    Engine& inner_;
    std::ofstream out_;
};

std::unique_ptr<Engine> make_engine(const EngineConfig& cfg);

// Transcript lines escape '\\', '\n' and '\r'.
std::string escape_transcript_line(std::string_view raw);
std::string unescape_transcript_line(std::string_view line);

enum class ParseMode { Lenient, Strict };

// Lenient mode takes the first "<1-4>[ <number>]" token group on any line;
// strict mode requires the whole trimmed text to be one decision.
// Throws Errc::NoDecisionFound or any decode_decision error.
AdaptationDecision parse_response(std::string_view raw, ParseMode mode = ParseMode::Lenient);

} // namespace msek
