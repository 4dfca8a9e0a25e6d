#pragma once

#include "msek/config.hpp"
#include "msek/core.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msek {

struct HistoryEntry {
    ContextSnapshot context;
    AdaptationDecision decision;

    // Unlike AdaptationDecision::operator==, raw text must match too.
    bool operator==(const HistoryEntry& o) const
    {
        return context == o.context && decision == o.decision &&
               decision.raw_text() == o.decision.raw_text();
    }
};

// Ordered (context, decision) pairs, one per control-loop iteration.
class ConversationHistory {
public:
    // Throws Errc::OutOfOrderSnapshot unless c.sim_time is strictly later
    // than the last entry's.
    void append(const ContextSnapshot& c, const AdaptationDecision& ad);

    // The min(k, size()) most recent entries, oldest first.
    std::span<const HistoryEntry> window(std::size_t k) const;

    std::span<const HistoryEntry> entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    bool operator==(const ConversationHistory&) const = default;

private:
    std::vector<HistoryEntry> entries_;
};

// One JSON object per line.
std::string history_record(const HistoryEntry& e);
// Throws Errc::CorruptRecord naming `lineno`.
HistoryEntry parse_history_record(std::string_view line, std::size_t lineno);

void save_history(const std::filesystem::path& path, const ConversationHistory& h);
ConversationHistory load_history(const std::filesystem::path& path);

// Append-only writer for history.jsonl; every append is flushed.
class HistoryStore {
public:
    explicit HistoryStore(const std::filesystem::path& path);

    void append(const HistoryEntry& e);
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

// Instructions and exemplars that frame every prompt. The system text may use
// {objective}, {terminologies} and {few_shot}; the user text {context},
// {actions} and, optionally, {history}.
struct PromptTemplate {
    std::string system_text;
    std::string user_text;
    std::string objective_text;
    std::string terminologies;
    std::vector<HistoryEntry> few_shot;

    static PromptTemplate builtin(const Objective& objective);

    // Reads system.txt, user.txt, terminologies.txt and few_shot.jsonl from
    // `dir`; missing files fall back to the built-in text.
    static PromptTemplate load(const std::filesystem::path& dir, const Objective& objective);

    // Writes the four files read by load().
    void save(const std::filesystem::path& dir) const;
};

std::string actions_block();
std::string render_few_shot(std::span<const HistoryEntry> examples);

// Replaces every "{name}" with its value; unknown placeholders stay as is.
std::string fill_placeholders(std::string_view text,
                              std::span<const std::pair<std::string_view, std::string>> values);

// Central store shared by the loop stages.
class Knowledge {
public:
    Knowledge(SystemConfig config, PromptTemplate prompts);

    // Attach persistence; each record() is then written before it returns.
    void persist_to(const std::filesystem::path& history_path);

    // Monitor ingest. Throws Errc::OutOfOrderSnapshot.
    void observe(const ContextSnapshot& c);

    // Appends (c, ad) to the conversation history.
    void record(const ContextSnapshot& c, const AdaptationDecision& ad);

    void ingest_log(std::string line) { logs_.push_back(std::move(line)); }

    const SystemConfig& config() const noexcept { return config_; }
    const PromptTemplate& prompts() const noexcept { return prompts_; }
    const ConversationHistory& history() const noexcept { return history_; }
    const std::vector<ContextSnapshot>& observations() const noexcept { return observations_; }
    const std::vector<std::string>& logs() const noexcept { return logs_; }

private:
    SystemConfig config_;
    PromptTemplate prompts_;
    ConversationHistory history_;
    std::vector<ContextSnapshot> observations_;
    std::vector<std::string> logs_;
    std::optional<HistoryStore> store_;
};

} // namespace msek
