#pragma once

#include "docdrift/common.hpp"
#include "docdrift/corpus.hpp"
#include "docdrift/readme.hpp"

#include <array>
#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

namespace docdrift {

/// One prompt contract. `review` is the single-pass static reviewer; the
/// agentic reviewer is split into `critique` followed by `stability`.
enum class Component { relevance, sufficiency, localisation, review, critique, stability };

inline constexpr std::array all_components { Component::relevance, Component::sufficiency,
    Component::localisation, Component::review, Component::critique, Component::stability };

std::string_view to_string(Component c);
std::optional<Component> parse_component(std::string_view name);

struct ChatRequest {
    Component component = Component::relevance;
    std::string system;
    std::string user;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string tag; // PR key; lets replay scripts address one PR
};

/// Transport-level failure. Schema problems are not backend errors.
class BackendError : public Error {
public:
    using Error::Error;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
};

/// FNV-1a 64 of system + '\0' + user, as 16 hex digits.
std::string prompt_hash(const std::string& system, const std::string& user);

/// Answers from a replay file:
///
///   { "version": 1,
///     "replies": { "<prompt hash>": "<reply>", ... },
///     "scripts": { "<repo#n or *>": { "<component>": ["<reply>", ...] } } }
///
/// A hash hit wins. Otherwise the PR's script (then the "*" script) for the
/// component is consumed in order, one cursor per (PR, component), and its
/// last entry repeats once exhausted. Anything else is a BackendError.
class ReplayBackend final : public ChatBackend {
public:
    static ReplayBackend from_json(const std::string& text);
    static ReplayBackend from_file(const std::filesystem::path& path);

    ReplayBackend(const ReplayBackend& other);
    std::string complete(const ChatRequest& request) override;

private:
    ReplayBackend() = default;

    std::map<std::string, std::string> replies_;
    std::map<std::string, std::map<Component, std::vector<std::string>>> scripts_;
    std::map<std::pair<std::string, Component>, std::size_t> cursors_;
    std::mutex mutex_;
};

/// Forwards to another backend and remembers every (hash, reply) pair so
/// a live session can be saved as a replay file.
class RecordingBackend final : public ChatBackend {
public:
    explicit RecordingBackend(ChatBackend& inner);
    std::string complete(const ChatRequest& request) override;
    std::string to_json() const;
    void save(const std::filesystem::path& path) const;

private:
    ChatBackend& inner_;
    std::map<std::string, std::string> replies_;
    mutable std::mutex mutex_;
};

/// Chat-completions endpoint: POST {base}/chat/completions. API key from
/// LLM_API_KEY.
class HttpChatBackend final : public ChatBackend {
public:
    HttpChatBackend(const std::string& base_url, std::string model);
    ~HttpChatBackend() override;
    std::string complete(const ChatRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Adapter for tests and scripted runs.
class FunctionBackend final : public ChatBackend {
public:
    explicit FunctionBackend(std::function<std::string(const ChatRequest&)> fn)
        : fn_(std::move(fn))
    {
    }
    std::string complete(const ChatRequest& request) override { return fn_(request); }

private:
    std::function<std::string(const ChatRequest&)> fn_;
};

inline constexpr int default_token_budget = 32768;

/// ceil(code points / 4).
int estimate_tokens(std::string_view text);

/// Drops the tail so that estimate_tokens(result) <= budget_tokens.
std::string truncate_to_budget(std::string_view text, int budget_tokens = default_token_budget);

/// Prompt template per component, split into system and user parts by a
/// line reading `=== user ===`. Placeholders look like `{{name}}`.
class PromptTemplates {
public:
    struct Template {
        std::string system;
        std::string user;
    };

    /// Templates compiled from the prompts/ directory at build time.
    static PromptTemplates defaults();
    /// Reads `<component>.txt` for each component from `dir`. Missing files
    /// fall back to the defaults. Throws std::invalid_argument when a file
    /// lacks a required placeholder or uses an unknown one.
    static PromptTemplates load_dir(const std::filesystem::path& dir);
    static Template parse(Component c, const std::string& text);

    const Template& get(Component c) const { return templates_.at(c); }
    static const std::vector<std::string>& required_placeholders(Component c);

private:
    std::map<Component, Template> templates_;
};

/// Replaces each `{{name}}` with values.at(name) in one pass. Inserted
/// values are not re-scanned.
std::string render_template(const std::string& text, const std::map<std::string, std::string>& values);

/// "[1] first section\n\n[2] second ..." with every section's full text.
std::string render_indexed_sections(const ReadmeDocument& doc);

struct ContextBundle {
    std::string pr_key;
    std::string title;
    std::string description;
    std::vector<std::string> commit_messages;
    std::vector<std::string> file_names;
    std::vector<std::pair<std::string, std::string>> patches; // (path, patch_text)
    std::string readme_sections;
    int section_count = 0;

    /// Metadata and README only; patches are added by retrieval.
    static ContextBundle from(const PullRequest& pr, const ReadmeDocument& doc);
};

struct C1Decision {
    bool update_required = false;
    std::string raw;
    bool abstained = false;
    int attempts = 0;
};

struct SufficiencyDecision {
    bool sufficient = false;
    std::string raw;
    bool abstained = false;
    int attempts = 0;
};

struct LocalisationResult {
    std::vector<int> ranked_indices; // distinct, 1..section_count, at most 5
    std::map<int, std::string> justifications; // one non-empty entry per index
    std::string raw;
    bool abstained = false;
    int attempts = 0;
    // "no-valid-indices" when nothing usable survived sanitisation.
    std::optional<std::string> error;

    bool valid(int section_count) const;
};

enum class Critique { correct, hallucinating, generic };
std::string_view to_string(Critique c);
std::optional<Critique> parse_critique(std::string_view text);

enum class ReviewMode { fixed, agentic };

struct ReviewVerdict {
    bool approve = false;
    std::optional<Critique> critique; // agentic mode only
    std::string raw;
    bool abstained = false;
    int attempts = 0;
};

/// Outcome of parsing one raw reply; `error` explains a schema violation.
template <class T>
struct Parsed {
    std::optional<T> value;
    std::string error;
};

Parsed<bool> parse_bool_reply(const std::string& reply, const std::string& field);
Parsed<Critique> parse_critique_reply(const std::string& reply);

/// Parses a localisation reply and sanitises it: out-of-range, duplicate and
/// unjustified indices are dropped (first occurrence and order kept), then
/// the list is cut to `top_k`. A schema violation leaves `value` empty.
Parsed<LocalisationResult> parse_localisation_reply(const std::string& reply, int section_count, int top_k = 5);

/// Body of the single fenced block in `reply`, or an explanation.
Parsed<std::string> extract_fenced_block(const std::string& reply);

struct GatewayOptions {
    int token_budget = default_token_budget;
    int max_tokens = 1024;
    int transport_retries = 2;
    int max_in_flight = 4;
    int top_k = 5;
};

struct GatewayStats {
    std::map<Component, int> calls;
    std::map<Component, int> repairs;
    std::map<Component, int> abstentions;
};

/// Component prompt contracts over a ChatBackend. Every request goes out at
/// temperature 0 and within the token budget. A reply that breaks the
/// component schema gets exactly one repair retry; a second violation
/// abstains conservatively (C1 false, C2 insufficient, C4 no-valid-indices,
/// C5 reject with a generic critique). BackendError surfaces once
/// `transport_retries` extra attempts have failed. Thread-safe.
class Gateway {
public:
    Gateway(ChatBackend& backend, GatewayOptions options = {}, PromptTemplates templates = PromptTemplates::defaults());

    C1Decision classify_relevance(const ContextBundle& bundle);
    SufficiencyDecision assess_sufficiency(const ContextBundle& bundle);
    LocalisationResult localise_and_justify(const ContextBundle& bundle);
    ReviewVerdict review_recommendation(
        const LocalisationResult& result, const ReadmeDocument& doc, const ContextBundle& bundle, ReviewMode mode);

    GatewayStats stats() const;
    const GatewayOptions& options() const { return options_; }

    /// The request the gateway would send (before any repair note).
    ChatRequest build_request(Component c, const std::map<std::string, std::string>& values, const std::string& tag) const;

private:
    template <class T>
    struct CallOutcome {
        std::optional<T> value;
        std::string raw;
        int attempts = 0;
    };

    template <class T, class ParseFn>
    CallOutcome<T> run(Component c, const std::map<std::string, std::string>& values, const std::string& tag,
        ParseFn parse);
    std::string send(const ChatRequest& request);
    void count(std::map<Component, int>& bucket, Component c);

    ChatBackend& backend_;
    GatewayOptions options_;
    PromptTemplates templates_;
    std::counting_semaphore<1024> in_flight_;
    mutable std::mutex stats_mutex_;
    GatewayStats stats_;
};

std::map<std::string, std::string> bundle_values(const ContextBundle& bundle);
std::string render_recommendation(const LocalisationResult& result, const ReadmeDocument& doc);

} // namespace docdrift
