#include "docdrift/gateway.hpp"

#include "docdrift/http.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace docdrift {

using nlohmann::json;

namespace {

#include "prompts_embedded.inc"

constexpr std::string_view user_separator = "=== user ===";

const std::set<std::string>& known_placeholders()
{
    static const std::set<std::string> names { "title", "description", "commit_messages", "file_names", "patches",
        "readme_sections", "recommendation" };
    return names;
}

std::vector<std::string> placeholders_in(const std::string& text)
{
    std::vector<std::string> names;
    std::size_t pos = 0;
    while ((pos = text.find("{{", pos)) != std::string::npos) {
        auto end = text.find("}}", pos + 2);
        if (end == std::string::npos)
            break;
        names.push_back(text.substr(pos + 2, end - pos - 2));
        pos = end + 2;
    }
    return names;
}

std::string bullet_list(const std::vector<std::string>& items)
{
    if (items.empty())
        return "(none)";
    std::string out;
    for (const auto& item : items) {
        if (!out.empty())
            out += '\n';
        out += "- " + std::string(trim(item));
    }
    return out;
}

std::string render_patches(const std::vector<std::pair<std::string, std::string>>& patches)
{
    if (patches.empty())
        return "(none retrieved)";
    std::string out;
    for (const auto& [path, text] : patches) {
        if (!out.empty())
            out += "\n\n";
        out += "--- " + path + "\n" + (text.empty() ? std::string("(binary or empty patch)") : text);
    }
    return out;
}

std::string repair_note(Component c, const std::string& problem)
{
    static const std::map<Component, std::string> shapes {
        { Component::relevance, R"({"update_required": true})" },
        { Component::sufficiency, R"({"sufficient": false})" },
        { Component::localisation, R"({"ranked_indices": [3], "justifications": {"3": "..."}})" },
        { Component::review, R"({"approve": false})" },
        { Component::critique, R"({"critique": "correct"})" },
        { Component::stability, R"({"approve": true})" },
    };
    return "Your previous reply could not be used: " + problem
        + ". Reply again with exactly one fenced JSON object of the form\n```json\n" + shapes.at(c) + "\n```";
}

void fit_to_budget(ChatRequest& request, int budget)
{
    int system_tokens = estimate_tokens(request.system);
    if (system_tokens >= budget) {
        request.system = truncate_to_budget(request.system, budget);
        request.user.clear();
        return;
    }
    request.user = truncate_to_budget(request.user, budget - system_tokens);
}

std::optional<json> fenced_object(const std::string& reply, std::string& error)
{
    auto block = extract_fenced_block(reply);
    if (!block.value) {
        error = block.error;
        return std::nullopt;
    }
    json j = json::parse(*block.value, nullptr, false);
    if (j.is_discarded()) {
        error = "the fenced block is not valid JSON";
        return std::nullopt;
    }
    if (!j.is_object()) {
        error = "the fenced block is not a JSON object";
        return std::nullopt;
    }
    return j;
}

} // namespace

std::string_view to_string(Component c)
{
    switch (c) {
    case Component::relevance:
        return "relevance";
    case Component::sufficiency:
        return "sufficiency";
    case Component::localisation:
        return "localisation";
    case Component::review:
        return "review";
    case Component::critique:
        return "critique";
    case Component::stability:
        return "stability";
    }
    return "unknown";
}

std::optional<Component> parse_component(std::string_view name)
{
    for (Component c : all_components)
        if (to_string(c) == name)
            return c;
    return std::nullopt;
}

std::string_view to_string(Critique c)
{
    switch (c) {
    case Critique::correct:
        return "correct";
    case Critique::hallucinating:
        return "hallucinating";
    case Critique::generic:
        return "generic";
    }
    return "unknown";
}

std::optional<Critique> parse_critique(std::string_view text)
{
    std::string t = to_lower(trim(text));
    if (t == "correct")
        return Critique::correct;
    if (t == "hallucinating")
        return Critique::hallucinating;
    if (t == "generic")
        return Critique::generic;
    return std::nullopt;
}

std::string prompt_hash(const std::string& system, const std::string& user)
{
    std::string key = system;
    key.push_back('\0');
    key += user;
    return to_hex(fnv1a64(key));
}

// ---------------------------------------------------------------- backends

ReplayBackend::ReplayBackend(const ReplayBackend& other)
{
    std::lock_guard lock(const_cast<std::mutex&>(other.mutex_));
    replies_ = other.replies_;
    scripts_ = other.scripts_;
    cursors_ = other.cursors_;
}

ReplayBackend ReplayBackend::from_json(const std::string& text)
{
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw std::invalid_argument("replay file is not a JSON object");
    ReplayBackend backend;
    if (auto it = j.find("replies"); it != j.end()) {
        if (!it->is_object())
            throw std::invalid_argument("replay 'replies' must be an object");
        for (const auto& [hash, reply] : it->items()) {
            if (!reply.is_string())
                throw std::invalid_argument("replay reply for " + hash + " must be a string");
            backend.replies_[hash] = reply.get<std::string>();
        }
    }
    if (auto it = j.find("scripts"); it != j.end()) {
        if (!it->is_object())
            throw std::invalid_argument("replay 'scripts' must be an object");
        for (const auto& [target, per_component] : it->items()) {
            if (!per_component.is_object())
                throw std::invalid_argument("replay script for " + target + " must be an object");
            for (const auto& [name, list] : per_component.items()) {
                auto c = parse_component(name);
                if (!c)
                    throw std::invalid_argument("replay script names unknown component '" + name + "'");
                if (!list.is_array())
                    throw std::invalid_argument("replay script " + target + "/" + name + " must be an array");
                auto& entries = backend.scripts_[target][*c];
                for (const auto& reply : list) {
                    if (!reply.is_string())
                        throw std::invalid_argument("replay script entries must be strings");
                    entries.push_back(reply.get<std::string>());
                }
            }
        }
    }
    return backend;
}

ReplayBackend ReplayBackend::from_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot read replay file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::string ReplayBackend::complete(const ChatRequest& request)
{
    std::lock_guard lock(mutex_);
    if (auto it = replies_.find(prompt_hash(request.system, request.user)); it != replies_.end())
        return it->second;
    for (const std::string& target : { request.tag, std::string("*") }) {
        auto script = scripts_.find(target);
        if (script == scripts_.end())
            continue;
        auto list = script->second.find(request.component);
        if (list == script->second.end() || list->second.empty())
            continue;
        std::size_t& cursor = cursors_[{ request.tag, request.component }];
        const auto& entries = list->second;
        return entries[std::min(cursor++, entries.size() - 1)];
    }
    throw BackendError("replay has no reply for " + std::string(to_string(request.component)) + " on '" + request.tag
        + "' (prompt hash " + prompt_hash(request.system, request.user) + ")");
}

RecordingBackend::RecordingBackend(ChatBackend& inner)
    : inner_(inner)
{
}

std::string RecordingBackend::complete(const ChatRequest& request)
{
    std::string reply = inner_.complete(request);
    std::lock_guard lock(mutex_);
    replies_[prompt_hash(request.system, request.user)] = reply;
    return reply;
}

std::string RecordingBackend::to_json() const
{
    std::lock_guard lock(mutex_);
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["replies"] = nlohmann::ordered_json::object();
    for (const auto& [hash, reply] : replies_)
        j["replies"][hash] = reply;
    return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

void RecordingBackend::save(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write replay file " + path.string());
    out << to_json();
}

struct HttpChatBackend::Impl {
    std::string base_url;
    std::string model;
    std::optional<std::string> api_key;
};

HttpChatBackend::HttpChatBackend(const std::string& base_url, std::string model)
    : impl_(std::make_unique<Impl>(Impl { base_url, std::move(model), std::nullopt }))
{
    if (const char* key = std::getenv("LLM_API_KEY"); key && *key)
        impl_->api_key = key;
}

HttpChatBackend::~HttpChatBackend() = default;

std::string HttpChatBackend::complete(const ChatRequest& request)
{
    json body {
        { "model", impl_->model },
        { "messages",
            json::array({ { { "role", "system" }, { "content", request.system } },
                { { "role", "user" }, { "content", request.user } } }) },
        { "temperature", request.temperature },
        { "max_tokens", request.max_tokens },
    };
    HttpHeaders headers;
    if (impl_->api_key)
        headers.emplace_back("Authorization", "Bearer " + *impl_->api_key);
    // One client per call keeps concurrent requests independent.
    HttpClient http(impl_->base_url, std::chrono::seconds(300));
    auto res = http.post("/chat/completions", body.dump(-1, ' ', false, json::error_handler_t::replace),
        "application/json", headers);
    if (!res)
        throw BackendError("chat backend unreachable: " + http.last_error());
    if (res->status != 200)
        throw BackendError("chat backend returned status " + std::to_string(res->status));
    json reply = json::parse(res->body, nullptr, false);
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw BackendError("chat backend response has no message content");
    }
}

// ------------------------------------------------------------ token budget

int estimate_tokens(std::string_view text)
{
    return static_cast<int>((utf8_length(text) + 3) / 4);
}

std::string truncate_to_budget(std::string_view text, int budget_tokens)
{
    if (budget_tokens <= 0)
        return {};
    if (estimate_tokens(text) <= budget_tokens)
        return std::string(text);
    return std::string(utf8_prefix(text, static_cast<std::size_t>(budget_tokens) * 4));
}

// --------------------------------------------------------------- templates

const std::vector<std::string>& PromptTemplates::required_placeholders(Component c)
{
    static const std::map<Component, std::vector<std::string>> required {
        { Component::relevance, { "title", "description", "commit_messages", "file_names", "readme_sections" } },
        { Component::sufficiency, { "title", "description", "commit_messages", "readme_sections", "patches" } },
        { Component::localisation, { "title", "description", "readme_sections", "patches" } },
        { Component::review, { "readme_sections", "recommendation", "patches" } },
        { Component::critique, { "readme_sections", "recommendation", "patches" } },
        { Component::stability, { "readme_sections", "recommendation" } },
    };
    return required.at(c);
}

PromptTemplates::Template PromptTemplates::parse(Component c, const std::string& text)
{
    auto lines = split_lines(text);
    auto sep = std::find_if(
        lines.begin(), lines.end(), [](const std::string& l) { return trim(l) == user_separator; });
    if (sep == lines.end())
        throw std::invalid_argument(
            std::string(to_string(c)) + " template lacks the '" + std::string(user_separator) + "' line");
    auto join = [](auto first, auto last) {
        std::string out;
        for (auto it = first; it != last; ++it) {
            if (it != first)
                out += '\n';
            out += *it;
        }
        return std::string(trim(out));
    };
    Template t { join(lines.begin(), sep), join(sep + 1, lines.end()) };

    std::set<std::string> used;
    for (const auto* part : { &t.system, &t.user })
        for (auto& name : placeholders_in(*part)) {
            if (!known_placeholders().contains(name))
                throw std::invalid_argument(
                    std::string(to_string(c)) + " template uses unknown placeholder {{" + name + "}}");
            used.insert(name);
        }
    for (const auto& name : required_placeholders(c))
        if (!used.contains(name))
            throw std::invalid_argument(
                std::string(to_string(c)) + " template is missing placeholder {{" + name + "}}");
    return t;
}

PromptTemplates PromptTemplates::defaults()
{
    PromptTemplates out;
    for (const auto& [name, text] : embedded_prompts)
        out.templates_[*parse_component(name)] = parse(*parse_component(name), text);
    return out;
}

PromptTemplates PromptTemplates::load_dir(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir))
        throw std::invalid_argument("prompt directory not found: " + dir.string());
    PromptTemplates out = defaults();
    for (Component c : all_components) {
        auto file = dir / (std::string(to_string(c)) + ".txt");
        std::ifstream in(file);
        if (!in)
            continue;
        std::stringstream buf;
        buf << in.rdbuf();
        out.templates_[c] = parse(c, buf.str());
    }
    return out;
}

std::string render_template(const std::string& text, const std::map<std::string, std::string>& values)
{
    std::string out;
    std::size_t pos = 0;
    while (true) {
        auto open = text.find("{{", pos);
        auto close = open == std::string::npos ? std::string::npos : text.find("}}", open + 2);
        if (close == std::string::npos) {
            out.append(text, pos, std::string::npos);
            return out;
        }
        out.append(text, pos, open - pos);
        std::string name = text.substr(open + 2, close - open - 2);
        auto it = values.find(name);
        if (it == values.end())
            throw std::invalid_argument("no value for placeholder {{" + name + "}}");
        out += it->second;
        pos = close + 2;
    }
}

std::string render_indexed_sections(const ReadmeDocument& doc)
{
    if (doc.section_count() == 0)
        return "(empty README)";
    std::string out;
    for (const auto& s : doc.sections()) {
        if (!out.empty())
            out += "\n\n";
        out += "[" + std::to_string(s.index) + "] " + s.text;
    }
    return out;
}

ContextBundle ContextBundle::from(const PullRequest& pr, const ReadmeDocument& doc)
{
    ContextBundle b;
    b.pr_key = pr.key().str();
    b.title = pr.title;
    b.description = pr.description;
    for (const auto& c : pr.commits)
        b.commit_messages.push_back(c.message);
    for (const auto& f : pr.files)
        b.file_names.push_back(f.path);
    b.readme_sections = render_indexed_sections(doc);
    b.section_count = doc.section_count();
    return b;
}

std::map<std::string, std::string> bundle_values(const ContextBundle& bundle)
{
    return {
        { "title", bundle.title },
        { "description", bundle.description.empty() ? std::string("(no description)") : bundle.description },
        { "commit_messages", bullet_list(bundle.commit_messages) },
        { "file_names", bullet_list(bundle.file_names) },
        { "patches", render_patches(bundle.patches) },
        { "readme_sections", bundle.readme_sections },
        { "recommendation", "" },
    };
}

std::string render_recommendation(const LocalisationResult& result, const ReadmeDocument& doc)
{
    std::string out;
    for (int idx : result.ranked_indices) {
        std::string first_line;
        if (doc.has_section(idx)) {
            const std::string& text = doc.section(idx).text;
            first_line = text.substr(0, text.find('\n'));
        }
        auto j = result.justifications.find(idx);
        out += "Section [" + std::to_string(idx) + "]: " + first_line + "\n";
        out += "Justification: " + (j == result.justifications.end() ? std::string() : j->second) + "\n";
    }
    return out;
}

// ----------------------------------------------------------------- parsing

Parsed<std::string> extract_fenced_block(const std::string& reply)
{
    auto lines = split_lines(reply);
    int blocks = 0;
    bool open = false;
    std::string body;
    std::string current;
    for (const auto& raw : lines) {
        auto line = trim(raw);
        bool fence = line.starts_with("```");
        if (!open && fence) {
            open = true;
            current.clear();
            continue;
        }
        if (open && fence && trim(line.substr(3)).empty()) {
            open = false;
            ++blocks;
            body = current;
            continue;
        }
        if (open) {
            current += raw;
            current += '\n';
        }
    }
    if (open)
        return { std::nullopt, "the fenced block is not closed" };
    if (blocks == 0)
        return { std::nullopt, "the reply contains no fenced block" };
    if (blocks > 1)
        return { std::nullopt, "the reply contains more than one fenced block" };
    return { body, {} };
}

Parsed<bool> parse_bool_reply(const std::string& reply, const std::string& field)
{
    std::string error;
    auto j = fenced_object(reply, error);
    if (!j)
        return { std::nullopt, error };
    auto it = j->find(field);
    if (it == j->end())
        return { std::nullopt, "field '" + field + "' is missing" };
    if (!it->is_boolean())
        return { std::nullopt, "field '" + field + "' must be true or false" };
    return { it->get<bool>(), {} };
}

Parsed<Critique> parse_critique_reply(const std::string& reply)
{
    std::string error;
    auto j = fenced_object(reply, error);
    if (!j)
        return { std::nullopt, error };
    auto it = j->find("critique");
    if (it == j->end() || !it->is_string())
        return { std::nullopt, "field 'critique' must be a string" };
    auto c = parse_critique(it->get<std::string>());
    if (!c)
        return { std::nullopt, "field 'critique' must be one of correct, hallucinating, generic" };
    return { *c, {} };
}

Parsed<LocalisationResult> parse_localisation_reply(const std::string& reply, int section_count, int top_k)
{
    std::string error;
    auto j = fenced_object(reply, error);
    if (!j)
        return { std::nullopt, error };
    auto idx = j->find("ranked_indices");
    if (idx == j->end() || !idx->is_array())
        return { std::nullopt, "field 'ranked_indices' must be an array" };
    auto just = j->find("justifications");
    if (just == j->end() || !just->is_object())
        return { std::nullopt, "field 'justifications' must be an object keyed by index" };
    for (const auto& v : *idx)
        if (!v.is_number_integer())
            return { std::nullopt, "every entry of 'ranked_indices' must be an integer" };

    LocalisationResult r;
    r.raw = reply;
    for (const auto& v : *idx) {
        if (static_cast<int>(r.ranked_indices.size()) >= top_k)
            break;
        auto value = v.get<std::int64_t>();
        if (value < 1 || value > section_count)
            continue;
        int i = static_cast<int>(value);
        if (std::find(r.ranked_indices.begin(), r.ranked_indices.end(), i) != r.ranked_indices.end())
            continue;
        auto text = just->find(std::to_string(i));
        if (text == just->end() || !text->is_string() || is_blank(text->get<std::string>()))
            continue;
        r.ranked_indices.push_back(i);
        r.justifications[i] = std::string(trim(text->get<std::string>()));
    }
    if (r.ranked_indices.empty())
        r.error = "no-valid-indices";
    return { std::move(r), {} };
}

bool LocalisationResult::valid(int section_count) const
{
    if (ranked_indices.size() > 5 || justifications.size() != ranked_indices.size())
        return false;
    std::set<int> seen;
    for (int i : ranked_indices) {
        if (i < 1 || i > section_count || !seen.insert(i).second)
            return false;
        auto j = justifications.find(i);
        if (j == justifications.end() || is_blank(j->second))
            return false;
    }
    return true;
}

// ----------------------------------------------------------------- gateway

Gateway::Gateway(ChatBackend& backend, GatewayOptions options, PromptTemplates templates)
    : backend_(backend)
    , options_(options)
    , templates_(std::move(templates))
    , in_flight_(std::clamp(options.max_in_flight, 1, 1024))
{
    if (options_.token_budget < 1 || options_.top_k < 1 || options_.transport_retries < 0)
        throw std::invalid_argument("invalid gateway options");
}

void Gateway::count(std::map<Component, int>& bucket, Component c)
{
    std::lock_guard lock(stats_mutex_);
    ++bucket[c];
}

GatewayStats Gateway::stats() const
{
    std::lock_guard lock(stats_mutex_);
    return stats_;
}

ChatRequest Gateway::build_request(
    Component c, const std::map<std::string, std::string>& values, const std::string& tag) const
{
    const auto& t = templates_.get(c);
    ChatRequest r;
    r.component = c;
    r.system = render_template(t.system, values);
    r.user = render_template(t.user, values);
    r.temperature = 0.0;
    r.max_tokens = options_.max_tokens;
    r.tag = tag;
    fit_to_budget(r, options_.token_budget);
    return r;
}

std::string Gateway::send(const ChatRequest& request)
{
    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release { in_flight_ };
    for (int attempt = 0;; ++attempt) {
        try {
            return backend_.complete(request);
        } catch (const BackendError&) {
            if (attempt >= options_.transport_retries)
                throw;
        }
    }
}

template <class T, class ParseFn>
Gateway::CallOutcome<T> Gateway::run(
    Component c, const std::map<std::string, std::string>& values, const std::string& tag, ParseFn parse)
{
    count(stats_.calls, c);
    const ChatRequest base = build_request(c, values, tag);
    CallOutcome<T> out;
    std::string problem;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ChatRequest request = base;
        if (attempt == 1) {
            count(stats_.repairs, c);
            request.system += "\n\n" + repair_note(c, problem);
            fit_to_budget(request, options_.token_budget);
        }
        out.raw = send(request);
        ++out.attempts;
        Parsed<T> parsed = parse(out.raw);
        if (parsed.value) {
            out.value = std::move(parsed.value);
            return out;
        }
        problem = parsed.error;
    }
    count(stats_.abstentions, c);
    return out;
}

C1Decision Gateway::classify_relevance(const ContextBundle& bundle)
{
    auto o = run<bool>(Component::relevance, bundle_values(bundle), bundle.pr_key,
        [](const std::string& r) { return parse_bool_reply(r, "update_required"); });
    return { o.value.value_or(false), o.raw, !o.value, o.attempts };
}

SufficiencyDecision Gateway::assess_sufficiency(const ContextBundle& bundle)
{
    auto o = run<bool>(Component::sufficiency, bundle_values(bundle), bundle.pr_key,
        [](const std::string& r) { return parse_bool_reply(r, "sufficient"); });
    return { o.value.value_or(false), o.raw, !o.value, o.attempts };
}

LocalisationResult Gateway::localise_and_justify(const ContextBundle& bundle)
{
    const int n = bundle.section_count;
    const int k = options_.top_k;
    auto o = run<LocalisationResult>(Component::localisation, bundle_values(bundle), bundle.pr_key,
        [n, k](const std::string& r) { return parse_localisation_reply(r, n, k); });
    if (o.value) {
        o.value->attempts = o.attempts;
        return std::move(*o.value);
    }
    LocalisationResult r;
    r.raw = o.raw;
    r.abstained = true;
    r.attempts = o.attempts;
    r.error = "no-valid-indices";
    return r;
}

ReviewVerdict Gateway::review_recommendation(
    const LocalisationResult& result, const ReadmeDocument& doc, const ContextBundle& bundle, ReviewMode mode)
{
    if (result.ranked_indices.empty())
        throw std::invalid_argument("review_recommendation needs a non-empty localisation result");
    auto values = bundle_values(bundle);
    values["recommendation"] = render_recommendation(result, doc);

    auto abstain = [](std::string raw, int attempts) {
        return ReviewVerdict { false, Critique::generic, std::move(raw), true, attempts };
    };

    if (mode == ReviewMode::fixed) {
        auto o = run<bool>(Component::review, values, bundle.pr_key,
            [](const std::string& r) { return parse_bool_reply(r, "approve"); });
        if (!o.value)
            return abstain(o.raw, o.attempts);
        return { *o.value, std::nullopt, o.raw, false, o.attempts };
    }

    auto critique = run<Critique>(Component::critique, values, bundle.pr_key, parse_critique_reply);
    if (!critique.value)
        return abstain(critique.raw, critique.attempts);
    if (*critique.value != Critique::correct)
        return { false, critique.value, critique.raw, false, critique.attempts };

    auto stable = run<bool>(Component::stability, values, bundle.pr_key,
        [](const std::string& r) { return parse_bool_reply(r, "approve"); });
    int attempts = critique.attempts + stable.attempts;
    if (!stable.value)
        return abstain(stable.raw, attempts);
    return { *stable.value, Critique::correct, stable.raw, false, attempts };
}

} // namespace docdrift
