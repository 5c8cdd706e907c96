#include "docdrift/forge.hpp"

#include "docdrift/http.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <thread>

namespace docdrift {

using nlohmann::json;

void ForgeConfig::validate() const
{
    if (per_page < 1 || per_page > 100)
        throw std::invalid_argument("per_page must be in 1..100");
    if (max_retries < 1)
        throw std::invalid_argument("max_retries must be positive");
    if (base_url.empty())
        throw std::invalid_argument("base_url is empty");
}

ForgeConfig ForgeConfig::with_env_token(ForgeConfig cfg)
{
    if (const char* token = std::getenv("FORGE_TOKEN"); token && *token)
        cfg.auth_token = token;
    return cfg;
}

RateLimitState RateLimiter::state() const
{
    std::lock_guard lock(mutex_);
    return state_;
}

void RateLimiter::update(int remaining, Timestamp reset_at)
{
    std::lock_guard lock(mutex_);
    state_.remaining = std::max(0, remaining);
    state_.reset_at = reset_at;
}

std::chrono::seconds RateLimiter::wait_needed(Timestamp now) const
{
    std::lock_guard lock(mutex_);
    if (state_.remaining > 0 || state_.reset_at <= now)
        return std::chrono::seconds(0);
    return state_.reset_at - now;
}

struct ForgeClient::Transport {
    HttpClient http;
};

ForgeClient::ForgeClient(ForgeConfig config, std::shared_ptr<RateLimiter> limiter, Sleeper sleeper, Clock clock)
    : config_(std::move(config))
    , limiter_(limiter ? std::move(limiter) : std::make_shared<RateLimiter>())
    , sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }))
    , clock_(clock ? std::move(clock) : Clock(system_now))
{
    config_.validate();
    transport_ = std::make_unique<Transport>(Transport { HttpClient(config_.base_url) });
}

ForgeClient::~ForgeClient() = default;

namespace {

std::optional<int> header_int(const HttpResponse& res, const std::string& name)
{
    auto value = res.header(name);
    if (!value)
        return std::nullopt;
    try {
        return std::stoi(*value);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

bool has_next_link(const std::string& link)
{
    return link.find("rel=\"next\"") != std::string::npos;
}

std::string with_query(const std::string& path, const std::string& param)
{
    return path + (path.find('?') == std::string::npos ? "?" : "&") + param;
}

ChangeKind change_kind_from_status(const std::string& status)
{
    if (status == "added")
        return ChangeKind::added;
    if (status == "removed")
        return ChangeKind::deleted;
    if (status == "renamed")
        return ChangeKind::renamed;
    return ChangeKind::modified;
}

std::string string_or_empty(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        return {};
    return it->get<std::string>();
}

} // namespace

std::optional<ForgeClient::Page> ForgeClient::cache_lookup(const std::string& url) const
{
    if (!config_.cache_dir)
        return std::nullopt;
    auto file = *config_.cache_dir / (to_hex(fnv1a64(url)) + ".json");
    std::ifstream in(file);
    if (!in)
        return std::nullopt;
    try {
        json j = json::parse(in);
        if (j.at("url").get<std::string>() != url)
            return std::nullopt;
        Page page { j.at("body").get<std::string>(), std::nullopt };
        if (j.contains("link") && j["link"].is_string())
            page.link = j["link"].get<std::string>();
        return page;
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

void ForgeClient::cache_store(const std::string& url, const Page& page) const
{
    if (!config_.cache_dir)
        return;
    std::filesystem::create_directories(*config_.cache_dir);
    json j { { "url", url }, { "body", page.body }, { "link", page.link ? json(*page.link) : json(nullptr) } };
    std::ofstream out(*config_.cache_dir / (to_hex(fnv1a64(url)) + ".json"));
    out << j.dump(-1, ' ', false, json::error_handler_t::replace);
}

ForgeClient::Page ForgeClient::get(const std::string& path, const std::string& accept)
{
    const std::string url = config_.base_url + path + " " + accept;
    if (auto cached = cache_lookup(url))
        return *cached;

    HttpHeaders headers { { "Accept", accept }, { "User-Agent", "docdrift" } };
    if (config_.auth_token)
        headers.emplace_back("Authorization", "Bearer " + *config_.auth_token);

    int failures = 0;
    while (true) {
        if (auto wait = limiter_->wait_needed(clock_()); wait.count() > 0)
            sleeper_(std::chrono::duration_cast<std::chrono::milliseconds>(wait));

        ++requests_;
        auto res = transport_->http.get(path, headers);
        if (!res) {
            if (++failures >= config_.max_retries)
                throw ForgeError(ForgeError::Kind::network,
                    "network failure on " + path + ": " + transport_->http.last_error());
            sleeper_(config_.backoff_base * (1 << std::min(failures - 1, 16)));
            continue;
        }

        auto remaining = header_int(*res, "x-ratelimit-remaining");
        auto reset = header_int(*res, "x-ratelimit-reset");
        if (remaining && reset)
            limiter_->update(*remaining, Timestamp(std::chrono::seconds(*reset)));

        if (res->status == 200) {
            Page page { std::move(res->body), res->header("link") };
            cache_store(url, page);
            return page;
        }
        if (res->status == 404)
            throw ForgeError(ForgeError::Kind::not_found, "not found: " + path, 404);
        if (res->status == 401)
            throw ForgeError(ForgeError::Kind::unauthorized, "authentication failed (check FORGE_TOKEN)", 401);
        if (res->status == 403 || res->status == 429) {
            auto retry_after = header_int(*res, "retry-after");
            bool limited = (remaining && *remaining == 0) || retry_after;
            if (!limited)
                throw ForgeError(ForgeError::Kind::unauthorized, "forbidden: " + path, res->status);
            if (++failures >= config_.max_retries)
                throw ForgeError(ForgeError::Kind::rate_limited, "rate limit not lifted after retries", res->status);
            if (retry_after && !(remaining && *remaining == 0))
                limiter_->update(0, clock_() + std::chrono::seconds(*retry_after));
            continue;
        }
        if (res->status >= 500) {
            if (++failures >= config_.max_retries)
                throw ForgeError(ForgeError::Kind::http, "server error " + std::to_string(res->status) + " on " + path,
                    res->status);
            sleeper_(config_.backoff_base * (1 << std::min(failures - 1, 16)));
            continue;
        }
        throw ForgeError(ForgeError::Kind::http, "unexpected status " + std::to_string(res->status) + " on " + path,
            res->status);
    }
}

std::vector<std::string> ForgeClient::get_paged(const std::string& path)
{
    std::vector<std::string> items;
    for (int page_no = 1;; ++page_no) {
        auto page = get(with_query(path, "per_page=" + std::to_string(config_.per_page) + "&page=" + std::to_string(page_no)));
        json arr = json::parse(page.body);
        if (!arr.is_array())
            throw ForgeError(ForgeError::Kind::http, "expected a JSON array from " + path);
        for (auto& item : arr)
            items.push_back(item.dump());
        bool more = page.link ? has_next_link(*page.link) : static_cast<int>(arr.size()) == config_.per_page;
        if (!more || arr.empty())
            break;
    }
    return items;
}

std::vector<PrSummary> ForgeClient::list_pull_requests(const std::string& repo, PrStateFilter filter)
{
    std::string state = filter == PrStateFilter::all ? "all" : "closed";
    auto items = get_paged("/repos/" + repo + "/pulls?state=" + state + "&sort=created&direction=desc");

    std::vector<PrSummary> out;
    std::set<std::int64_t> seen;
    for (const auto& text : items) {
        json j = json::parse(text);
        PrSummary s;
        s.number = j.at("number").get<std::int64_t>();
        s.title = string_or_empty(j, "title");
        s.state = string_or_empty(j, "state");
        s.merged = j.contains("merged_at") && !j["merged_at"].is_null();
        if (auto created = string_or_empty(j, "created_at"); !created.empty())
            s.created_at = parse_rfc3339(created);
        if (filter == PrStateFilter::merged && !s.merged)
            continue;
        if (filter == PrStateFilter::closed && s.merged)
            continue;
        if (!seen.insert(s.number).second)
            continue;
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const PrSummary& a, const PrSummary& b) { return a.number > b.number; });
    return out;
}

PullRequest ForgeClient::fetch_pr_detail(const std::string& repo, std::int64_t number)
{
    const std::string base = "/repos/" + repo;
    json meta = json::parse(get(base + "/pulls/" + std::to_string(number)).body);

    PullRequest pr;
    pr.repo = repo;
    pr.number = number;
    pr.title = string_or_empty(meta, "title");
    pr.description = string_or_empty(meta, "body");
    pr.created_at = parse_rfc3339(meta.at("created_at").get<std::string>());
    const std::string base_sha = meta.at("base").at("sha").get<std::string>();

    for (const auto& text : get_paged(base + "/pulls/" + std::to_string(number) + "/commits")) {
        json c = json::parse(text);
        Commit commit;
        commit.sha = c.at("sha").get<std::string>();
        const json& inner = c.at("commit");
        commit.message = string_or_empty(inner, "message");
        if (inner.contains("author") && inner["author"].is_object()) {
            auto date = string_or_empty(inner["author"], "date");
            if (!date.empty())
                commit.authored_at = parse_rfc3339(date);
        }
        json detail = json::parse(get(base + "/commits/" + commit.sha).body);
        std::vector<std::string> touched;
        for (const auto& f : detail.value("files", json::array()))
            touched.push_back(string_or_empty(f, "filename"));
        commit.files = std::move(touched);
        pr.commits.push_back(std::move(commit));
    }

    for (const auto& text : get_paged(base + "/pulls/" + std::to_string(number) + "/files")) {
        json f = json::parse(text);
        FilePatch patch;
        patch.path = f.at("filename").get<std::string>();
        patch.change_kind = change_kind_from_status(string_or_empty(f, "status"));
        patch.patch_text = string_or_empty(f, "patch");
        if (auto prev = string_or_empty(f, "previous_filename"); !prev.empty())
            patch.old_path = prev;
        pr.files.push_back(std::move(patch));
    }

    std::optional<std::string> readme_path;
    if (auto idx = find_readme_patch(pr)) {
        const FilePatch& rp = pr.files[*idx];
        pr.readme_patch = rp.patch_text;
        if (rp.change_kind != ChangeKind::added)
            readme_path = rp.old_path.value_or(rp.path);
    } else {
        json listing = json::parse(get(base + "/contents?ref=" + base_sha).body);
        std::vector<std::string> names;
        for (const auto& entry : listing)
            if (string_or_empty(entry, "type") == "file")
                names.push_back(string_or_empty(entry, "name"));
        if (auto pick = select_readme(names))
            readme_path = names[*pick];
    }

    if (readme_path) {
        try {
            pr.readme_before = get(base + "/contents/" + *readme_path + "?ref=" + base_sha, "application/vnd.github.raw").body;
        } catch (const ForgeError& e) {
            if (e.kind() != ForgeError::Kind::not_found)
                throw;
            pr.meta.readme_missing = true;
        }
    } else {
        pr.meta.readme_missing = true;
    }
    return pr;
}

} // namespace docdrift
