#pragma once

#include "docdrift/common.hpp"
#include "docdrift/corpus.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace docdrift {

struct ForgeConfig {
    std::string base_url = "https://api.github.com";
    std::optional<std::string> auth_token; // only ever from FORGE_TOKEN
    int per_page = 100;                    // 1..100
    int max_retries = 5;
    std::optional<std::filesystem::path> cache_dir;
    std::chrono::milliseconds backoff_base { 500 };

    /// Throws std::invalid_argument for out-of-range values.
    void validate() const;

    /// Copy of `cfg` with auth_token taken from FORGE_TOKEN (if set).
    static ForgeConfig with_env_token(ForgeConfig cfg);
};

struct RateLimitState {
    int remaining = 1;
    Timestamp reset_at {};
};

/// Rate-limit budget shared by every client (and worker) that holds it.
class RateLimiter {
public:
    RateLimitState state() const;
    void update(int remaining, Timestamp reset_at);
    /// How long a caller must wait at `now` before spending budget.
    std::chrono::seconds wait_needed(Timestamp now) const;

private:
    mutable std::mutex mutex_;
    RateLimitState state_;
};

class ForgeError : public Error {
public:
    enum class Kind { not_found, unauthorized, rate_limited, network, http };

    ForgeError(Kind kind, const std::string& what, int status = 0)
        : Error(what)
        , kind_(kind)
        , status_(status)
    {
    }
    Kind kind() const { return kind_; }
    int status() const { return status_; }

private:
    Kind kind_;
    int status_;
};

enum class PrStateFilter { merged, closed, all };

struct PrSummary {
    std::int64_t number = 0;
    std::string title;
    bool merged = false;
    std::string state;
    Timestamp created_at {};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// REST client for a GitHub-compatible forge. Responses with status 200 are
/// cached on disk keyed by URL when `cache_dir` is set, so a warm cache
/// replays offline.
class ForgeClient {
public:
    explicit ForgeClient(ForgeConfig config, std::shared_ptr<RateLimiter> limiter = nullptr, Sleeper sleeper = nullptr,
        Clock clock = nullptr);
    ~ForgeClient();

    /// Every PR matching `filter`, each once, descending by number.
    std::vector<PrSummary> list_pull_requests(const std::string& repo, PrStateFilter filter);

    /// Assembles a corpus record: metadata, commits (with touched paths),
    /// file patches, README at the base ref and the README patch if any.
    PullRequest fetch_pr_detail(const std::string& repo, std::int64_t number);

    /// Network requests issued so far (cache hits excluded).
    int request_count() const { return requests_; }

private:
    struct Page {
        std::string body;
        std::optional<std::string> link;
    };

    Page get(const std::string& path, const std::string& accept = "application/vnd.github+json");
    std::vector<std::string> get_paged(const std::string& path);
    std::optional<Page> cache_lookup(const std::string& url) const;
    void cache_store(const std::string& url, const Page& page) const;

    ForgeConfig config_;
    std::shared_ptr<RateLimiter> limiter_;
    Sleeper sleeper_;
    Clock clock_;
    struct Transport;
    std::unique_ptr<Transport> transport_;
    int requests_ = 0;
};

} // namespace docdrift
