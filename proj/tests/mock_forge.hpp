#pragma once

// In-process stand-in for the GitHub REST endpoints the forge client uses.
// Serves a recorded repository slice (see fixtures/forge/recorded.json).

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

namespace mock {

class ForgeServer {
public:
    /// `repos` maps "owner/name" to a recorded slice:
    /// { "pulls": [...], "contents": { sha: { path: text } } }.
    explicit ForgeServer(nlohmann::json repos = nlohmann::json::object())
        : repos_(std::move(repos))
    {
        server_.Get(".*", [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~ForgeServer()
    {
        server_.stop();
        thread_.join();
    }

    ForgeServer(const ForgeServer&) = delete;
    ForgeServer& operator=(const ForgeServer&) = delete;

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    void add_repo(const std::string& name, nlohmann::json slice)
    {
        std::lock_guard lock(mutex_);
        repos_[name] = std::move(slice);
    }

    /// Requests must carry "Bearer <token>" once set.
    void require_token(std::string token)
    {
        std::lock_guard lock(mutex_);
        token_ = std::move(token);
    }

    /// The next `n` requests answer 403 with an exhausted rate limit that
    /// resets at `reset_epoch`.
    void rate_limit_next(int n, long long reset_epoch)
    {
        std::lock_guard lock(mutex_);
        limited_ = n;
        reset_epoch_ = reset_epoch;
    }

    /// The next `n` requests answer 502.
    void fail_next(int n)
    {
        std::lock_guard lock(mutex_);
        failing_ = n;
    }

    int requests() const { return requests_.load(); }

    int requests_matching(const std::string& fragment) const
    {
        std::lock_guard lock(mutex_);
        int n = 0;
        for (const auto& p : log_)
            n += p.find(fragment) != std::string::npos ? 1 : 0;
        return n;
    }

private:
    static void json_reply(httplib::Response& res, const nlohmann::json& body)
    {
        res.status = 200;
        res.set_content(body.dump(), "application/json");
    }

    void page_reply(const httplib::Request& req, httplib::Response& res, const nlohmann::json& all)
    {
        int per_page = req.has_param("per_page") ? std::stoi(req.get_param_value("per_page")) : 30;
        int page = req.has_param("page") ? std::stoi(req.get_param_value("page")) : 1;
        nlohmann::json slice = nlohmann::json::array();
        std::size_t first = static_cast<std::size_t>((page - 1) * per_page);
        for (std::size_t i = first; i < all.size() && i < first + static_cast<std::size_t>(per_page); ++i)
            slice.push_back(all[i]);
        if (first + static_cast<std::size_t>(per_page) < all.size())
            res.set_header("Link", "<" + url() + req.path + "?page=" + std::to_string(page + 1) + ">; rel=\"next\"");
        json_reply(res, slice);
    }

    static nlohmann::json pull_json(const nlohmann::json& p)
    {
        return { { "number", p["number"] }, { "title", p["title"] }, { "body", p["body"] }, { "state", p["state"] },
            { "merged_at", p["merged_at"] }, { "created_at", p["created_at"] },
            { "base", { { "sha", p["base_sha"] }, { "ref", "main" } } } };
    }

    void handle(const httplib::Request& req, httplib::Response& res)
    {
        ++requests_;
        std::lock_guard lock(mutex_);
        log_.push_back(req.path);
        res.set_header("X-RateLimit-Remaining", "4999");
        res.set_header("X-RateLimit-Reset", "0");
        if (token_ && req.get_header_value("Authorization") != "Bearer " + *token_) {
            res.status = 401;
            res.set_content(R"({"message":"Bad credentials"})", "application/json");
            return;
        }
        if (limited_ > 0) {
            --limited_;
            res.status = 403;
            res.headers.erase("X-RateLimit-Remaining");
            res.headers.erase("X-RateLimit-Reset");
            res.set_header("X-RateLimit-Remaining", "0");
            res.set_header("X-RateLimit-Reset", std::to_string(reset_epoch_));
            res.set_content(R"({"message":"API rate limit exceeded"})", "application/json");
            return;
        }
        if (failing_ > 0) {
            --failing_;
            res.status = 502;
            return;
        }

        static const std::regex route(R"(^/repos/([^/]+/[^/]+)/(pulls|commits|contents)(?:/(.*))?$)");
        std::smatch m;
        if (!std::regex_match(req.path, m, route) || !repos_.contains(m[1].str())) {
            res.status = 404;
            res.set_content(R"({"message":"Not Found"})", "application/json");
            return;
        }
        const nlohmann::json& repo = repos_[m[1].str()];
        const std::string kind = m[2].str();
        const std::string rest = m[3].str();

        if (kind == "pulls" && rest.empty()) {
            std::string state = req.has_param("state") ? req.get_param_value("state") : "open";
            nlohmann::json all = nlohmann::json::array();
            for (const auto& p : repo["pulls"])
                if (state == "all" || p["state"] == state)
                    all.push_back(pull_json(p));
            std::sort(all.begin(), all.end(),
                [](const nlohmann::json& a, const nlohmann::json& b) { return a["number"] > b["number"]; });
            page_reply(req, res, all);
            return;
        }
        if (kind == "pulls") {
            static const std::regex sub(R"(^(\d+)(?:/(commits|files))?$)");
            std::smatch s;
            if (std::regex_match(rest, s, sub)) {
                long long number = std::stoll(s[1].str());
                for (const auto& p : repo["pulls"]) {
                    if (p["number"] != number)
                        continue;
                    if (!s[2].matched) {
                        json_reply(res, pull_json(p));
                    } else if (s[2] == "commits") {
                        nlohmann::json all = nlohmann::json::array();
                        for (const auto& c : p["commits"])
                            all.push_back({ { "sha", c["sha"] },
                                { "commit", { { "message", c["message"] }, { "author", { { "date", c["date"] } } } } } });
                        page_reply(req, res, all);
                    } else {
                        nlohmann::json all = nlohmann::json::array();
                        for (const auto& f : p["files"]) {
                            nlohmann::json e = f;
                            if (e.contains("patch") && e["patch"].is_null())
                                e.erase("patch");
                            all.push_back(e);
                        }
                        page_reply(req, res, all);
                    }
                    return;
                }
            }
        }
        if (kind == "commits") {
            for (const auto& p : repo["pulls"])
                for (const auto& c : p["commits"])
                    if (c["sha"] == rest) {
                        nlohmann::json files = nlohmann::json::array();
                        for (const auto& f : c["files"])
                            files.push_back({ { "filename", f } });
                        json_reply(res, { { "sha", rest }, { "files", files } });
                        return;
                    }
        }
        if (kind == "contents") {
            std::string ref = req.has_param("ref") ? req.get_param_value("ref") : "";
            auto snapshot = repo["contents"].find(ref);
            if (snapshot != repo["contents"].end()) {
                if (rest.empty()) {
                    nlohmann::json listing = nlohmann::json::array();
                    for (const auto& [name, text] : snapshot->items())
                        listing.push_back({ { "name", name }, { "path", name }, { "type", "file" } });
                    json_reply(res, listing);
                    return;
                }
                if (auto file = snapshot->find(rest); file != snapshot->end()) {
                    res.status = 200;
                    res.set_content(file->get<std::string>(), "text/plain");
                    return;
                }
            }
        }
        res.status = 404;
        res.set_content(R"({"message":"Not Found"})", "application/json");
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    nlohmann::json repos_;
    std::optional<std::string> token_;
    int limited_ = 0;
    long long reset_epoch_ = 0;
    int failing_ = 0;
    std::atomic<int> requests_ { 0 };
    std::vector<std::string> log_;
    mutable std::mutex mutex_;
};

/// Loads fixtures/forge/recorded.json into a server.
inline nlohmann::json recorded_slice(const std::string& path)
{
    std::ifstream in(path);
    nlohmann::json j = nlohmann::json::parse(in);
    return { { j["repo"].get<std::string>(), { { "pulls", j["pulls"] }, { "contents", j["contents"] } } } };
}

/// `n` merged PRs that touch one code file each.
inline nlohmann::json synthetic_repo(int n)
{
    nlohmann::json pulls = nlohmann::json::array();
    for (int i = 1; i <= n; ++i) {
        char sha[41];
        std::snprintf(sha, sizeof sha, "%040x", i);
        pulls.push_back({ { "number", i }, { "title", "Change " + std::to_string(i) }, { "body", nullptr },
            { "state", "closed" }, { "merged_at", "2020-01-02T00:00:00Z" }, { "created_at", "2020-01-01T00:00:00Z" },
            { "base_sha", "base" },
            { "commits",
                { { { "sha", sha }, { "message", "m" }, { "date", "2020-01-01T00:00:00Z" }, { "files", { "a.c" } } } } },
            { "files", { { { "filename", "a.c" }, { "status", "modified" }, { "patch", "@@ -1 +1 @@\n-a\n+b\n" } } } } });
    }
    return { { "pulls", pulls }, { "contents", { { "base", { { "README.md", "# Repo\n\nHello.\n" } } } } } };
}

} // namespace mock
