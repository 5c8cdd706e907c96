#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace docdrift {

struct HttpResponse {
    int status = 0;
    std::string body;
    std::map<std::string, std::string> headers; // keys lowercased

    std::optional<std::string> header(const std::string& lowercase_name) const;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Blocking HTTP(S) client bound to one base URL. The base may carry a path
/// prefix (`https://host/api/v3`) which is prepended to every request path.
/// Transport failures come back as std::nullopt with `last_error()` set.
class HttpClient {
public:
    explicit HttpClient(const std::string& base_url, std::chrono::seconds timeout = std::chrono::seconds(60));
    ~HttpClient();
    HttpClient(HttpClient&&) noexcept;
    HttpClient& operator=(HttpClient&&) noexcept;

    std::optional<HttpResponse> get(const std::string& path, const HttpHeaders& headers = {});
    std::optional<HttpResponse> post(const std::string& path, const std::string& body,
        const std::string& content_type, const HttpHeaders& headers = {});

    const std::string& last_error() const { return last_error_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string last_error_;
};

} // namespace docdrift
