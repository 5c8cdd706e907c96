#include "docdrift/http.hpp"

#include "docdrift/common.hpp"

#include <httplib.h>

namespace docdrift {

std::optional<std::string> HttpResponse::header(const std::string& lowercase_name) const
{
    auto it = headers.find(lowercase_name);
    if (it == headers.end())
        return std::nullopt;
    return it->second;
}

struct HttpClient::Impl {
    std::unique_ptr<httplib::Client> client;
    std::string prefix;
};

namespace {

std::pair<std::string, std::string> split_base(const std::string& base_url)
{
    auto scheme = base_url.find("://");
    auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
    auto slash = base_url.find('/', host_start);
    if (slash == std::string::npos)
        return { base_url, "" };
    std::string prefix = base_url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/')
        prefix.pop_back();
    return { base_url.substr(0, slash), prefix };
}

HttpResponse convert(const httplib::Response& res)
{
    HttpResponse out;
    out.status = res.status;
    out.body = res.body;
    for (const auto& [k, v] : res.headers)
        out.headers.emplace(to_lower(k), v);
    return out;
}

httplib::Headers to_headers(const HttpHeaders& headers)
{
    httplib::Headers h;
    for (const auto& [k, v] : headers)
        h.emplace(k, v);
    return h;
}

} // namespace

HttpClient::HttpClient(const std::string& base_url, std::chrono::seconds timeout)
    : impl_(std::make_unique<Impl>())
{
    auto [origin, prefix] = split_base(base_url);
    impl_->client = std::make_unique<httplib::Client>(origin);
    impl_->prefix = prefix;
    impl_->client->set_connection_timeout(timeout);
    impl_->client->set_read_timeout(timeout);
    impl_->client->set_follow_location(true);
}

HttpClient::~HttpClient() = default;
HttpClient::HttpClient(HttpClient&&) noexcept = default;
HttpClient& HttpClient::operator=(HttpClient&&) noexcept = default;

std::optional<HttpResponse> HttpClient::get(const std::string& path, const HttpHeaders& headers)
{
    auto res = impl_->client->Get(impl_->prefix + path, to_headers(headers));
    if (!res) {
        last_error_ = httplib::to_string(res.error());
        return std::nullopt;
    }
    return convert(*res);
}

std::optional<HttpResponse> HttpClient::post(const std::string& path, const std::string& body,
    const std::string& content_type, const HttpHeaders& headers)
{
    auto res = impl_->client->Post(impl_->prefix + path, to_headers(headers), body, content_type);
    if (!res) {
        last_error_ = httplib::to_string(res.error());
        return std::nullopt;
    }
    return convert(*res);
}

} // namespace docdrift
