#include <chrono>
#include <cstdlib>
#include <thread>

// Eigen (via curation.hpp) must precede httplib: <resolv.h> defines a `_res` macro.
#include "georl/curation.hpp"

#include <httplib.h>
#include <json.hpp>

namespace georl {

namespace {

struct ParsedUrl {
    std::string host;
    int port = 80;
    std::string path = "/";
};

// Plain http only; the vendored client is built without TLS.
ParsedUrl parse_url(const std::string& url) {
    constexpr std::string_view scheme = "http://";
    if (!std::string_view(url).starts_with(scheme))
        throw std::invalid_argument("service URL must start with http:// (got '" + url + "')");
    std::string rest = url.substr(scheme.size());
    ParsedUrl out;
    const auto slash = rest.find('/');
    if (slash != std::string::npos) {
        out.path = rest.substr(slash);
        rest.resize(slash);
    }
    const auto colon = rest.rfind(':');
    if (colon != std::string::npos) {
        out.port = std::stoi(rest.substr(colon + 1));
        rest.resize(colon);
    }
    if (rest.empty()) throw std::invalid_argument("service URL has no host: '" + url + "'");
    out.host = rest;
    return out;
}

}  // namespace

std::optional<ServiceEndpoint> ServiceEndpoint::from_environment() {
    const char* url = std::getenv("CURATE_LLM_URL");
    if (!url || !*url) return std::nullopt;
    ServiceEndpoint ep;
    ep.url = url;
    if (const char* token = std::getenv("CURATE_LLM_TOKEN")) ep.token = token;
    return ep;
}

HttpTextService::HttpTextService(ServiceEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    parse_url(endpoint_.url);
    if (endpoint_.max_attempts < 1) throw std::invalid_argument("max_attempts must be at least 1");
}

std::string HttpTextService::post(const std::string& task, const std::string& text) {
    const ParsedUrl url = parse_url(endpoint_.url);
    httplib::Client client(url.host, url.port);
    client.set_connection_timeout(5);
    client.set_read_timeout(30);
    httplib::Headers headers;
    if (!endpoint_.token.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.token);
    const std::string body = nlohmann::json{{"task", task}, {"text", text}}.dump();
    std::string last_error;
    int backoff = endpoint_.initial_backoff_ms;
    for (int attempt = 1; attempt <= endpoint_.max_attempts; ++attempt) {
        auto res = client.Post(url.path, headers, body, "application/json");
        if (res && res->status == 200) return res->body;
        last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
        // Client errors other than rate limiting will not improve on retry.
        if (res && res->status >= 400 && res->status < 500 && res->status != 429) break;
        if (attempt < endpoint_.max_attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
    }
    throw std::runtime_error(task + " service failed: " + last_error);
}

std::vector<std::string> HttpTextService::split(const std::string& text) {
    try {
        const auto reply = nlohmann::json::parse(post("split", text));
        auto parts = reply.at("parts").get<std::vector<std::string>>();
        if (parts.empty()) return {text};
        return parts;
    } catch (const std::exception& e) {
        throw SplitterUnavailable(e.what());
    }
}

std::string HttpTextService::format(const std::string& text) {
    try {
        const auto reply = nlohmann::json::parse(post("format", text));
        return reply.at("text").get<std::string>();
    } catch (const std::exception& e) {
        throw FormatterUnavailable(e.what());
    }
}

}  // namespace georl
