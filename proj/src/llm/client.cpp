#include "gp4nldr/llm/client.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

namespace gp4nldr::llm {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::auth_failure: return "auth_failure";
    case ErrorKind::rate_limited: return "rate_limited";
    case ErrorKind::timeout: return "timeout";
    case ErrorKind::malformed_response: return "malformed_response";
    case ErrorKind::transport: return "transport";
    case ErrorKind::provider_error: return "provider_error";
    }
    return "unknown";
}

LlmError::LlmError(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

ProviderConfig ProviderConfig::from_environment() {
    ProviderConfig c;
    if (const char* v = std::getenv("GP4NLDR_LLM_API_KEY")) c.api_key = v;
    if (const char* v = std::getenv("GP4NLDR_LLM_BASE_URL")) c.base_url = v;
    if (const char* v = std::getenv("GP4NLDR_LLM_MODEL")) c.model_id = v;
    return c;
}

namespace {

struct Endpoint {
    std::string origin; // scheme://host[:port]
    std::string path;
};

Endpoint split_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw LlmError(ErrorKind::transport, fmt::format("invalid base URL '{}'", base_url));
    const auto path_start = base_url.find('/', scheme_end + 3);
    Endpoint e;
    e.origin = base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    e.path = prefix + "/chat/completions";
    return e;
}

std::string provider_message(const std::string& body) {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_object() && j.contains("error")) {
        const auto& e = j["error"];
        if (e.is_object() && e.contains("message") && e["message"].is_string()) return e["message"].get<std::string>();
        if (e.is_string()) return e.get<std::string>();
    }
    return body;
}

struct Attempt {
    std::optional<std::string> answer;
    std::optional<LlmError> error;
    bool retry = false;
};

Attempt attempt_once(const ProviderConfig& config, const Endpoint& endpoint, const std::string& body,
                     std::chrono::milliseconds timeout) {
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);

    const auto res = client.Post(endpoint.path, headers, body, "application/json");
    if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
        LlmError e(timed_out ? ErrorKind::timeout : ErrorKind::transport,
                   fmt::format("request to {} failed: {}", endpoint.origin, httplib::to_string(err)));
        return {std::nullopt, e, true};
    }
    const int status = res->status;
    if (status == 401 || status == 403)
        return {std::nullopt, LlmError(ErrorKind::auth_failure, "the provider rejected the API key: " + provider_message(res->body)), false};
    if (status == 429)
        return {std::nullopt, LlmError(ErrorKind::rate_limited, "rate limited: " + provider_message(res->body)), true};
    if (status == 408) return {std::nullopt, LlmError(ErrorKind::timeout, "provider timed out"), true};
    if (status >= 500)
        return {std::nullopt, LlmError(ErrorKind::provider_error, fmt::format("provider error {}: {}", status, provider_message(res->body))), true};
    if (status < 200 || status >= 300)
        return {std::nullopt, LlmError(ErrorKind::provider_error, fmt::format("provider error {}: {}", status, provider_message(res->body))), false};

    const auto j = nlohmann::json::parse(res->body, nullptr, false);
    try {
        if (!j.is_discarded()) {
            const auto& content = j.at("choices").at(0).at("message").at("content");
            if (content.is_string()) return {content.get<std::string>(), std::nullopt, false};
        }
    } catch (const nlohmann::json::exception&) {
    }
    return {std::nullopt, LlmError(ErrorKind::malformed_response, "provider reply has no choices[0].message.content"), false};
}

} // namespace

std::string complete_chat(const ProviderConfig& config, std::span<const Message> messages) {
    if (messages.empty()) throw std::invalid_argument("a chat request needs at least one message");
    if (config.temperature < 0.0) throw std::invalid_argument("temperature must be non-negative");

    nlohmann::json payload{{"model", config.model_id}, {"temperature", config.temperature}};
    payload["messages"] = nlohmann::json::array();
    for (const auto& m : messages) payload["messages"].push_back({{"role", m.role}, {"content", m.content}});
    const std::string body = payload.dump();
    const Endpoint endpoint = split_url(config.base_url);

    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + config.timeout * static_cast<long>(config.max_retries + 1);
    for (std::size_t attempt = 0;; ++attempt) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
        auto outcome = attempt_once(config, endpoint, body, std::clamp(left, std::chrono::milliseconds{1}, config.timeout));
        if (outcome.answer) return *outcome.answer;
        if (!outcome.retry || attempt >= config.max_retries) throw *outcome.error;
        const auto pause = config.backoff.empty() ? std::chrono::milliseconds{0}
                                                  : config.backoff[std::min(attempt, config.backoff.size() - 1)];
        if (clock::now() + pause >= deadline) throw *outcome.error;
        std::this_thread::sleep_for(pause);
    }
}

MockProvider MockProvider::scripted(std::vector<MockReply> script) {
    MockProvider p;
    p.script_ = std::move(script);
    return p;
}

MockProvider MockProvider::scripted(const std::vector<std::string>& answers) {
    std::vector<MockReply> script;
    for (const auto& a : answers) script.push_back({a, std::nullopt});
    return scripted(std::move(script));
}

MockProvider MockProvider::echo() {
    MockProvider p;
    p.echo_ = true;
    return p;
}

MockProvider::MockProvider(const MockProvider& other) {
    std::lock_guard lock(other.mutex_);
    echo_ = other.echo_;
    script_ = other.script_;
    next_ = other.next_;
    log_ = other.log_;
}

std::string MockProvider::complete(std::span<const Message> messages) {
    std::lock_guard lock(mutex_);
    log_.emplace_back(messages.begin(), messages.end());
    if (echo_) {
        std::size_t chars = 0;
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& m : messages) {
            chars += m.content.size();
            for (unsigned char c : m.content) {
                h ^= c;
                h *= 0x100000001b3ULL;
            }
        }
        const std::string last = messages.empty() ? std::string{} : messages.back().content;
        return fmt::format("[echo {} messages, {} chars, fnv1a {:016x}] {}", messages.size(), chars, h, last);
    }
    if (next_ >= script_.size()) throw LlmError(ErrorKind::provider_error, "mock provider script exhausted");
    const auto& reply = script_[next_++];
    if (reply.error) throw LlmError(*reply.error, fmt::format("mock {}", to_string(*reply.error)));
    return reply.text;
}

std::vector<std::vector<Message>> MockProvider::requests() const {
    std::lock_guard lock(mutex_);
    return log_;
}

std::size_t MockProvider::request_count() const {
    std::lock_guard lock(mutex_);
    return log_.size();
}

} // namespace gp4nldr::llm
