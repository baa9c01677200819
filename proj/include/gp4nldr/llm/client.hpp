#pragma once

#include <chrono>
#include <cstddef>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gp4nldr::llm {

enum class ErrorKind {
    auth_failure,
    rate_limited,
    timeout,
    malformed_response,
    /// Connection-level failure (refused, reset, DNS, TLS).
    transport,
    /// Any other non-success reply; the provider's message is kept verbatim.
    provider_error,
};

[[nodiscard]] const char* to_string(ErrorKind kind) noexcept;

class LlmError : public std::runtime_error {
public:
    LlmError(ErrorKind kind, const std::string& message);
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// One chat-completions message; role is "system", "user" or "assistant".
struct Message {
    std::string role;
    std::string content;

    bool operator==(const Message&) const = default;
};

struct ProviderConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;
    std::string model_id = "gpt-3.5-turbo";
    double temperature = 0.0;
    std::chrono::milliseconds timeout{60'000};
    std::size_t max_retries = 2;
    /// Pause before retry i uses backoff[min(i, size - 1)].
    std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds{1000}, std::chrono::milliseconds{4000}};

    /// Defaults overridden by GP4NLDR_LLM_API_KEY, GP4NLDR_LLM_BASE_URL and GP4NLDR_LLM_MODEL.
    [[nodiscard]] static ProviderConfig from_environment();
};

/// Anything that turns a message list into one assistant reply.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    [[nodiscard]] virtual std::string complete(std::span<const Message> messages) = 0;
};

/// One chat-completions request/response cycle with retries on transient failures (timeouts,
/// connection errors, 429 and 5xx). Auth failures and malformed replies are not retried. The
/// whole call, pauses included, is bounded by (max_retries + 1) * timeout.
[[nodiscard]] std::string complete_chat(const ProviderConfig& config, std::span<const Message> messages);

class HttpChatProvider final : public ChatProvider {
public:
    explicit HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {}
    [[nodiscard]] std::string complete(std::span<const Message> messages) override { return complete_chat(config_, messages); }

private:
    ProviderConfig config_;
};

/// A canned reply or a canned failure.
struct MockReply {
    std::string text;
    std::optional<ErrorKind> error;
};

/// Deterministic in-process provider. Every request is logged before it is answered.
class MockProvider final : public ChatProvider {
public:
    /// Replies in order; a request past the end of the script throws.
    [[nodiscard]] static MockProvider scripted(std::vector<MockReply> script);
    [[nodiscard]] static MockProvider scripted(const std::vector<std::string>& answers);
    /// Replies with a digest of the request followed by the final message's content verbatim.
    [[nodiscard]] static MockProvider echo();

    MockProvider(const MockProvider& other);

    [[nodiscard]] std::string complete(std::span<const Message> messages) override;
    [[nodiscard]] std::vector<std::vector<Message>> requests() const;
    [[nodiscard]] std::size_t request_count() const;

private:
    MockProvider() = default;

    bool echo_ = false;
    std::vector<MockReply> script_;
    std::size_t next_ = 0;
    std::vector<std::vector<Message>> log_;
    mutable std::mutex mutex_;
};

} // namespace gp4nldr::llm
