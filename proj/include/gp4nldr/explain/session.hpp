#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "gp4nldr/explain/prompt.hpp"
#include "gp4nldr/explain/rag.hpp"
#include "gp4nldr/gp/engine.hpp"
#include "gp4nldr/llm/client.hpp"

namespace gp4nldr::explain {

enum class Role { human, ai };

[[nodiscard]] std::string_view to_string(Role role) noexcept;

struct ChatMessage {
    Role role = Role::human;
    std::string text;
    /// Milliseconds since the Unix epoch.
    std::int64_t timestamp_ms = 0;

    bool operator==(const ChatMessage&) const = default;
};

/// Conversation state for one run. Messages alternate human/ai, starting with the initial question.
struct ChatSession {
    std::string run_ref;
    std::vector<ChatMessage> messages;
    std::size_t word_limit = 80;
    std::string model_id;
    std::vector<std::string> keywords = default_keywords();

    bool operator==(const ChatSession&) const = default;
};

/// Everything the explainer needs besides the run and the session.
struct Explainer {
    PromptTemplate prompt;
    VectorStore store;
    std::size_t top_k = 3;
    std::function<std::int64_t()> clock;
};

/// Result of one question.
struct Exchange {
    std::string prompt;
    std::vector<std::string> retrieved;
    std::string answer;
};

/// Milliseconds since the Unix epoch from the system clock.
[[nodiscard]] std::int64_t now_ms();

/// The chat-completions message list for one question: the assembled prompt as the system message,
/// the question as the user message.
[[nodiscard]] std::vector<llm::Message> request_messages(const std::string& prompt, std::string_view question);

/// Retrieval and prompt assembly for `question` against the current session, without asking.
[[nodiscard]] Exchange prepare_exchange(const ChatSession& session, std::string_view question, const Explainer& explainer,
                                        const gp::RunResult& result);

/// Asks one question. Retrieval runs only when the question contains a session keyword. A fresh
/// session first asks kInitialQuestion (then `question`, unless it is that same question). The
/// session is updated only if every provider call succeeds; provider errors propagate.
/// Returns the exchange for the last question asked.
Exchange advance_session(ChatSession& session, std::string_view question, const Explainer& explainer,
                         const gp::RunResult& result, llm::ChatProvider& provider);

} // namespace gp4nldr::explain
