#include "gp4nldr/explain/session.hpp"

#include <chrono>

namespace gp4nldr::explain {

std::string_view to_string(Role role) noexcept { return role == Role::human ? "human" : "ai"; }

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::vector<llm::Message> request_messages(const std::string& prompt, std::string_view question) {
    return {{"system", prompt}, {"user", std::string(question)}};
}

Exchange prepare_exchange(const ChatSession& session, std::string_view question, const Explainer& explainer,
                          const gp::RunResult& result) {
    Exchange ex;
    if (!detect_keywords(question, session.keywords).empty()) ex.retrieved = query_store(explainer.store, question, explainer.top_k);
    ex.prompt = build_prompt(explainer.prompt, result, session, ex.retrieved);
    return ex;
}

namespace {

Exchange ask(ChatSession& session, std::string_view question, const Explainer& explainer, const gp::RunResult& result,
             llm::ChatProvider& provider) {
    auto ex = prepare_exchange(session, question, explainer, result);
    const auto messages = request_messages(ex.prompt, question);
    ex.answer = provider.complete(messages);
    const auto stamp = explainer.clock ? explainer.clock() : now_ms();
    session.messages.push_back({Role::human, std::string(question), stamp});
    session.messages.push_back({Role::ai, ex.answer, stamp});
    return ex;
}

} // namespace

Exchange advance_session(ChatSession& session, std::string_view question, const Explainer& explainer,
                         const gp::RunResult& result, llm::ChatProvider& provider) {
    ChatSession working = session;
    Exchange last;
    if (working.messages.empty()) {
        last = ask(working, kInitialQuestion, explainer, result, provider);
        if (!question.empty() && question != kInitialQuestion) last = ask(working, question, explainer, result, provider);
    } else {
        last = ask(working, question, explainer, result, provider);
    }
    session = std::move(working);
    return last;
}

} // namespace gp4nldr::explain
