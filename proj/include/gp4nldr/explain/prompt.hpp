#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "gp4nldr/gp/engine.hpp"

namespace gp4nldr::explain {

struct ChatSession;

/// The twelve prompt parts, in the order they are emitted.
enum class PromptPart {
    context,
    fitness,
    operators,
    dataset,
    features,
    expressions,
    accuracy,
    word_limit,
    guidance,
    background,
    initial_question,
    history,
};

inline constexpr std::size_t kPromptPartCount = 12;
inline constexpr std::string_view kInitialQuestion = "Provide an exciting summary of the results";
/// Above this many features the feature list is replaced by the range "f0 to f{m-1}".
inline constexpr std::size_t kMaxListedFeatures = 40;

[[nodiscard]] std::string_view part_key(PromptPart part) noexcept;

class TemplateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Editable prompt text. The source holds twelve sections, each introduced by a line `[[key]]`
/// (keys from part_key(), in order); lines starting with `#` before the first section are comments.
/// Section bodies may use {{placeholders}}, substituted in a single pass so injected text is never
/// re-expanded.
class PromptTemplate {
public:
    [[nodiscard]] static PromptTemplate parse(std::string_view source);
    [[nodiscard]] static PromptTemplate load(const std::filesystem::path& path);

    [[nodiscard]] const std::string& section(PromptPart part) const noexcept {
        return sections_[static_cast<std::size_t>(part)];
    }

private:
    std::array<std::string, kPromptPartCount> sections_;
};

/// Human-readable fitness name, e.g. "GP-MaL-2".
[[nodiscard]] std::string_view fitness_display_name(fitness::FitnessId id) noexcept;
[[nodiscard]] std::string describe_bloat(const gp::BloatControl& bloat);
/// The (e) feature text: comma-separated names, or "f0 to f{m-1}" above kMaxListedFeatures.
[[nodiscard]] std::string feature_text(const std::vector<std::string>& feature_names);

/// Assembles the full prompt for a run and a session. Only run metadata is used: dataset name,
/// feature names, parameters, expressions and accuracies. The background part is omitted when
/// nothing was retrieved; the history part replays every message of the session.
[[nodiscard]] std::string build_prompt(const PromptTemplate& prompt, const gp::RunResult& result, const ChatSession& session,
                                       std::span<const std::string> retrieved = {});

/// Single-pass {{name}} substitution; unknown placeholders are left as written.
[[nodiscard]] std::string substitute(std::string_view text, const std::vector<std::pair<std::string, std::string>>& values);

} // namespace gp4nldr::explain
