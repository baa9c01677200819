#include "gp4nldr/explain/prompt.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "gp4nldr/explain/session.hpp"

namespace gp4nldr::explain {

std::string_view part_key(PromptPart part) noexcept {
    switch (part) {
    case PromptPart::context: return "context";
    case PromptPart::fitness: return "fitness";
    case PromptPart::operators: return "operators";
    case PromptPart::dataset: return "dataset";
    case PromptPart::features: return "features";
    case PromptPart::expressions: return "expressions";
    case PromptPart::accuracy: return "accuracy";
    case PromptPart::word_limit: return "word_limit";
    case PromptPart::guidance: return "guidance";
    case PromptPart::background: return "background";
    case PromptPart::initial_question: return "initial_question";
    case PromptPart::history: return "history";
    }
    return "";
}

namespace {

std::string trim_lines(const std::string& s) {
    const auto b = s.find_first_not_of('\n');
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of('\n');
    return s.substr(b, e - b + 1);
}

} // namespace

PromptTemplate PromptTemplate::parse(std::string_view source) {
    PromptTemplate t;
    std::istringstream in{std::string(source)};
    std::string line;
    std::size_t next = 0;
    std::string* current = nullptr;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.size() > 4 && line.starts_with("[[") && line.ends_with("]]")) {
            const auto key = std::string_view(line).substr(2, line.size() - 4);
            if (next >= kPromptPartCount) throw TemplateError(fmt::format("unexpected extra section [[{}]]", key));
            const auto expected = part_key(static_cast<PromptPart>(next));
            if (key != expected) throw TemplateError(fmt::format("expected section [[{}]], found [[{}]]", expected, key));
            current = &t.sections_[next++];
            continue;
        }
        if (!current) {
            if (line.empty() || line.starts_with("#")) continue;
            throw TemplateError("text before the first section");
        }
        *current += line;
        *current += '\n';
    }
    if (next != kPromptPartCount)
        throw TemplateError(fmt::format("missing section [[{}]]", part_key(static_cast<PromptPart>(next))));
    for (auto& s : t.sections_) s = trim_lines(s);
    return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TemplateError(fmt::format("cannot read prompt template '{}'", path.string()));
    return parse(std::string(std::istreambuf_iterator<char>(in), {}));
}

std::string_view fitness_display_name(fitness::FitnessId id) noexcept {
    switch (id) {
    case fitness::FitnessId::gpmal: return "GP-MaL";
    case fitness::FitnessId::gpmal2: return "GP-MaL-2";
    case fitness::FitnessId::nrmse: return "NRMSE";
    }
    return "";
}

std::string describe_bloat(const gp::BloatControl& bloat) {
    struct Visitor {
        std::string operator()(const gp::NoBloatControl&) const { return "none"; }
        std::string operator()(const gp::Lexicographic&) const {
            return "lexicographic parsimony pressure (smaller trees win ties in fitness)";
        }
        std::string operator()(const gp::DoubleTournament& d) const {
            return fmt::format("double tournament ({} tournament first, smaller individual preferred with probability {})",
                               d.fitness_first ? "fitness" : "size", d.p_smaller);
        }
        std::string operator()(const gp::Tarpeian& t) const {
            return fmt::format("Tarpeian (larger than average individuals penalised with probability {})", t.p);
        }
    };
    return std::visit(Visitor{}, bloat);
}

std::string feature_text(const std::vector<std::string>& feature_names) {
    if (feature_names.size() > kMaxListedFeatures) return fmt::format("f0 to f{}", feature_names.size() - 1);
    return fmt::format("{}", fmt::join(feature_names, ", "));
}

std::string substitute(std::string_view text, const std::vector<std::pair<std::string, std::string>>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto open = text.find("{{", pos);
        if (open == std::string_view::npos) break;
        const auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        out.append(text.substr(pos, open - pos));
        const auto name = text.substr(open + 2, close - open - 2);
        const auto it = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == name; });
        if (it != values.end()) {
            out += it->second;
        } else {
            out.append(text.substr(open, close + 2 - open));
        }
        pos = close + 2;
    }
    out.append(text.substr(pos));
    return out;
}

std::string build_prompt(const PromptTemplate& prompt, const gp::RunResult& result, const ChatSession& session,
                         std::span<const std::string> retrieved) {
    const auto& cfg = result.config;
    std::string expressions;
    for (std::size_t i = 0; i < result.expressions.size(); ++i) {
        if (i) expressions += '\n';
        expressions += fmt::format("Dimension {}: {}", i + 1, result.expressions[i]);
    }
    std::string background;
    for (std::size_t i = 0; i < retrieved.size(); ++i) {
        if (i) background += "\n---\n";
        background += retrieved[i];
    }
    std::string history;
    for (const auto& m : session.messages) {
        if (!history.empty()) history += '\n';
        history += fmt::format("{}: {}", m.role == Role::human ? "Human" : "AI", m.text);
    }
    if (history.empty()) history = "(no messages yet)";

    const std::vector<std::pair<std::string, std::string>> values{
        {"fitness_name", std::string(fitness_display_name(cfg.fitness_id))},
        {"fitness_definition", std::string(fitness::fitness_definition(cfg.fitness_id))},
        {"dataset_name", result.dataset.name},
        {"instance_count", fmt::format("{}", result.dataset.instance_count)},
        {"feature_count", fmt::format("{}", result.dataset.feature_names.size())},
        {"class_count", fmt::format("{}", result.dataset.label_names.size())},
        {"population_size", fmt::format("{}", cfg.population_size)},
        {"generations", fmt::format("{}", cfg.generations)},
        {"final_dimensions", fmt::format("{}", cfg.final_dimensions)},
        {"bloat_control", describe_bloat(cfg.bloat)},
        {"feature_list", feature_text(result.dataset.feature_names)},
        {"expressions", expressions},
        {"accuracy_original", fmt::format("{:.4f}", result.accuracy_original)},
        {"accuracy_embedding", fmt::format("{:.4f}", result.accuracy_embedding)},
        {"word_limit", fmt::format("{}", session.word_limit)},
        {"background", background},
        {"initial_question", std::string(kInitialQuestion)},
        {"history", history},
    };

    std::string out;
    for (std::size_t p = 0; p < kPromptPartCount; ++p) {
        const auto part = static_cast<PromptPart>(p);
        if (part == PromptPart::background && retrieved.empty()) continue;
        if (!out.empty()) out += "\n\n";
        out += substitute(prompt.section(part), values);
    }
    out += '\n';
    return out;
}

} // namespace gp4nldr::explain
