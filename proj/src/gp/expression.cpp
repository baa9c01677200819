#include "gp4nldr/gp/expression.hpp"

#include <cctype>
#include <charconv>
#include <optional>
#include <unordered_map>

#include <fmt/format.h>

namespace gp4nldr::gp {

namespace {

std::optional<std::uint32_t> generic_index(std::string_view token) {
    if (token.size() < 2 || token.front() != 'f') return std::nullopt;
    std::uint32_t v = 0;
    const auto* first = token.data() + 1;
    const auto* last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    if (token.size() > 2 && token[1] == '0') return std::nullopt;
    return v;
}

bool needs_quotes(std::string_view name, std::size_t own_index) {
    if (name.empty()) return true;
    for (char c : name) {
        if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '|' || c == '\\') return true;
    }
    if (function_from_symbol(name)) return true;
    if (const auto idx = generic_index(name); idx && *idx != own_index) return true;
    return false;
}

void render_into(const Node& node, const std::vector<std::string>& names, std::string& out) {
    if (node.is_terminal()) {
        if (node.feature < names.size()) {
            const auto& name = names[node.feature];
            if (!needs_quotes(name, node.feature)) {
                out += name;
                return;
            }
            out.push_back('|');
            for (char c : name) {
                if (c == '|' || c == '\\') out.push_back('\\');
                out.push_back(c);
            }
            out.push_back('|');
            return;
        }
        out += fmt::format("f{}", node.feature);
        return;
    }
    out.push_back('(');
    out += symbol(node.op);
    for (const auto& c : node.children) {
        out.push_back(' ');
        render_into(c, names, out);
    }
    out.push_back(')');
}

class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& names) : text_(text), names_(names) {
        for (std::size_t i = 0; i < names.size(); ++i) by_name_.emplace(names[i], static_cast<std::uint32_t>(i));
    }

    Node parse() {
        Node n = node();
        skip_space();
        if (pos_ != text_.size()) fail("trailing characters");
        return n;
    }

private:
    [[noreturn]] void fail(std::string_view what) const {
        throw ExpressionError(fmt::format("{} at offset {} in expression", what, pos_));
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    Node node() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end");
        if (text_[pos_] == '(') {
            ++pos_;
            skip_space();
            const auto sym = bare_token();
            const auto op = function_from_symbol(sym);
            if (!op) fail(fmt::format("unknown operator '{}'", sym));
            Node n{*op, 0, {}};
            for (int i = 0; i < arity(*op); ++i) n.children.push_back(node());
            skip_space();
            if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
            ++pos_;
            return n;
        }
        if (text_[pos_] == ')') fail("unexpected ')'");
        const bool quoted = text_[pos_] == '|';
        const std::string token = quoted ? quoted_token() : std::string(bare_token());
        if (const auto it = by_name_.find(token); it != by_name_.end()) return Node::terminal(it->second);
        if (!quoted) {
            if (const auto idx = generic_index(token)) return Node::terminal(*idx);
        }
        fail(fmt::format("unknown feature '{}'", token));
    }

    std::string_view bare_token() {
        const auto start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
               text_[pos_] != ')')
            ++pos_;
        if (start == pos_) fail("expected a token");
        return text_.substr(start, pos_ - start);
    }

    std::string quoted_token() {
        ++pos_;
        std::string out;
        while (pos_ < text_.size() && text_[pos_] != '|') {
            if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
            out.push_back(text_[pos_++]);
        }
        if (pos_ >= text_.size()) fail("unterminated quoted name");
        ++pos_;
        return out;
    }

    std::string_view text_;
    const std::vector<std::string>& names_;
    std::unordered_map<std::string, std::uint32_t> by_name_;
    std::size_t pos_ = 0;
};

} // namespace

std::string render_expression(const Node& tree, const std::vector<std::string>& feature_names) {
    std::string out;
    render_into(tree, feature_names, out);
    return out;
}

Node parse_expression(std::string_view text, const std::vector<std::string>& feature_names) {
    return Parser(text, feature_names).parse();
}

} // namespace gp4nldr::gp
