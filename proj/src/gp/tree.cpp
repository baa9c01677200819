#include "gp4nldr/gp/tree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gp4nldr::gp {

std::string_view symbol(Op op) noexcept {
    switch (op) {
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::pdiv: return "pdiv";
    case Op::max: return "max";
    case Op::min: return "min";
    case Op::abs: return "abs";
    case Op::neg: return "neg";
    case Op::sigmoid: return "sigmoid";
    case Op::relu: return "relu";
    case Op::feature: return "feature";
    }
    return "?";
}

std::optional<Op> function_from_symbol(std::string_view text) noexcept {
    for (Op op : kFunctionSet) {
        if (symbol(op) == text) return op;
    }
    return std::nullopt;
}

Node Node::unary(Op op, Node child) {
    if (arity(op) != 1) throw std::invalid_argument("operator is not unary");
    Node n{op, 0, {}};
    n.children.push_back(std::move(child));
    return n;
}

Node Node::binary(Op op, Node left, Node right) {
    if (arity(op) != 2) throw std::invalid_argument("operator is not binary");
    Node n{op, 0, {}};
    n.children.reserve(2);
    n.children.push_back(std::move(left));
    n.children.push_back(std::move(right));
    return n;
}

std::size_t node_count(const Node& tree) noexcept {
    std::size_t n = 1;
    for (const auto& c : tree.children) n += node_count(c);
    return n;
}

std::size_t depth(const Node& tree) noexcept {
    std::size_t d = 0;
    for (const auto& c : tree.children) d = std::max(d, depth(c) + 1);
    return d;
}

namespace {

bool valid_within(const Node& node, std::size_t feature_count, std::size_t remaining) noexcept {
    if (node.children.size() != static_cast<std::size_t>(arity(node.op))) return false;
    if (node.is_terminal()) return node.feature < feature_count;
    if (remaining == 0) return false;
    return std::all_of(node.children.begin(), node.children.end(),
                       [&](const Node& c) { return valid_within(c, feature_count, remaining - 1); });
}

template <typename N>
N* find_preorder(N& node, std::size_t& remaining, std::size_t level, std::size_t& found_level) {
    if (remaining == 0) {
        found_level = level;
        return &node;
    }
    --remaining;
    for (auto& c : node.children) {
        if (auto* hit = find_preorder(c, remaining, level + 1, found_level)) return hit;
    }
    return nullptr;
}

template <typename N>
N& locate(N& tree, std::size_t index, std::size_t& level) {
    std::size_t remaining = index;
    auto* hit = find_preorder(tree, remaining, 0, level);
    if (!hit) throw std::out_of_range("subtree index out of range");
    return *hit;
}

} // namespace

bool is_valid(const Node& tree, std::size_t feature_count, std::size_t max_depth) noexcept {
    return valid_within(tree, feature_count, max_depth);
}

const Node& subtree_at(const Node& tree, std::size_t index) {
    std::size_t level = 0;
    return locate(tree, index, level);
}

Node& subtree_at(Node& tree, std::size_t index) {
    std::size_t level = 0;
    return locate(tree, index, level);
}

std::size_t depth_at(const Node& tree, std::size_t index) {
    std::size_t level = 0;
    (void)locate(tree, index, level);
    return level;
}

double apply(Op op, double a, double b) noexcept {
    double r = 0.0;
    switch (op) {
    case Op::add: r = a + b; break;
    case Op::sub: r = a - b; break;
    case Op::mul: r = a * b; break;
    case Op::pdiv: r = std::fabs(b) < kDivisionGuard ? 1.0 : a / b; break;
    case Op::max: r = std::max(a, b); break;
    case Op::min: r = std::min(a, b); break;
    case Op::abs: r = std::fabs(a); break;
    case Op::neg: r = -a; break;
    case Op::sigmoid: r = 1.0 / (1.0 + std::exp(-a)); break;
    case Op::relu: r = std::max(0.0, a); break;
    case Op::feature: r = a; break;
    }
    if (std::isnan(r)) return 0.0;
    return std::clamp(r, -kOutputBound, kOutputBound);
}

double evaluate_tree(const Node& tree, std::span<const double> row) {
    switch (arity(tree.op)) {
    case 0:
        return row[tree.feature];
    case 1:
        return apply(tree.op, evaluate_tree(tree.children[0], row));
    default:
        return apply(tree.op, evaluate_tree(tree.children[0], row), evaluate_tree(tree.children[1], row));
    }
}

Matrix feature_columns(const Matrix& data) {
    Matrix cols(data.cols(), data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t j = 0; j < data.cols(); ++j) cols(j, i) = data(i, j);
    }
    return cols;
}

std::vector<double> evaluate_tree_columns(const Node& tree, const Matrix& columns) {
    if (tree.is_terminal()) {
        const auto col = columns.row(tree.feature);
        return {col.begin(), col.end()};
    }
    auto left = evaluate_tree_columns(tree.children[0], columns);
    if (arity(tree.op) == 1) {
        for (double& v : left) v = apply(tree.op, v);
        return left;
    }
    const auto right = evaluate_tree_columns(tree.children[1], columns);
    for (std::size_t i = 0; i < left.size(); ++i) left[i] = apply(tree.op, left[i], right[i]);
    return left;
}

} // namespace gp4nldr::gp
