#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gp4nldr/matrix.hpp"

namespace gp4nldr::gp {

enum class Op : std::uint8_t {
    add,
    sub,
    mul,
    pdiv,
    max,
    min,
    abs,
    neg,
    sigmoid,
    relu,
    feature,
};

inline constexpr Op kFunctionSet[] = {Op::add, Op::sub, Op::mul, Op::pdiv, Op::max,
                                      Op::min, Op::abs, Op::neg, Op::sigmoid, Op::relu};

/// |denominator| below this makes pdiv return 1.
inline constexpr double kDivisionGuard = 1e-9;
/// Every operator output is saturated to [-kOutputBound, kOutputBound] so nested products stay finite.
inline constexpr double kOutputBound = 1e100;

[[nodiscard]] constexpr int arity(Op op) noexcept {
    switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::pdiv:
    case Op::max:
    case Op::min:
        return 2;
    case Op::abs:
    case Op::neg:
    case Op::sigmoid:
    case Op::relu:
        return 1;
    case Op::feature:
        return 0;
    }
    return 0;
}

[[nodiscard]] std::string_view symbol(Op op) noexcept;
[[nodiscard]] std::optional<Op> function_from_symbol(std::string_view text) noexcept;

/// Expression tree node. Terminals reference a feature column by index.
struct Node {
    Op op = Op::feature;
    std::uint32_t feature = 0;
    std::vector<Node> children;

    [[nodiscard]] static Node terminal(std::uint32_t index) { return Node{Op::feature, index, {}}; }
    [[nodiscard]] static Node unary(Op op, Node child);
    [[nodiscard]] static Node binary(Op op, Node left, Node right);

    [[nodiscard]] bool is_terminal() const noexcept { return op == Op::feature; }

    bool operator==(const Node&) const = default;
};

[[nodiscard]] std::size_t node_count(const Node& tree) noexcept;
/// Edges on the longest root-to-leaf path; a lone terminal has depth 0.
[[nodiscard]] std::size_t depth(const Node& tree) noexcept;
/// Arity, feature range and depth limit.
[[nodiscard]] bool is_valid(const Node& tree, std::size_t feature_count, std::size_t max_depth) noexcept;

/// Preorder addressing: index 0 is the root.
[[nodiscard]] const Node& subtree_at(const Node& tree, std::size_t index);
[[nodiscard]] Node& subtree_at(Node& tree, std::size_t index);
/// Depth of the node at preorder `index` below the root.
[[nodiscard]] std::size_t depth_at(const Node& tree, std::size_t index);

/// Applies one operator with the protection rules (pdiv guard, output saturation, NaN to 0).
[[nodiscard]] double apply(Op op, double a, double b = 0.0) noexcept;

[[nodiscard]] double evaluate_tree(const Node& tree, std::span<const double> row);

/// Feature-major copy of a data matrix: columns.row(j) is feature j over all instances.
[[nodiscard]] Matrix feature_columns(const Matrix& data);

/// Evaluates a tree over every instance at once; `columns` comes from feature_columns().
[[nodiscard]] std::vector<double> evaluate_tree_columns(const Node& tree, const Matrix& columns);

} // namespace gp4nldr::gp
