#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gp4nldr/gp/tree.hpp"

namespace gp4nldr::gp {

class ExpressionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parenthesized prefix form, e.g. `(max (add f0 f1) f2)`.
///
/// Terminals print as the feature's name when `feature_names` covers the index, otherwise as
/// `f<index>`. Names that would not survive tokenization (whitespace, parentheses, `|`, an operator
/// symbol, or a name shadowing another feature's `f<index>` form) are written as `|name|` with
/// `\|` and `\\` escapes.
[[nodiscard]] std::string render_expression(const Node& tree, const std::vector<std::string>& feature_names = {});

/// Inverse of render_expression. Terminal tokens resolve against `feature_names` first, then as
/// `f<index>`.
[[nodiscard]] Node parse_expression(std::string_view text, const std::vector<std::string>& feature_names = {});

} // namespace gp4nldr::gp
