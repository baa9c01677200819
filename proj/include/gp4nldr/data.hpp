#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gp4nldr/matrix.hpp"

namespace gp4nldr::data {

/// Raised for structurally malformed CSV input. Row and column are 1-based positions in the file.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t col);
    [[nodiscard]] std::size_t row() const noexcept { return row_; }
    [[nodiscard]] std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

/// A feature cell that is not a real number (including empty, i.e. missing, cells).
class ValueError : public ParseError {
public:
    using ParseError::ParseError;
};

/// Structurally valid input that cannot form a dataset (too few rows, no label, ...).
class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Named tabular data with class labels. Immutable once built; the min-max scaled view is
/// computed on construction.
class Dataset {
public:
    Dataset(std::string name, std::vector<std::string> feature_names, Matrix rows, std::vector<std::string> labels,
            std::string label_name = "class");

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    [[nodiscard]] const Matrix& rows() const noexcept { return rows_; }
    [[nodiscard]] const Matrix& scaled() const noexcept { return scaled_; }
    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    [[nodiscard]] const std::string& label_name() const noexcept { return label_name_; }

    [[nodiscard]] std::size_t instance_count() const noexcept { return rows_.rows(); }
    [[nodiscard]] std::size_t feature_count() const noexcept { return rows_.cols(); }

    /// Distinct labels in order of first appearance.
    [[nodiscard]] std::vector<std::string> label_names() const;

private:
    std::string name_;
    std::vector<std::string> feature_names_;
    Matrix rows_;
    std::vector<std::string> labels_;
    std::string label_name_;
    Matrix scaled_;
};

struct CsvOptions {
    bool has_header = true;
    /// 0-based index or header name. Required.
    std::optional<std::variant<std::size_t, std::string>> label_column;
    std::string name = "dataset";
};

[[nodiscard]] Dataset load_csv(std::istream& in, const CsvOptions& options);
[[nodiscard]] Dataset load_csv_file(const std::string& path, const CsvOptions& options);

/// Writes a header row with the label column first, then one row per instance.
void write_csv(std::ostream& out, const Dataset& dataset);

/// ["f0", ..., "f{count-1}"]
[[nodiscard]] std::vector<std::string> assign_feature_names(std::size_t count);

/// Per-column (x - min) / (max - min); constant columns become all zeros.
[[nodiscard]] Matrix scale_minmax(const Matrix& rows);

/// Class-stratified random subsample of `count` instances (largest-remainder allocation per class),
/// preserving the original instance order.
[[nodiscard]] Dataset stratified_subsample(const Dataset& dataset, std::size_t count, std::uint64_t seed);

/// Parses a label-column selector given on a command line or in a request: digits are an index,
/// anything else a header name.
[[nodiscard]] std::variant<std::size_t, std::string> parse_label_selector(const std::string& text);

} // namespace gp4nldr::data
