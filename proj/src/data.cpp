#include "gp4nldr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

namespace gp4nldr::data {

ParseError::ParseError(const std::string& what, std::size_t row, std::size_t col)
    : std::runtime_error(fmt::format("{} (row {}, column {})", what, row, col)), row_(row), col_(col) {}

Dataset::Dataset(std::string name, std::vector<std::string> feature_names, Matrix rows, std::vector<std::string> labels,
                 std::string label_name)
    : name_(std::move(name)),
      feature_names_(std::move(feature_names)),
      rows_(std::move(rows)),
      labels_(std::move(labels)),
      label_name_(std::move(label_name)) {
    if (rows_.rows() < 2) throw DatasetError("a dataset needs at least two rows");
    if (rows_.cols() < 1) throw DatasetError("a dataset needs at least one feature column");
    if (labels_.size() != rows_.rows()) throw DatasetError("label count does not match row count");
    if (feature_names_.size() != rows_.cols()) throw DatasetError("feature name count does not match column count");
    std::set<std::string> seen;
    for (const auto& n : feature_names_) {
        if (!seen.insert(n).second) throw DatasetError(fmt::format("duplicate feature name '{}'", n));
    }
    for (double v : rows_.values()) {
        if (!std::isfinite(v)) throw DatasetError("feature values must be finite");
    }
    scaled_ = scale_minmax(rows_);
}

std::vector<std::string> Dataset::label_names() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& l : labels_) {
        if (seen.insert(l).second) out.push_back(l);
    }
    return out;
}

namespace {

struct CsvRecord {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

// RFC 4180 style: quoted fields may contain commas, doubled quotes and newlines.
std::vector<CsvRecord> read_records(std::istream& in) {
    std::vector<CsvRecord> records;
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);

    CsvRecord current;
    std::string field;
    std::size_t line = 1;
    current.line = 1;
    bool in_quotes = false;
    bool field_was_quoted = false;
    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        const bool blank = current.fields.size() == 1 && current.fields.front().empty();
        if (!blank) records.push_back(std::move(current));
        current = CsvRecord{};
        current.line = line;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field.empty() || field_was_quoted)
                throw ParseError("unexpected quote inside an unquoted field", line, current.fields.size() + 1);
            in_quotes = true;
            field_was_quoted = true;
            break;
        case ',':
            end_field();
            break;
        case '\r':
            break;
        case '\n':
            ++line;
            end_record();
            break;
        default:
            if (field_was_quoted)
                throw ParseError("characters after closing quote", line, current.fields.size() + 1);
            field.push_back(c);
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted field", line, current.fields.size() + 1);
    if (!field.empty() || !current.fields.empty() || field_was_quoted) end_record();
    return records;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_real(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

} // namespace

Dataset load_csv(std::istream& in, const CsvOptions& options) {
    if (!options.label_column) throw DatasetError("a label column is required");
    auto records = read_records(in);
    if (records.empty()) throw DatasetError("empty dataset");

    const std::size_t width = records.front().fields.size();
    for (const auto& r : records) {
        if (r.fields.size() != width)
            throw ParseError(fmt::format("expected {} fields, found {}", width, r.fields.size()), r.line,
                             std::min(width, r.fields.size()) + 1);
    }

    std::vector<std::string> header;
    std::size_t first_data = 0;
    if (options.has_header) {
        for (const auto& f : records.front().fields) header.push_back(trim(f));
        first_data = 1;
    }

    std::size_t label_index = 0;
    if (const auto* idx = std::get_if<std::size_t>(&*options.label_column)) {
        label_index = *idx;
    } else {
        const auto& wanted = std::get<std::string>(*options.label_column);
        if (!options.has_header) throw DatasetError("a label column name requires a header row");
        const auto it = std::find(header.begin(), header.end(), wanted);
        if (it == header.end()) throw DatasetError(fmt::format("label column '{}' not found in header", wanted));
        label_index = static_cast<std::size_t>(it - header.begin());
    }
    if (label_index >= width)
        throw DatasetError(fmt::format("label column index {} out of range ({} columns)", label_index, width));
    if (width < 2) throw DatasetError("no feature columns besides the label column");

    const std::size_t n = records.size() - first_data;
    if (n < 2) throw DatasetError("a dataset needs at least two rows");

    std::vector<std::string> feature_names;
    if (options.has_header) {
        for (std::size_t j = 0; j < width; ++j) {
            if (j != label_index) feature_names.push_back(header[j]);
        }
    } else {
        feature_names = assign_feature_names(width - 1);
    }

    Matrix rows(n, width - 1);
    std::vector<std::string> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = records[first_data + i];
        std::size_t out_col = 0;
        for (std::size_t j = 0; j < width; ++j) {
            if (j == label_index) {
                auto label = trim(rec.fields[j]);
                if (label.empty()) throw ValueError("missing class label", rec.line, j + 1);
                labels.push_back(std::move(label));
                continue;
            }
            const auto value = parse_real(trim(rec.fields[j]));
            if (!value)
                throw ValueError(fmt::format("non-numeric feature value '{}'", rec.fields[j]), rec.line, j + 1);
            rows(i, out_col++) = *value;
        }
    }
    const std::string label_name = options.has_header ? header[label_index] : std::string("class");
    return Dataset(options.name, std::move(feature_names), std::move(rows), std::move(labels), label_name);
}

Dataset load_csv_file(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError(fmt::format("cannot open '{}'", path));
    return load_csv(in, options);
}

namespace {
std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos && trim(s) == s) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}
} // namespace

void write_csv(std::ostream& out, const Dataset& dataset) {
    out << csv_escape(dataset.label_name());
    for (const auto& n : dataset.feature_names()) out << ',' << csv_escape(n);
    out << '\n';
    const auto& rows = dataset.rows();
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        out << csv_escape(dataset.labels()[i]);
        for (double v : rows.row(i)) out << ',' << fmt::format("{}", v);
        out << '\n';
    }
}

std::vector<std::string> assign_feature_names(std::size_t count) {
    std::vector<std::string> names;
    names.reserve(count);
    for (std::size_t i = 0; i < count; ++i) names.push_back(fmt::format("f{}", i));
    return names;
}

Matrix scale_minmax(const Matrix& rows) {
    Matrix out(rows.rows(), rows.cols());
    for (std::size_t j = 0; j < rows.cols(); ++j) {
        double lo = rows(0, j);
        double hi = rows(0, j);
        for (std::size_t i = 1; i < rows.rows(); ++i) {
            lo = std::min(lo, rows(i, j));
            hi = std::max(hi, rows(i, j));
        }
        const double span = hi - lo;
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            // clamp guards the last ulp of rounding in (x - lo) / span
            out(i, j) = span > 0.0 ? std::clamp((rows(i, j) - lo) / span, 0.0, 1.0) : 0.0;
        }
    }
    return out;
}

Dataset stratified_subsample(const Dataset& dataset, std::size_t count, std::uint64_t seed) {
    const std::size_t n = dataset.instance_count();
    if (count < 2 || count > n) throw DatasetError(fmt::format("subsample size must be in [2, {}]", n));

    const auto classes = dataset.label_names();
    std::unordered_map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) members[dataset.labels()[i]].push_back(i);

    // largest-remainder allocation of `count` across classes
    std::vector<std::size_t> quota(classes.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t allocated = 0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const double exact = static_cast<double>(count) * static_cast<double>(members[classes[c]].size()) /
                             static_cast<double>(n);
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        allocated += quota[c];
        remainders.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; allocated < count; ++r, ++allocated) ++quota[remainders[r % remainders.size()].second];

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        auto pool = members[classes[c]];
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(std::min(quota[c], pool.size()));
        chosen.insert(chosen.end(), pool.begin(), pool.end());
    }
    std::sort(chosen.begin(), chosen.end());

    Matrix rows(chosen.size(), dataset.feature_count());
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const auto src = dataset.rows().row(chosen[i]);
        std::copy(src.begin(), src.end(), rows.row(i).begin());
        labels.push_back(dataset.labels()[chosen[i]]);
    }
    return Dataset(dataset.name(), dataset.feature_names(), std::move(rows), std::move(labels), dataset.label_name());
}

std::variant<std::size_t, std::string> parse_label_selector(const std::string& text) {
    std::size_t index = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), index);
    if (!text.empty() && ec == std::errc{} && ptr == text.data() + text.size()) return index;
    return text;
}

} // namespace gp4nldr::data
