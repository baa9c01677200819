#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gp4nldr/data.hpp"
#include "gp4nldr/gp/engine.hpp"
#include "gp4nldr/matrix.hpp"

namespace support {

inline std::filesystem::path asset(const std::string& relative) { return std::filesystem::path(GP4NLDR_ASSET_DIR) / relative; }
inline std::filesystem::path golden(const std::string& name) { return std::filesystem::path(GP4NLDR_GOLDEN_DIR) / name; }

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

inline gp4nldr::data::Dataset load_wine() {
    gp4nldr::data::CsvOptions options;
    options.label_column = std::string("class");
    options.name = "wine";
    return gp4nldr::data::load_csv_file(asset("datasets/wine.csv").string(), options);
}

inline gp4nldr::data::Dataset load_coil_standin() {
    gp4nldr::data::CsvOptions options;
    options.has_header = false;
    options.label_column = std::size_t{1024};
    options.name = "coil20";
    return gp4nldr::data::load_csv_file(asset("datasets/coil20_standin.csv").string(), options);
}

inline gp4nldr::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, bool integer_grid = false) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> grid(0, 3);
    std::vector<std::vector<double>> data(rows, std::vector<double>(cols));
    for (auto& row : data)
        for (auto& v : row) v = integer_grid ? grid(rng) : unit(rng);
    return gp4nldr::Matrix::from_rows(data);
}

// Brute-force reference implementations. They avoid the library's helpers on purpose: distances
// are recomputed with plain loops and ranks are obtained by counting rather than sorting.
namespace oracle {

inline double distance(const gp4nldr::Matrix& x, std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
    return std::sqrt(s);
}

// Position (0-based) of j in i's ordering of all other points by (distance, index).
inline std::size_t rank_of(const gp4nldr::Matrix& x, std::size_t i, std::size_t j, const std::vector<std::size_t>& among) {
    const double dj = distance(x, i, j);
    std::size_t r = 0;
    for (std::size_t o : among) {
        if (o == j) continue;
        const double d = distance(x, i, o);
        if (d < dj || (d == dj && o < j)) ++r;
    }
    return r;
}

// Full original-space order of every other point, by counting ranks.
inline std::vector<std::size_t> full_order(const gp4nldr::Matrix& x, std::size_t i) {
    const std::size_t n = x.rows();
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < n; ++j)
        if (j != i) others.push_back(j);
    std::vector<std::size_t> order(others.size());
    for (std::size_t j : others) order[rank_of(x, i, j, others)] = j;
    return order;
}

inline std::vector<std::vector<std::size_t>> neighbors(const gp4nldr::Matrix& x, std::size_t k) {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto order = full_order(x, i);
        order.resize(k);
        out.push_back(order);
    }
    return out;
}

// Footrule over the original-space neighbours at the given 1-based positions.
inline double footrule(const gp4nldr::Matrix& embedding, const gp4nldr::Matrix& original, const std::vector<std::size_t>& positions) {
    const std::size_t n = original.rows();
    const std::size_t p = positions.size();
    const double worst = std::floor(static_cast<double>(p * p) / 2.0);
    if (worst == 0.0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto order = full_order(original, i);
        std::vector<std::size_t> chosen;
        for (std::size_t pos : positions) chosen.push_back(order[pos - 1]);
        double cost = 0.0;
        for (std::size_t a = 0; a < p; ++a) {
            const double r = static_cast<double>(rank_of(embedding, i, chosen[a], chosen));
            cost += std::fabs(static_cast<double>(a) - r);
        }
        total += cost / worst;
    }
    return total / static_cast<double>(n);
}

inline double gpmal(const gp4nldr::Matrix& embedding, const gp4nldr::Matrix& original) {
    const std::size_t k = std::min<std::size_t>(original.rows() - 1, 15);
    std::vector<std::size_t> positions;
    for (std::size_t a = 1; a <= k; ++a) positions.push_back(a);
    return footrule(embedding, original, positions);
}

inline double gpmal2(const gp4nldr::Matrix& embedding, const gp4nldr::Matrix& original) {
    std::vector<std::size_t> positions;
    for (std::size_t a = 1; a <= original.rows() - 1; a *= 2) positions.push_back(a);
    return footrule(embedding, original, positions);
}

inline double nrmse(const gp4nldr::Matrix& embedding, const gp4nldr::Matrix& original) {
    const std::size_t n = original.rows();
    double sum = 0.0, lo = INFINITY, hi = -INFINITY;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double o = distance(original, i, j);
            const double e = distance(embedding, i, j);
            sum += (o - e) * (o - e);
            lo = std::min(lo, o);
            hi = std::max(hi, o);
            ++pairs;
        }
    }
    const double rmse = std::sqrt(sum / static_cast<double>(pairs));
    return hi - lo > 0.0 ? rmse / (hi - lo) : rmse;
}

} // namespace oracle

} // namespace support
