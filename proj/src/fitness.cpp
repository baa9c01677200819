#include "gp4nldr/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace gp4nldr::fitness {

namespace {

void require_rows(const Matrix& embedding, std::size_t n) {
    if (embedding.rows() != n)
        throw FitnessError(fmt::format("embedding has {} rows, expected {}", embedding.rows(), n));
}

std::vector<std::uint32_t> nearest(const Matrix& points, std::size_t i, std::size_t k) {
    const std::size_t n = points.rows();
    std::vector<std::pair<double, std::uint32_t>> cand;
    cand.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        if (j != i) cand.emplace_back(squared_distance(points.row(i), points.row(j)), static_cast<std::uint32_t>(j));
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    std::vector<std::uint32_t> out(k);
    for (std::size_t a = 0; a < k; ++a) out[a] = cand[a].second;
    return out;
}

class NeighborhoodCost final : public FitnessFunction {
public:
    NeighborhoodCost(FitnessId id, NeighborTable table) : id_(id), table_(std::move(table)) {}
    [[nodiscard]] FitnessId id() const noexcept override { return id_; }
    [[nodiscard]] double cost(const Matrix& embedding) const override { return footrule_cost(embedding, table_); }

private:
    FitnessId id_;
    NeighborTable table_;
};

class DistanceCost final : public FitnessFunction {
public:
    explicit DistanceCost(const Matrix& scaled) : n_(scaled.rows()) {
        if (n_ < 2) throw FitnessError("nrmse needs at least two instances");
        original_.reserve(n_ * (n_ - 1) / 2);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i + 1; j < n_; ++j)
                original_.push_back(std::sqrt(squared_distance(scaled.row(i), scaled.row(j))));
        }
        const auto [lo, hi] = std::minmax_element(original_.begin(), original_.end());
        range_ = *hi - *lo;
    }
    [[nodiscard]] FitnessId id() const noexcept override { return FitnessId::nrmse; }
    [[nodiscard]] double cost(const Matrix& embedding) const override {
        require_rows(embedding, n_);
        double sum = 0.0;
        std::size_t p = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i + 1; j < n_; ++j, ++p) {
                const double diff = original_[p] - std::sqrt(squared_distance(embedding.row(i), embedding.row(j)));
                sum += diff * diff;
            }
        }
        const double rmse = std::sqrt(sum / static_cast<double>(original_.size()));
        return range_ > 0.0 ? rmse / range_ : rmse;
    }

private:
    std::size_t n_;
    std::vector<double> original_;
    double range_ = 0.0;
};

} // namespace

NeighborTable build_neighbor_table(const Matrix& scaled, std::size_t k) {
    const std::size_t n = scaled.rows();
    if (k < 1 || k >= n)
        throw FitnessError(fmt::format("neighbour count k={} must be in [1, n-1] with n={}", k, n));
    NeighborTable table{k, std::vector<std::vector<std::uint32_t>>(n)};
    for (std::size_t i = 0; i < n; ++i) table.neighbors[i] = nearest(scaled, i, k);
    return table;
}

std::size_t default_neighbor_count(std::size_t n) noexcept { return std::min<std::size_t>(n - 1, 15); }

std::vector<std::size_t> multiscale_positions(std::size_t n) {
    std::vector<std::size_t> out;
    for (std::size_t p = 1; n >= 2 && p <= n - 1; p *= 2) out.push_back(p);
    return out;
}

NeighborTable select_positions(const NeighborTable& full, const std::vector<std::size_t>& positions) {
    NeighborTable out{positions.size(), std::vector<std::vector<std::uint32_t>>(full.neighbors.size())};
    for (std::size_t i = 0; i < full.neighbors.size(); ++i) {
        out.neighbors[i].reserve(positions.size());
        for (std::size_t p : positions) {
            if (p < 1 || p > full.k) throw FitnessError("neighbour position outside the table");
            out.neighbors[i].push_back(full.neighbors[i][p - 1]);
        }
    }
    return out;
}

double footrule_cost(const Matrix& embedding, const NeighborTable& table) {
    const std::size_t n = table.neighbors.size();
    require_rows(embedding, n);
    const std::size_t k = table.k;
    const std::size_t worst = k * k / 2;
    if (n == 0 || worst == 0) return 0.0;

    double total = 0.0;
    std::vector<std::pair<double, std::uint32_t>> by_embedding(k);
    std::vector<std::size_t> rank_of(k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& nbrs = table.neighbors[i];
        for (std::size_t a = 0; a < k; ++a) {
            by_embedding[a] = {squared_distance(embedding.row(i), embedding.row(nbrs[a])), nbrs[a]};
        }
        // original position of each neighbour, looked up through a stable sort of positions
        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return by_embedding[x] < by_embedding[y]; });
        for (std::size_t r = 0; r < k; ++r) rank_of[order[r]] = r;
        std::size_t displacement = 0;
        for (std::size_t a = 0; a < k; ++a) displacement += a > rank_of[a] ? a - rank_of[a] : rank_of[a] - a;
        total += static_cast<double>(displacement) / static_cast<double>(worst);
    }
    return total / static_cast<double>(n);
}

double gpmal_cost(const Matrix& embedding, const NeighborTable& table) { return footrule_cost(embedding, table); }

double gpmal2_cost(const Matrix& embedding, const Matrix& scaled) {
    return make_fitness(FitnessId::gpmal2, scaled)->cost(embedding);
}

double nrmse_cost(const Matrix& embedding, const Matrix& scaled) { return DistanceCost(scaled).cost(embedding); }

std::string_view to_string(FitnessId id) noexcept {
    switch (id) {
    case FitnessId::gpmal: return "gpmal";
    case FitnessId::gpmal2: return "gpmal2";
    case FitnessId::nrmse: return "nrmse";
    }
    return "?";
}

std::optional<FitnessId> parse_fitness_id(std::string_view text) noexcept {
    for (auto id : {FitnessId::gpmal, FitnessId::gpmal2, FitnessId::nrmse}) {
        if (to_string(id) == text) return id;
    }
    return std::nullopt;
}

std::string_view fitness_definition(FitnessId id) noexcept {
    switch (id) {
    case FitnessId::gpmal:
        return "GP-MaL measures how well the embedding preserves each instance's neighbourhood. For every "
               "instance, its 15 nearest neighbours in the original (scaled) feature space are ranked by "
               "distance; the same neighbours are ranked again by distance in the embedding, and the cost "
               "is the average displacement between the two rankings, scaled to lie between 0 and 1. "
               "Lower is better; 0 means every neighbourhood ordering is kept exactly.";
    case FitnessId::gpmal2:
        return "GP-MaL-2 is a multi-scale version of GP-MaL. For every instance it takes the neighbours "
               "at positions 1, 2, 4, 8, 16 and so on in the original distance ordering, so both close "
               "and distant neighbours are represented, and measures how far their order in the "
               "embedding is displaced from their original order, scaled to lie between 0 and 1. Lower "
               "is better; 0 means the local and global orderings are all preserved.";
    case FitnessId::nrmse:
        return "NRMSE compares all pairwise distances between instances in the original (scaled) space "
               "with the corresponding distances in the embedding. It is the root mean squared "
               "difference divided by the range of the original distances. Lower is better; 0 means "
               "the embedding reproduces the original distances exactly.";
    }
    return {};
}

std::unique_ptr<FitnessFunction> make_fitness(FitnessId id, const Matrix& scaled) {
    const std::size_t n = scaled.rows();
    switch (id) {
    case FitnessId::gpmal:
        return std::make_unique<NeighborhoodCost>(id, build_neighbor_table(scaled, default_neighbor_count(n)));
    case FitnessId::gpmal2:
        return std::make_unique<NeighborhoodCost>(
            id, select_positions(build_neighbor_table(scaled, n - 1), multiscale_positions(n)));
    case FitnessId::nrmse:
        return std::make_unique<DistanceCost>(scaled);
    }
    throw FitnessError("unknown fitness id");
}

} // namespace gp4nldr::fitness
