#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "gp4nldr/matrix.hpp"

namespace gp4nldr::fitness {

class FitnessError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// For each instance, its nearest neighbours in the original space, nearest first. Distance ties
/// go to the lower instance index. Built once per run.
struct NeighborTable {
    std::size_t k = 0;
    std::vector<std::vector<std::uint32_t>> neighbors;
};

/// Exact k-NN by full pairwise Euclidean distance. Requires 1 <= k <= n - 1.
[[nodiscard]] NeighborTable build_neighbor_table(const Matrix& scaled, std::size_t k);

/// min(n - 1, 15)
[[nodiscard]] std::size_t default_neighbor_count(std::size_t n) noexcept;

/// Neighbour positions {1, 2, 4, 8, ...} not exceeding n - 1.
[[nodiscard]] std::vector<std::size_t> multiscale_positions(std::size_t n);

/// Keeps only the neighbours at the given 1-based positions of a full-order table.
[[nodiscard]] NeighborTable select_positions(const NeighborTable& full, const std::vector<std::size_t>& positions);

/// Mean normalized Spearman footrule between each instance's table order and the order of the
/// same neighbours by embedding distance (ties by index). 0 when every order is preserved, 1 at
/// worst; each instance's displacement is divided by floor(k^2 / 2), the largest possible.
[[nodiscard]] double footrule_cost(const Matrix& embedding, const NeighborTable& table);

/// Neighbourhood-order preservation over the k nearest neighbours (see footrule_cost).
[[nodiscard]] double gpmal_cost(const Matrix& embedding, const NeighborTable& table);

/// The same footrule over neighbours at multiscale_positions(n), so near and far structure both count.
[[nodiscard]] double gpmal2_cost(const Matrix& embedding, const Matrix& scaled);

/// RMS difference of pairwise distances (original vs embedding) divided by the range of the
/// original pairwise distances; the raw RMS is returned when that range is zero. Requires n >= 2.
[[nodiscard]] double nrmse_cost(const Matrix& embedding, const Matrix& scaled);

enum class FitnessId { gpmal, gpmal2, nrmse };

[[nodiscard]] std::string_view to_string(FitnessId id) noexcept;
[[nodiscard]] std::optional<FitnessId> parse_fitness_id(std::string_view text) noexcept;

/// Plain-language description of what a cost measures, as given to the explanation prompt.
[[nodiscard]] std::string_view fitness_definition(FitnessId id) noexcept;

/// A cost bound to one dataset; whatever depends only on the original space is precomputed.
class FitnessFunction {
public:
    virtual ~FitnessFunction() = default;
    [[nodiscard]] virtual FitnessId id() const noexcept = 0;
    /// Lower is better. Must be safe to call concurrently.
    [[nodiscard]] virtual double cost(const Matrix& embedding) const = 0;
};

[[nodiscard]] std::unique_ptr<FitnessFunction> make_fitness(FitnessId id, const Matrix& scaled);

} // namespace gp4nldr::fitness
