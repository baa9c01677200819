#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gp4nldr/data.hpp"
#include "gp4nldr/fitness.hpp"
#include "gp4nldr/gp/tree.hpp"

namespace gp4nldr::gp {

using Rng = std::mt19937_64;

/// Fitness value that loses to every finite fitness (unevaluated, non-finite or Tarpeian-penalized).
inline constexpr double kWorstFitness = std::numeric_limits<double>::infinity();

/// One embedding: a tree per output dimension.
struct Individual {
    std::vector<Node> trees;
    double fitness = kWorstFitness;

    /// Total node count across all trees.
    [[nodiscard]] std::size_t size() const noexcept;
    bool operator==(const Individual&) const = default;
};

using Population = std::vector<Individual>;

struct NoBloatControl {
    bool operator==(const NoBloatControl&) const = default;
};
/// Tournament by fitness, equal fitness resolved in favour of the smaller individual.
struct Lexicographic {
    bool operator==(const Lexicographic&) const = default;
};
/// A fitness tournament and a two-way size tournament, composed in either order. The size
/// tournament returns the smaller contestant with probability p_smaller.
struct DoubleTournament {
    bool fitness_first = true;
    double p_smaller = 0.7;
    bool operator==(const DoubleTournament&) const = default;
};
/// Before each round of selection, individuals larger than the population's mean size get the
/// worst fitness with probability p.
struct Tarpeian {
    double p = 0.3;
    bool operator==(const Tarpeian&) const = default;
};
using BloatControl = std::variant<NoBloatControl, Lexicographic, DoubleTournament, Tarpeian>;

[[nodiscard]] std::string bloat_name(const BloatControl& bloat);

struct RunConfig {
    std::size_t population_size = 100;
    std::size_t generations = 100;
    std::size_t final_dimensions = 2;
    fitness::FitnessId fitness_id = fitness::FitnessId::gpmal;
    BloatControl bloat = Lexicographic{};
    std::uint64_t seed = 0;
    std::size_t max_depth = 8;
    std::size_t init_min_depth = 2;
    std::size_t init_max_depth = 6;
    std::size_t tournament_size = 7;
    double crossover_rate = 0.8;
    double mutation_rate = 0.15;
    std::size_t elitism_count = 1;

    bool operator==(const RunConfig&) const = default;
};

/// One problem with a RunConfig field.
struct ConfigIssue {
    std::string field;
    std::string message;
};

/// Empty when the configuration is usable.
[[nodiscard]] std::vector<ConfigIssue> validate(const RunConfig& config);

class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(ConfigIssue issue);
    [[nodiscard]] const ConfigIssue& issue() const noexcept { return issue_; }

private:
    ConfigIssue issue_;
};

/// Dataset metadata carried with a result. Never holds row values.
struct DatasetInfo {
    std::string name;
    std::vector<std::string> feature_names;
    std::vector<std::string> label_names;
    std::size_t instance_count = 0;

    bool operator==(const DatasetInfo&) const = default;
};

[[nodiscard]] DatasetInfo describe(const data::Dataset& dataset);

struct RunResult {
    RunConfig config;
    DatasetInfo dataset;
    std::vector<std::string> expressions;
    Individual best_individual;
    Matrix embedding;
    std::vector<double> fitness_history;
    /// NaN until the accuracy pair has been computed.
    double accuracy_original = std::numeric_limits<double>::quiet_NaN();
    double accuracy_embedding = std::numeric_limits<double>::quiet_NaN();
};

/// Column j is trees[j] evaluated on every row of `columns` (see feature_columns()).
[[nodiscard]] Matrix evaluate_individual(const Individual& individual, const Matrix& columns);

/// Grows a tree whose depth lies in [min_depth, max_depth]: `full` places every leaf at
/// max_depth, otherwise branches may stop at any level from min_depth on.
[[nodiscard]] Node grow_tree(std::size_t feature_count, std::size_t min_depth, std::size_t max_depth, bool full, Rng& rng);

/// Ramped half-and-half over depths [init_min_depth, init_max_depth].
[[nodiscard]] Population init_population(const RunConfig& config, std::size_t feature_count, Rng& rng);

/// Entrants (population indices, in draw order) and winner of one selection event.
struct SelectionOutcome {
    std::size_t winner = 0;
    std::vector<std::size_t> entrants;
    /// The two individuals that met in a double tournament's final comparison (empty otherwise).
    std::vector<std::size_t> finalists;
};

/// `a` beats `b` on fitness alone; worst-fitness ties go to the smaller individual.
[[nodiscard]] bool fitter(const Individual& a, const Individual& b) noexcept;
/// `a` beats `b` on fitness, then on size.
[[nodiscard]] bool fitter_then_smaller(const Individual& a, const Individual& b) noexcept;

[[nodiscard]] SelectionOutcome fitness_tournament(std::span<const Individual> population, std::size_t tournament_size,
                                                  bool parsimony_ties, Rng& rng);
[[nodiscard]] SelectionOutcome double_tournament(std::span<const Individual> population, std::size_t tournament_size,
                                                 const DoubleTournament& settings, Rng& rng);

/// Selection according to the configured bloat control. Under Tarpeian the population passed in
/// should already be penalized with apply_tarpeian().
[[nodiscard]] SelectionOutcome select(std::span<const Individual> population, const RunConfig& config, Rng& rng);
[[nodiscard]] const Individual& select_parent(std::span<const Individual> population, const RunConfig& config, Rng& rng);

/// Copy of the population with above-mean-size individuals penalized with probability p.
[[nodiscard]] Population apply_tarpeian(const Population& population, double p, Rng& rng);

/// Subtree exchange within one randomly chosen dimension. An offspring tree deeper than
/// max_depth is replaced by the corresponding parent tree.
[[nodiscard]] std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b, std::size_t max_depth,
                                                          Rng& rng);

/// Replaces a random node of one random dimension with a fresh subtree of depth <= 3 that keeps
/// the tree within max_depth.
[[nodiscard]] Individual mutate(const Individual& individual, std::size_t feature_count, std::size_t max_depth, Rng& rng);

struct EvolveOptions {
    /// Worker threads for fitness evaluation; 0 uses the hardware concurrency. Results do not depend on it.
    std::size_t threads = 1;
    /// Called after every generation with the generation count so far and the history.
    std::function<void(std::size_t, const std::vector<double>&)> on_generation;
};

/// Generational loop: the initial population counts as the first generation and each following
/// generation is bred from the previous one (elites copied unchanged). The best fitness of every
/// generation is recorded. Deterministic for a given config, dataset and seed.
[[nodiscard]] RunResult evolve(const RunConfig& config, const data::Dataset& dataset,
                               const fitness::FitnessFunction& fitness, const EvolveOptions& options = {});

} // namespace gp4nldr::gp
