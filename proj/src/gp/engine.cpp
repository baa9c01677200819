#include "gp4nldr/gp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "gp4nldr/gp/expression.hpp"
#include "gp4nldr/parallel.hpp"

namespace gp4nldr::gp {

std::size_t Individual::size() const noexcept {
    std::size_t n = 0;
    for (const auto& t : trees) n += node_count(t);
    return n;
}

std::string bloat_name(const BloatControl& bloat) {
    struct Visitor {
        std::string operator()(const NoBloatControl&) const { return "none"; }
        std::string operator()(const Lexicographic&) const { return "lexicographic"; }
        std::string operator()(const DoubleTournament&) const { return "double"; }
        std::string operator()(const Tarpeian&) const { return "tarpeian"; }
    };
    return std::visit(Visitor{}, bloat);
}

ConfigError::ConfigError(ConfigIssue issue)
    : std::invalid_argument(fmt::format("{}: {}", issue.field, issue.message)), issue_(std::move(issue)) {}

std::vector<ConfigIssue> validate(const RunConfig& c) {
    std::vector<ConfigIssue> issues;
    auto check = [&](bool ok, const char* field, std::string message) {
        if (!ok) issues.push_back({field, std::move(message)});
    };
    auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
    check(c.population_size >= 1, "population_size", "must be at least 1");
    check(c.generations >= 1, "generations", "must be at least 1");
    check(c.final_dimensions >= 1, "final_dimensions", "must be at least 1");
    check(c.tournament_size >= 1, "tournament_size", "must be at least 1");
    check(c.max_depth >= 1, "max_depth", "must be at least 1");
    check(c.init_min_depth <= c.init_max_depth, "init_min_depth", "must not exceed init_max_depth");
    check(c.init_max_depth <= c.max_depth, "init_max_depth", "must not exceed max_depth");
    check(probability(c.crossover_rate), "crossover_rate", "must be within [0, 1]");
    check(probability(c.mutation_rate), "mutation_rate", "must be within [0, 1]");
    check(c.crossover_rate + c.mutation_rate <= 1.0, "mutation_rate", "crossover_rate + mutation_rate must not exceed 1");
    check(c.elitism_count <= c.population_size, "elitism_count", "must not exceed population_size");
    if (const auto* d = std::get_if<DoubleTournament>(&c.bloat))
        check(probability(d->p_smaller), "bloat.p_smaller", "must be within [0, 1]");
    if (const auto* t = std::get_if<Tarpeian>(&c.bloat)) check(probability(t->p), "bloat.p", "must be within [0, 1]");
    return issues;
}

DatasetInfo describe(const data::Dataset& dataset) {
    return {dataset.name(), dataset.feature_names(), dataset.label_names(), dataset.instance_count()};
}

Matrix evaluate_individual(const Individual& individual, const Matrix& columns) {
    const std::size_t n = columns.cols();
    Matrix out(n, individual.trees.size());
    for (std::size_t j = 0; j < individual.trees.size(); ++j) {
        const auto values = evaluate_tree_columns(individual.trees[j], columns);
        for (std::size_t i = 0; i < n; ++i) out(i, j) = values[i];
    }
    return out;
}

namespace {

std::size_t uniform_index(std::size_t n, Rng& rng) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool chance(double p, Rng& rng) { return std::bernoulli_distribution(p)(rng); }

Node grow(std::size_t feature_count, std::size_t level, std::size_t min_depth, std::size_t max_depth, bool full, Rng& rng) {
    const bool leaf = level == max_depth || (!full && level >= min_depth && chance(0.5, rng));
    if (leaf) return Node::terminal(static_cast<std::uint32_t>(uniform_index(feature_count, rng)));
    const Op op = kFunctionSet[uniform_index(std::size(kFunctionSet), rng)];
    Node n{op, 0, {}};
    for (int i = 0; i < arity(op); ++i) n.children.push_back(grow(feature_count, level + 1, min_depth, max_depth, full, rng));
    return n;
}

void evaluate_all(Population& population, const std::vector<char>& pending, const Matrix& columns,
                  const fitness::FitnessFunction& fitness, std::size_t threads) {
    parallel_for(population.size(), threads, [&](std::size_t i) {
        if (!pending[i]) return;
        const double cost = fitness.cost(evaluate_individual(population[i], columns));
        population[i].fitness = std::isfinite(cost) ? cost : kWorstFitness;
    });
}

std::size_t best_index(const Population& population) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < population.size(); ++i) {
        if (fitter_then_smaller(population[i], population[best])) best = i;
    }
    return best;
}

} // namespace

Node grow_tree(std::size_t feature_count, std::size_t min_depth, std::size_t max_depth, bool full, Rng& rng) {
    return grow(feature_count, 0, min_depth, max_depth, full, rng);
}

Population init_population(const RunConfig& config, std::size_t feature_count, Rng& rng) {
    const std::size_t levels = config.init_max_depth - config.init_min_depth + 1;
    Population population(config.population_size);
    for (std::size_t i = 0; i < population.size(); ++i) {
        auto& ind = population[i];
        ind.trees.reserve(config.final_dimensions);
        for (std::size_t t = 0; t < config.final_dimensions; ++t) {
            const std::size_t slot = i * config.final_dimensions + t;
            const std::size_t target = config.init_min_depth + slot % levels;
            const bool full = (slot / levels) % 2 == 0;
            ind.trees.push_back(grow_tree(feature_count, config.init_min_depth, target, full, rng));
        }
    }
    return population;
}

bool fitter(const Individual& a, const Individual& b) noexcept {
    if (a.fitness < b.fitness) return true;
    if (a.fitness > b.fitness) return false;
    return a.fitness == kWorstFitness && a.size() < b.size();
}

bool fitter_then_smaller(const Individual& a, const Individual& b) noexcept {
    if (a.fitness != b.fitness) return a.fitness < b.fitness;
    return a.size() < b.size();
}

SelectionOutcome fitness_tournament(std::span<const Individual> population, std::size_t tournament_size,
                                    bool parsimony_ties, Rng& rng) {
    SelectionOutcome out;
    out.entrants.reserve(tournament_size);
    for (std::size_t t = 0; t < tournament_size; ++t) {
        const std::size_t i = uniform_index(population.size(), rng);
        out.entrants.push_back(i);
        if (t == 0) {
            out.winner = i;
            continue;
        }
        const auto& cand = population[i];
        const auto& best = population[out.winner];
        if (parsimony_ties ? fitter_then_smaller(cand, best) : fitter(cand, best)) out.winner = i;
    }
    return out;
}

namespace {

std::size_t size_contest(std::span<const Individual> population, std::size_t a, std::size_t b, double p_smaller,
                         Rng& rng) {
    const std::size_t sa = population[a].size();
    const std::size_t sb = population[b].size();
    if (sa == sb) return a;
    const std::size_t smaller = sa < sb ? a : b;
    const std::size_t larger = sa < sb ? b : a;
    return chance(p_smaller, rng) ? smaller : larger;
}

} // namespace

SelectionOutcome double_tournament(std::span<const Individual> population, std::size_t tournament_size,
                                   const DoubleTournament& settings, Rng& rng) {
    SelectionOutcome out;
    if (settings.fitness_first) {
        auto first = fitness_tournament(population, tournament_size, false, rng);
        auto second = fitness_tournament(population, tournament_size, false, rng);
        out.entrants = std::move(first.entrants);
        out.entrants.insert(out.entrants.end(), second.entrants.begin(), second.entrants.end());
        out.finalists = {first.winner, second.winner};
        out.winner = size_contest(population, first.winner, second.winner, settings.p_smaller, rng);
        return out;
    }
    std::vector<std::size_t> qualifiers;
    for (std::size_t t = 0; t < tournament_size; ++t) {
        const std::size_t a = uniform_index(population.size(), rng);
        const std::size_t b = uniform_index(population.size(), rng);
        out.entrants.push_back(a);
        out.entrants.push_back(b);
        qualifiers.push_back(size_contest(population, a, b, settings.p_smaller, rng));
    }
    out.winner = qualifiers.front();
    for (std::size_t q : qualifiers) {
        if (fitter(population[q], population[out.winner])) out.winner = q;
    }
    return out;
}

SelectionOutcome select(std::span<const Individual> population, const RunConfig& config, Rng& rng) {
    if (const auto* d = std::get_if<DoubleTournament>(&config.bloat))
        return double_tournament(population, config.tournament_size, *d, rng);
    const bool parsimony = std::holds_alternative<Lexicographic>(config.bloat);
    return fitness_tournament(population, config.tournament_size, parsimony, rng);
}

const Individual& select_parent(std::span<const Individual> population, const RunConfig& config, Rng& rng) {
    return population[select(population, config, rng).winner];
}

Population apply_tarpeian(const Population& population, double p, Rng& rng) {
    Population out = population;
    if (population.empty()) return out;
    double mean = 0.0;
    for (const auto& ind : population) mean += static_cast<double>(ind.size());
    mean /= static_cast<double>(population.size());
    for (auto& ind : out) {
        if (static_cast<double>(ind.size()) > mean && chance(p, rng)) ind.fitness = kWorstFitness;
    }
    return out;
}

std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b, std::size_t max_depth, Rng& rng) {
    Individual first{a.trees, kWorstFitness};
    Individual second{b.trees, kWorstFitness};
    const std::size_t t = uniform_index(a.trees.size(), rng);
    const std::size_t ia = uniform_index(node_count(a.trees[t]), rng);
    const std::size_t ib = uniform_index(node_count(b.trees[t]), rng);
    std::swap(subtree_at(first.trees[t], ia), subtree_at(second.trees[t], ib));
    if (depth(first.trees[t]) > max_depth) first.trees[t] = a.trees[t];
    if (depth(second.trees[t]) > max_depth) second.trees[t] = b.trees[t];
    return {std::move(first), std::move(second)};
}

Individual mutate(const Individual& individual, std::size_t feature_count, std::size_t max_depth, Rng& rng) {
    Individual out{individual.trees, kWorstFitness};
    const std::size_t t = uniform_index(out.trees.size(), rng);
    const std::size_t index = uniform_index(node_count(out.trees[t]), rng);
    const std::size_t level = depth_at(out.trees[t], index);
    const std::size_t limit = std::min<std::size_t>(3, max_depth > level ? max_depth - level : 0);
    subtree_at(out.trees[t], index) = grow_tree(feature_count, 0, limit, false, rng);
    return out;
}

RunResult evolve(const RunConfig& config, const data::Dataset& dataset, const fitness::FitnessFunction& fitness,
                 const EvolveOptions& options) {
    if (auto issues = validate(config); !issues.empty()) throw ConfigError(std::move(issues.front()));

    const Matrix columns = feature_columns(dataset.scaled());
    const std::size_t m = dataset.feature_count();
    const std::size_t pop_size = config.population_size;
    Rng rng(config.seed);

    Population population = init_population(config, m, rng);
    evaluate_all(population, std::vector<char>(pop_size, 1), columns, fitness, options.threads);

    RunResult result;
    result.config = config;
    result.dataset = describe(dataset);
    Individual best = population[best_index(population)];

    for (std::size_t generation = 0; generation < config.generations; ++generation) {
        if (generation > 0) {
            Population pool;
            std::span<const Individual> selectable = population;
            if (const auto* tarpeian = std::get_if<Tarpeian>(&config.bloat)) {
                pool = apply_tarpeian(population, tarpeian->p, rng);
                selectable = pool;
            }

            std::vector<std::size_t> ranked(pop_size);
            std::iota(ranked.begin(), ranked.end(), 0);
            std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t x, std::size_t y) {
                return fitter_then_smaller(population[x], population[y]);
            });

            Population next;
            next.reserve(pop_size);
            std::vector<char> pending;
            pending.reserve(pop_size);
            for (std::size_t e = 0; e < config.elitism_count; ++e) {
                next.push_back(population[ranked[e]]);
                pending.push_back(0);
            }
            auto parent = [&]() -> const Individual& { return population[select(selectable, config, rng).winner]; };
            while (next.size() < pop_size) {
                const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                if (u < config.crossover_rate) {
                    const Individual& a = parent();
                    const Individual& b = parent();
                    auto [c1, c2] = crossover(a, b, config.max_depth, rng);
                    next.push_back(std::move(c1));
                    pending.push_back(1);
                    if (next.size() < pop_size) {
                        next.push_back(std::move(c2));
                        pending.push_back(1);
                    }
                } else if (u < config.crossover_rate + config.mutation_rate) {
                    next.push_back(mutate(parent(), m, config.max_depth, rng));
                    pending.push_back(1);
                } else {
                    next.push_back(parent());
                    pending.push_back(0);
                }
            }
            evaluate_all(next, pending, columns, fitness, options.threads);
            population = std::move(next);
        }

        const auto& generation_best = population[best_index(population)];
        if (fitter_then_smaller(generation_best, best)) best = generation_best;
        result.fitness_history.push_back(generation_best.fitness);
        if (options.on_generation) options.on_generation(generation + 1, result.fitness_history);
    }

    result.best_individual = best;
    result.embedding = evaluate_individual(best, columns);
    for (const auto& tree : best.trees) result.expressions.push_back(render_expression(tree, dataset.feature_names()));
    return result;
}

} // namespace gp4nldr::gp
