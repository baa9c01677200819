#include "gp4nldr/service/pipeline.hpp"

#include <algorithm>

namespace gp4nldr::service {

forest::ForestConfig forest_config_for(const gp::RunConfig& config, const PipelineOptions& options) {
    forest::ForestConfig fc;
    fc.n_trees = options.forest_trees;
    fc.seed = config.seed;
    fc.threads = options.threads;
    return fc;
}

gp::RunResult execute_run(const data::Dataset& dataset, const gp::RunConfig& config, const PipelineOptions& options) {
    if (auto issues = gp::validate(config); !issues.empty()) throw gp::ConfigError(std::move(issues.front()));
    const auto cost = fitness::make_fitness(config.fitness_id, dataset.scaled());
    gp::EvolveOptions evolve_options{options.threads, options.on_generation};
    auto result = gp::evolve(config, dataset, *cost, evolve_options);
    const auto [original, embedded] = forest::accuracy_pair(dataset, result.embedding, forest_config_for(config, options),
                                                               std::min(options.folds, dataset.instance_count()));
    result.accuracy_original = original;
    result.accuracy_embedding = embedded;
    return result;
}

} // namespace gp4nldr::service
