#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "gp4nldr/data.hpp"
#include "gp4nldr/forest.hpp"
#include "gp4nldr/gp/engine.hpp"

namespace gp4nldr::service {

struct PipelineOptions {
    std::size_t threads = 1;
    std::size_t forest_trees = 100;
    std::size_t folds = 10;
    std::function<void(std::size_t, const std::vector<double>&)> on_generation;
};

/// Forest settings used for a run's accuracy pair; the forest seed is the run seed.
[[nodiscard]] forest::ForestConfig forest_config_for(const gp::RunConfig& config, const PipelineOptions& options);

/// Evolves an embedding and computes its accuracy pair.
[[nodiscard]] gp::RunResult execute_run(const data::Dataset& dataset, const gp::RunConfig& config,
                                        const PipelineOptions& options = {});

} // namespace gp4nldr::service
