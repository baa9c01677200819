#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gp4nldr/data.hpp"
#include "gp4nldr/matrix.hpp"

namespace gp4nldr::forest {

struct ForestConfig {
    std::size_t n_trees = 100;
    /// Candidate features per split; ceil(sqrt(p)) when unset.
    std::optional<std::size_t> features_per_split;
    bool bootstrap = true;
    std::uint64_t seed = 0;
    /// Trees are trained on this many threads (0 = hardware concurrency); results do not depend on it.
    std::size_t threads = 1;
};

/// Maps labels to dense codes in order of first appearance.
[[nodiscard]] std::vector<int> encode_labels(const std::vector<std::string>& labels);

/// CART classifier: Gini impurity, thresholds at midpoints between distinct sorted values, grown
/// until pure or unsplittable. Equal split scores go to the lower feature index, then the lower threshold.
class DecisionTree {
public:
    /// `samples` lists training rows of X, repeated for bootstrap multiplicity.
    void fit(const Matrix& X, std::span<const int> y, std::span<const std::size_t> samples, std::size_t features_per_split,
             std::mt19937_64& rng);
    [[nodiscard]] int predict(std::span<const double> row) const;
    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }

private:
    struct Node {
        int label = 0;
        std::size_t feature = 0;
        double threshold = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
        bool leaf = true;
    };

    std::size_t build(const Matrix& X, std::span<const int> y, std::vector<std::size_t>& samples, std::size_t features_per_split,
                      std::mt19937_64& rng);

    std::vector<Node> nodes_;
    int classes_ = 0;
};

class RandomForest {
public:
    void fit(const Matrix& X, std::span<const int> y, std::span<const std::size_t> train_rows, const ForestConfig& config);
    [[nodiscard]] int predict(std::span<const double> row) const;

private:
    std::vector<DecisionTree> trees_;
    int classes_ = 0;
};

/// Stratified fold index per instance: each class is shuffled and dealt round-robin, continuing
/// the deal across classes so fold sizes differ by at most one.
[[nodiscard]] std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t folds, std::uint64_t seed);

/// Mean over folds of random-forest test accuracy. 1.0 when only one class is present.
[[nodiscard]] double cv_accuracy(const Matrix& X, const std::vector<std::string>& labels, const ForestConfig& config,
                                 std::size_t folds = 10);

/// (cv_accuracy on the scaled original data, cv_accuracy on the embedding), same folds for both.
[[nodiscard]] std::pair<double, double> accuracy_pair(const data::Dataset& dataset, const Matrix& embedding,
                                                      const ForestConfig& config, std::size_t folds = 10);

} // namespace gp4nldr::forest
