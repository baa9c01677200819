#include "gp4nldr/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "gp4nldr/parallel.hpp"

namespace gp4nldr::forest {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

int majority(const std::vector<std::size_t>& counts) {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

struct Split {
    double score = -1.0; // sum over sides of (sum of squared class counts) / side size; higher is better
    std::size_t feature = 0;
    double threshold = 0.0;
    bool valid = false;
};

bool better(const Split& a, const Split& b) {
    if (!b.valid) return a.valid;
    if (!a.valid) return false;
    if (a.score != b.score) return a.score > b.score;
    if (a.feature != b.feature) return a.feature < b.feature;
    return a.threshold < b.threshold;
}

} // namespace

std::vector<int> encode_labels(const std::vector<std::string>& labels) {
    std::map<std::string, int> codes;
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        const auto [it, inserted] = codes.emplace(l, static_cast<int>(codes.size()));
        out.push_back(it->second);
    }
    return out;
}

void DecisionTree::fit(const Matrix& X, std::span<const int> y, std::span<const std::size_t> samples,
                       std::size_t features_per_split, std::mt19937_64& rng) {
    if (samples.empty()) throw std::invalid_argument("cannot fit a tree on zero samples");
    classes_ = *std::max_element(y.begin(), y.end()) + 1;
    nodes_.clear();
    std::vector<std::size_t> work(samples.begin(), samples.end());
    build(X, y, work, std::clamp<std::size_t>(features_per_split, 1, X.cols()), rng);
}

std::size_t DecisionTree::build(const Matrix& X, std::span<const int> y, std::vector<std::size_t>& samples,
                                std::size_t features_per_split, std::mt19937_64& rng) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();

    std::vector<std::size_t> counts(static_cast<std::size_t>(classes_), 0);
    for (auto s : samples) ++counts[static_cast<std::size_t>(y[s])];
    nodes_[id].label = majority(counts);
    const auto nonzero = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
    if (nonzero <= 1) return id;

    const std::size_t p = X.cols();
    std::vector<std::size_t> features(p);
    std::iota(features.begin(), features.end(), 0);
    std::shuffle(features.begin(), features.end(), rng);

    const std::size_t n = samples.size();
    std::vector<std::pair<double, int>> column(n);
    std::vector<double> left(static_cast<std::size_t>(classes_));
    Split best;
    for (std::size_t f = 0; f < p; ++f) {
        // keep drawing features past the quota until some split is possible
        if (f >= features_per_split && best.valid) break;
        const std::size_t feature = features[f];
        for (std::size_t i = 0; i < n; ++i) column[i] = {X(samples[i], feature), y[samples[i]]};
        std::sort(column.begin(), column.end());
        if (column.front().first == column.back().first) continue;

        std::fill(left.begin(), left.end(), 0.0);
        double left_sq = 0.0;
        double right_sq = 0.0;
        std::vector<double> right(counts.begin(), counts.end());
        for (double c : right) right_sq += c * c;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const auto c = static_cast<std::size_t>(column[i].second);
            left_sq += 2.0 * left[c] + 1.0;
            left[c] += 1.0;
            right_sq -= 2.0 * right[c] - 1.0;
            right[c] -= 1.0;
            if (column[i].first == column[i + 1].first) continue;
            const double nl = static_cast<double>(i + 1);
            const double nr = static_cast<double>(n - i - 1);
            double threshold = column[i].first + (column[i + 1].first - column[i].first) / 2.0;
            if (threshold >= column[i + 1].first) threshold = column[i].first;
            Split cand{left_sq / nl + right_sq / nr, feature, threshold, true};
            if (better(cand, best)) best = cand;
        }
    }
    if (!best.valid) return id;

    std::vector<std::size_t> lo;
    std::vector<std::size_t> hi;
    for (auto s : samples) (X(s, best.feature) <= best.threshold ? lo : hi).push_back(s);
    samples.clear();
    samples.shrink_to_fit();

    nodes_[id].leaf = false;
    nodes_[id].feature = best.feature;
    nodes_[id].threshold = best.threshold;
    const std::size_t l = build(X, y, lo, features_per_split, rng);
    nodes_[id].left = l;
    const std::size_t r = build(X, y, hi, features_per_split, rng);
    nodes_[id].right = r;
    return id;
}

int DecisionTree::predict(std::span<const double> row) const {
    std::size_t at = 0;
    while (!nodes_[at].leaf) at = row[nodes_[at].feature] <= nodes_[at].threshold ? nodes_[at].left : nodes_[at].right;
    return nodes_[at].label;
}

void RandomForest::fit(const Matrix& X, std::span<const int> y, std::span<const std::size_t> train_rows,
                       const ForestConfig& config) {
    if (config.n_trees < 1) throw std::invalid_argument("a forest needs at least one tree");
    if (train_rows.empty()) throw std::invalid_argument("cannot fit a forest on zero rows");
    classes_ = *std::max_element(y.begin(), y.end()) + 1;
    const std::size_t per_split = config.features_per_split.value_or(
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(X.cols())))));
    trees_.assign(config.n_trees, DecisionTree{});
    parallel_for(config.n_trees, config.threads, [&](std::size_t t) {
        std::mt19937_64 rng(mix(config.seed, t));
        std::vector<std::size_t> sample(train_rows.begin(), train_rows.end());
        if (config.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, train_rows.size() - 1);
            for (auto& s : sample) s = train_rows[pick(rng)];
        }
        trees_[t].fit(X, y, sample, per_split, rng);
    });
}

int RandomForest::predict(std::span<const double> row) const {
    std::vector<std::size_t> votes(static_cast<std::size_t>(classes_), 0);
    for (const auto& t : trees_) ++votes[static_cast<std::size_t>(t.predict(row))];
    return majority(votes);
}

std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t folds, std::uint64_t seed) {
    if (folds == 0) throw std::invalid_argument("fold count must be positive");
    const int classes = y.empty() ? 0 : *std::max_element(y.begin(), y.end()) + 1;
    std::vector<std::size_t> assignment(y.size(), 0);
    std::mt19937_64 rng(mix(seed, 0xF01D));
    std::size_t dealt = 0;
    for (int c = 0; c < classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] == c) members.push_back(i);
        }
        std::shuffle(members.begin(), members.end(), rng);
        for (auto i : members) assignment[i] = dealt++ % folds;
    }
    return assignment;
}

double cv_accuracy(const Matrix& X, const std::vector<std::string>& labels, const ForestConfig& config, std::size_t folds) {
    const std::size_t n = X.rows();
    if (labels.size() != n) throw std::invalid_argument("label count does not match row count");
    if (folds < 2) throw std::invalid_argument("cross-validation needs at least two folds");
    if (folds > n) throw std::invalid_argument(fmt::format("{} folds requested for {} instances", folds, n));
    const auto y = encode_labels(labels);
    if (*std::max_element(y.begin(), y.end()) == 0) return 1.0;

    const auto assignment = stratified_folds(y, folds, config.seed);
    double total = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> train;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < n; ++i) (assignment[i] == f ? test : train).push_back(i);
        ForestConfig fold_config = config;
        fold_config.seed = mix(config.seed, f + 1);
        RandomForest forest;
        forest.fit(X, y, train, fold_config);
        std::size_t correct = 0;
        for (auto i : test) correct += forest.predict(X.row(i)) == y[i] ? 1 : 0;
        total += static_cast<double>(correct) / static_cast<double>(test.size());
    }
    return total / static_cast<double>(folds);
}

std::pair<double, double> accuracy_pair(const data::Dataset& dataset, const Matrix& embedding, const ForestConfig& config,
                                        std::size_t folds) {
    if (embedding.rows() != dataset.instance_count())
        throw std::invalid_argument("embedding row count does not match the dataset");
    return {cv_accuracy(dataset.scaled(), dataset.labels(), config, folds),
            cv_accuracy(embedding, dataset.labels(), config, folds)};
}

} // namespace gp4nldr::forest
