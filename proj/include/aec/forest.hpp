#pragma once

// CART decision trees and random forests for the binary error task (label 1 = the base
// classifier was wrong), with mean-decrease-in-impurity importances and stratified
// k-fold cross-validation.

#include "aec/features.hpp"
#include "aec/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace aec::forest {

using features::Matrix;
using Labels = std::span<const std::uint8_t>;

/// 1 - p0^2 - p1^2. Throws DomainError for an empty node.
double gini_impurity(std::uint64_t n0, std::uint64_t n1);

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    /// Parent impurity minus the size-weighted child impurity.
    double gain = 0.0;
};

/// Best split of the given rows (duplicates allowed) over `feature_subset`. Candidate
/// thresholds are midpoints between consecutive distinct values; rows with value <=
/// threshold go left. Gains are compared exactly, so ties resolve to the lowest
/// feature index, then the lowest threshold. Splits leaving fewer than
/// `min_samples_leaf` rows on a side are skipped. Returns nullopt without positive gain.
std::optional<Split> best_split(const Matrix& x, Labels labels, std::span<const std::size_t> rows,
                                std::span<const std::size_t> feature_subset,
                                std::size_t min_samples_leaf = 1);

struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::uint64_t n_correct = 0;
    std::uint64_t n_error = 0;
    double gain = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
    std::uint64_t total() const noexcept { return n_correct + n_error; }
    double error_fraction() const noexcept {
        return static_cast<double>(n_error) / static_cast<double>(total());
    }
    bool operator==(const Node&) const = default;
};

/// Nodes in preorder; node 0 is the root.
struct Tree {
    std::vector<Node> nodes;

    const Node& leaf_for(std::span<const double> row) const;
    double error_probability(std::span<const double> row) const { return leaf_for(row).error_fraction(); }
    std::size_t depth() const;
    std::size_t split_count() const;
    bool operator==(const Tree&) const = default;
};

struct ForestParams {
    std::size_t n_trees = 100;
    std::optional<std::size_t> max_depth;  // unbounded when empty
    std::size_t min_samples_leaf = 1;
    std::optional<std::size_t> features_per_split;  // ceil(sqrt(d)) when empty
    bool bootstrap = true;
    std::uint64_t seed = 0;

    std::size_t resolved_features_per_split(std::size_t d) const;
    bool operator==(const ForestParams&) const = default;
};

/// Recursive CART over `rows`. Each node draws features_per_split distinct features
/// from `rng`; growth stops on a pure node, at max_depth, below 2 * min_samples_leaf
/// rows, or when no split has positive gain.
Tree grow_tree(const Matrix& x, Labels labels, std::span<const std::size_t> rows,
               const ForestParams& params, Rng& rng);

/// Per-feature mean decrease in impurity of one tree, unnormalized.
std::vector<double> tree_importances(const Tree& tree, std::size_t n_features);

class ForestModel {
public:
    ForestModel() = default;
    ForestModel(features::FeatureSpace space, ForestParams params, std::vector<Tree> trees);

    const features::FeatureSpace& space() const noexcept { return space_; }
    const ForestParams& params() const noexcept { return params_; }
    const std::vector<Tree>& trees() const noexcept { return trees_; }
    /// Aligned with space().names; sums to 1 when any split exists, else all zero.
    const std::vector<double>& importances() const noexcept { return importances_; }

    /// Mean over trees of the reached leaf's error fraction. Throws ShapeError on a
    /// row of the wrong width.
    double predict_error_prob(std::span<const double> row) const;

    void save(std::ostream& out) const;
    static ForestModel load(std::istream& in);

    bool operator==(const ForestModel&) const = default;

private:
    features::FeatureSpace space_;
    ForestParams params_;
    std::vector<Tree> trees_;
    std::vector<double> importances_;
};

/// Throws DegenerateError unless both classes are present.
ForestModel train_forest(const features::FeatureMatrix& matrix, Labels labels,
                         const ForestParams& params, unsigned threads = 1);

std::map<features::FeatureName, double> feature_importances(const ForestModel& model);

struct FoldMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

struct CVReport {
    std::size_t k = 0;
    std::vector<FoldMetrics> fold_metrics;
    FoldMetrics mean;
    FoldMetrics stddev;
    ForestParams chosen_params;
    /// Mean accuracy of every grid entry, in grid order.
    std::vector<double> grid_mean_accuracy;
};

/// Stratified fold assignment: each class is shuffled with `seed` and dealt round-robin.
std::vector<std::size_t> stratified_folds(Labels labels, std::size_t k, std::uint64_t seed);

/// Selects the grid entry with the best mean fold accuracy (earliest on ties).
CVReport cross_validate(const features::FeatureMatrix& matrix, Labels labels, std::size_t k,
                        std::span<const ForestParams> grid, std::uint64_t seed, unsigned threads = 1);

std::vector<ForestParams> default_grid(std::uint64_t seed);

}  // namespace aec::forest
