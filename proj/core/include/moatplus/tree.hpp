#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace moatplus {

/// Feature rows use NaN for missing cells; trees route missing values by a
/// per-split learned default direction.
using FeatureRow = std::vector<double>;

bool feature_missing(double v);

struct Dataset {
    std::vector<FeatureRow> rows;
    std::vector<int> labels;  // 0..n_classes-1
    int n_classes = 2;
    std::vector<std::string> feature_names;
};

struct TreeConfig {
    int max_depth = 8;
    int min_leaf = 20;
    // Per-class weights applied to the Gini criterion; empty means uniform.
    std::vector<double> class_weights;
};

struct ForestConfig {
    int n_trees = 100;
    int max_depth = 12;
    int min_leaf = 10;
    int feature_subsample = 0;  // 0 -> ceil(sqrt(d))
    bool bootstrap = true;
    std::vector<double> class_weights;
};

/// Flat, index-linked node. Internal nodes split on `feature < threshold`
/// (missing routed to the missing_left side); leaves carry raw class counts.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    bool missing_left = true;
    int left = -1;
    int right = -1;
    std::vector<std::int64_t> counts;  // leaves only

    bool is_leaf() const { return left < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int n_classes = 2;
    std::vector<std::string> feature_names;
    std::uint64_t seed = 0;

    /// Laplace-smoothed leaf frequencies: (count_c + 1) / (n + n_classes).
    std::vector<double> predict_proba(const FeatureRow& row) const;

    /// Index of the leaf a row lands in; used by structure-invariance tests.
    int leaf_index(const FeatureRow& row) const;
};

struct RandomForest {
    std::vector<DecisionTree> trees;
    int n_classes = 2;
    std::vector<std::string> feature_names;
    std::optional<double> oob_estimate;  // out-of-bag accuracy when bootstrapped
    std::uint64_t seed = 0;

    /// Unweighted mean of member tree probability vectors.
    std::vector<double> predict_proba(const FeatureRow& row) const;
};

/// Greedy CART induction: best split by class-weighted Gini gain over
/// midpoint thresholds, ties broken by lowest feature index then lowest
/// threshold. Deterministic given the config. Throws TrainError on empty
/// input.
DecisionTree train_decision_tree(const Dataset& data, const TreeConfig& cfg, std::uint64_t seed);

/// Bootstrap-resampled trees with per-split feature subsampling.
/// Deterministic given the seed; trees may be trained in parallel.
RandomForest train_random_forest(const Dataset& data, const ForestConfig& cfg,
                                 std::uint64_t seed, int threads = 1);

/// Weights inversely proportional to class frequency, normalized to mean 1.
std::vector<double> balanced_class_weights(std::span<const int> labels, int n_classes);

/// Either model kind behind one predict_proba surface, so a forest can be
/// swapped in anywhere a tree is used.
class Classifier {
public:
    Classifier() = default;
    explicit Classifier(DecisionTree tree) : model_(std::move(tree)) {}
    explicit Classifier(RandomForest forest) : model_(std::move(forest)) {}

    std::vector<double> predict_proba(const FeatureRow& row) const;
    int n_classes() const;
    const std::vector<std::string>& feature_names() const;
    bool is_forest() const { return std::holds_alternative<RandomForest>(model_); }
    const DecisionTree& tree() const { return std::get<DecisionTree>(model_); }
    const RandomForest& forest() const { return std::get<RandomForest>(model_); }

private:
    std::variant<DecisionTree, RandomForest> model_;
};

/// JSON model document: {version, kind: "tree"|"forest", n_classes,
/// features, nodes|trees, seed}. Node arrays are index-linked.
std::string serialize_model(const Classifier& model);
Classifier deserialize_model(const std::string& bytes);

}  // namespace moatplus
