#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "deeptrust/dataset.hpp"
#include "deeptrust/neural.hpp"
#include "deeptrust/standardize.hpp"

namespace deeptrust {

/// 1 - p0^2 - p1^2 for a two-class node.
double gini(std::size_t class0, std::size_t class1);

struct TreeParams {
    std::size_t max_depth = 0;  // 0 = unlimited
    std::size_t min_samples_split = 2;
    std::size_t features_per_split = 0;  // 0 = all features
    bool laplace = false;                // leaf probability (n1+1)/(n+2)
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;   // x[feature] <= threshold
    int right = -1;
    double probability = 0.0;  // fraction of class 1 at the node
    std::size_t samples = 0;
    double weighted_decrease = 0.0;  // samples * Gini decrease of the split

    bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
public:
    DecisionTree() = default;
    DecisionTree(std::vector<TreeNode> nodes, std::size_t feature_count);

    double predict_proba(std::span<const double> x) const;
    int predict(std::span<const double> x) const { return predict_proba(x) >= 0.5 ? 1 : 0; }

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::size_t feature_count() const { return feature_count_; }
    std::size_t depth() const;
    /// Sum of weighted impurity decrease per feature (unnormalized).
    std::vector<double> impurity_decrease() const;

    nlohmann::ordered_json to_json() const;
    static DecisionTree from_json(const nlohmann::json& j);

    bool operator==(const DecisionTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
    std::size_t feature_count_ = 0;
};

/// Greedy CART on Gini impurity. Candidate thresholds are midpoints between
/// consecutive distinct values; ties go to the lowest feature index, then the
/// lowest threshold. Splits with zero gain are allowed while a node is impure.
DecisionTree fit_tree(const Dataset& train, const TreeParams& params, std::uint64_t seed);
/// Same, restricted to the given rows (repeats allowed, for bootstrap samples).
DecisionTree fit_tree(const Dataset& train, std::span<const std::size_t> rows, const TreeParams& params,
                      std::uint64_t seed);

struct ForestParams {
    std::size_t trees = 100;
    std::size_t features_per_split = 0;  // 0 = floor(sqrt(k)), at least 1
    bool bootstrap = true;
    std::size_t max_depth = 0;
    std::size_t min_samples_split = 2;
};

class RandomForest {
public:
    RandomForest() = default;
    RandomForest(std::vector<DecisionTree> trees, std::size_t feature_count);

    /// Fraction of trees voting class 1.
    double predict_proba(std::span<const double> x) const;
    int predict(std::span<const double> x) const { return predict_proba(x) >= 0.5 ? 1 : 0; }

    const std::vector<DecisionTree>& trees() const { return trees_; }
    std::size_t feature_count() const { return feature_count_; }

    nlohmann::ordered_json to_json() const;
    static RandomForest from_json(const nlohmann::json& j);

    bool operator==(const RandomForest&) const = default;

private:
    std::vector<DecisionTree> trees_;
    std::size_t feature_count_ = 0;
};

/// Trees are fitted in parallel; tree t uses derive_seed(seed, t), so the
/// forest does not depend on the thread count.
RandomForest fit_forest(const Dataset& train, const ForestParams& params, std::uint64_t seed);

struct FeatureImportance {
    std::size_t feature = 0;
    double importance = 0.0;
};

/// Gini importance summed over all trees and normalized to 1; descending,
/// ties by feature index. All zeros if no split decreased impurity.
std::vector<FeatureImportance> feature_importance(const RandomForest& forest);

struct NaiveBayesModel {
    std::array<double, 2> priors{};
    std::array<std::vector<double>, 2> means;
    std::array<std::vector<double>, 2> variances;

    /// Posterior {P(class 0 | x), P(class 1 | x)} via log-sum-exp.
    std::array<double, 2> posterior(std::span<const double> x) const;
    int predict(std::span<const double> x) const { return posterior(x)[1] >= 0.5 ? 1 : 0; }

    nlohmann::ordered_json to_json() const;
    static NaiveBayesModel from_json(const nlohmann::json& j);
};

inline constexpr double kVarianceFloor = 1e-9;

/// Gaussian naive Bayes; every class must be present.
NaiveBayesModel fit_naive_bayes(const Dataset& train, double variance_floor = kVarianceFloor);

struct LogisticParams {
    double l2_lambda = 1e-3;
    double learning_rate = 0.1;
    std::size_t epochs = 1000;
    bool standardize = true;
};

/// dense(k,1) -> sigmoid, trained full-batch with the neural module's loss
/// and gradients.
struct LogisticModel {
    nn::Network network;
    Standardizer standardization;  // identity when LogisticParams::standardize is false
    double l2_lambda = 0.0;

    std::vector<double> weights() const;
    double intercept() const;
    double predict_proba(std::span<const double> x) const;
    std::vector<double> predict_proba(const Matrix& x) const;
};

LogisticModel fit_logistic(const Dataset& train, const LogisticParams& params, std::uint64_t seed);

}  // namespace deeptrust
