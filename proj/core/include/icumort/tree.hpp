#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "icumort/matrix.hpp"
#include "icumort/random.hpp"

namespace icumort {

/// Binary tree node. Rows with x[feature] < threshold go left.
struct TreeNode {
    int feature = -1; ///< -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0; ///< leaf output
    double gain = 0.0;  ///< split gain of an internal node

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Flat binary tree; node 0 is the root.
struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row) const;
    bool well_formed() const;
    std::size_t depth() const;
    friend bool operator==(const Tree&, const Tree&) = default;
};

nlohmann::json to_json(const Tree& t);
Tree tree_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Second-order (gradient/hessian) regression trees used by boosting.

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

/// 0.5 [GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)] - gamma with G = GL+GR, H = HL+HR.
double split_gain(double grad_left, double hess_left, double grad_right, double hess_right, double reg_lambda,
                  double gamma) noexcept;

/// -G / (H + reg_lambda), or 0 when the denominator vanishes.
double leaf_weight(double grad_sum, double hess_sum, double reg_lambda) noexcept;

/// Candidate thresholds are midpoints between consecutive distinct values.
double midpoint_threshold(double lo, double hi) noexcept;

/// Exact greedy search over every feature and every midpoint threshold of
/// the given rows. Only splits with strictly positive gain qualify; ties go
/// to the lower feature index, then the lower threshold.
std::optional<SplitCandidate> find_best_split(const Matrix& x, std::span<const double> grad,
                                              std::span<const double> hess, std::span<const std::size_t> rows,
                                              double reg_lambda, double gamma);

struct RegressionTreeParams {
    std::size_t max_depth = 4;
    double reg_lambda = 1.0;
    double gamma = 0.0;
    /// Leaf values are scaled by this factor (boosting shrinkage).
    double shrinkage = 1.0;
};

Tree grow_regression_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                          std::span<const std::size_t> rows, const RegressionTreeParams& params);

// ---------------------------------------------------------------------------
// Gini classification trees used by the random forest.

struct ClassificationTreeParams {
    /// 0 means unlimited.
    std::size_t max_depth = 0;
    std::size_t min_samples_split = 2;
    /// Features examined per split; 0 means all.
    std::size_t max_features = 0;
};

/// Leaves hold the majority class (ties vote 1). `rows` may repeat (bootstrap).
Tree grow_classification_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                              const ClassificationTreeParams& params, Rng& rng);

} // namespace icumort
