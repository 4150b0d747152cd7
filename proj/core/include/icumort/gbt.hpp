#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "icumort/matrix.hpp"
#include "icumort/tree.hpp"

namespace icumort {

struct GbtParams {
    std::size_t n_trees = 100;
    std::size_t max_depth = 4;
    double learning_rate = 0.1;
    double reg_lambda = 1.0;
    double gamma = 0.0;
    /// Initial probability; the clamped training base rate when unset.
    std::optional<double> base_probability;
};

/// Gradient-boosted trees on the logistic loss with second-order leaf
/// weights -G/(H + reg_lambda). Leaf values already include the learning
/// rate, so the margin is base_score + sum of tree outputs.
struct GbtModel {
    std::vector<Tree> trees;
    double base_score = 0.0; ///< log-odds
    GbtParams params;
    std::vector<std::string> feature_names;
};

GbtModel fit_gbt(const Matrix& x, std::span<const int> y, const GbtParams& params = {},
                 std::vector<std::string> feature_names = {});

std::vector<double> predict_margin(const GbtModel& m, const Matrix& x);
std::vector<double> predict_proba(const GbtModel& m, const Matrix& x);

/// Total split gain per feature, descending (ties by feature order). Only
/// features used by at least one split appear.
std::vector<std::pair<std::string, double>> gbt_importance(const GbtModel& m);

} // namespace icumort
