#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icumort/matrix.hpp"

namespace icumort {

/// Scores every row of a matrix. Must be safe to call repeatedly.
using PredictFn = std::function<std::vector<double>(const Matrix&)>;

struct AttributionReport {
    double base_value = 0.0;
    std::vector<double> attributions;
    double prediction = 0.0;
    /// base_value + sum(attributions) - prediction
    double additivity_residual = 0.0;
};

inline constexpr std::size_t kMaxExactShapleyFeatures = 14;

/// Exact Shapley values by enumerating all 2^d coalitions. The value of a
/// coalition S is the mean, over background rows, of the prediction on a row
/// taking features in S from the instance and the rest from the background.
AttributionReport exact_shapley(const PredictFn& predict, const Matrix& background, std::span<const double> instance);

/// KernelSHAP: Shapley-kernel weighted least squares over coalitions with the
/// additivity constraint imposed exactly. When n_coalitions >= 2^d every
/// coalition is used; otherwise coalition sizes are fully enumerated while
/// the budget allows and the rest are sampled without replacement, the budget
/// shared between sizes in proportion to their kernel weight.
AttributionReport kernel_shap(const PredictFn& predict, const Matrix& background, std::span<const double> instance,
                              std::size_t n_coalitions, std::uint64_t seed);

/// Up to max_rows rows drawn without replacement (all rows when fewer).
Matrix sample_background(const Matrix& x, std::size_t max_rows, std::uint64_t seed);

struct ShapRankEntry {
    std::string feature;
    std::size_t index = 0;
    double mean_abs = 0.0;
};

struct ShapSummary {
    std::vector<std::string> feature_names;
    /// Top-k features by mean |attribution|, ties kept in feature order.
    std::vector<ShapRankEntry> ranking;
    Matrix attributions; ///< rows x features
    std::vector<double> base_values;
    std::vector<double> predictions;
};

/// KernelSHAP for every row of `sample`; row r uses derive_seed(seed, "shap-row", r).
ShapSummary shap_summary(const PredictFn& predict, const Matrix& background, const Matrix& sample,
                         std::vector<std::string> feature_names, std::size_t top_k = 15,
                         std::size_t n_coalitions = 256, std::uint64_t seed = 0);

nlohmann::json to_json(const ShapSummary& s);
/// row_id,feature,value,attribution
std::string shap_csv(const ShapSummary& s, const Matrix& sample);

} // namespace icumort
