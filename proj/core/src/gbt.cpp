#include "icumort/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "icumort/error.hpp"
#include "icumort/logistic.hpp"

namespace icumort {

GbtModel fit_gbt(const Matrix& x, std::span<const int> y, const GbtParams& params,
                 std::vector<std::string> feature_names) {
    const std::size_t n = x.rows();
    if (y.size() != n) throw DataError("feature matrix and label lengths differ");
    if (n < 2) throw DataError("gradient boosting needs at least 2 rows");
    if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) {
        throw ConfigError("GBT learning rate must lie in (0, 1]");
    }
    if (params.reg_lambda < 0.0) throw ConfigError("GBT reg_lambda must be non-negative");
    if (params.gamma < 0.0) throw ConfigError("GBT gamma must be non-negative");
    for (double v : x.data()) {
        if (!std::isfinite(v)) throw NumericError("feature matrix contains non-finite values");
    }
    for (int t : y) {
        if (t != 0 && t != 1) throw DataError("labels must be 0 or 1");
    }
    if (feature_names.empty()) feature_names = default_feature_names(x.cols());
    if (feature_names.size() != x.cols()) throw DataError("feature name count does not match columns");

    GbtModel m;
    m.params = params;
    m.feature_names = std::move(feature_names);
    double p0 = 0.0;
    if (params.base_probability) {
        p0 = *params.base_probability;
        if (!(p0 > 0.0 && p0 < 1.0)) throw ConfigError("GBT base probability must lie in (0, 1)");
    } else {
        p0 = static_cast<double>(std::accumulate(y.begin(), y.end(), 0)) / static_cast<double>(n);
        p0 = std::clamp(p0, 1e-3, 1.0 - 1e-3);
    }
    m.base_score = std::log(p0 / (1.0 - p0));

    std::vector<double> margin(n, m.base_score);
    std::vector<double> grad(n);
    std::vector<double> hess(n);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const RegressionTreeParams tree_params{params.max_depth, params.reg_lambda, params.gamma, params.learning_rate};

    m.trees.reserve(params.n_trees);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = p - y[i];
            hess[i] = p * (1.0 - p);
        }
        Tree tree = grow_regression_tree(x, grad, hess, rows, tree_params);
        for (std::size_t i = 0; i < n; ++i) margin[i] += tree.predict(x.row(i));
        m.trees.push_back(std::move(tree));
    }
    return m;
}

std::vector<double> predict_margin(const GbtModel& m, const Matrix& x) {
    if (x.cols() != m.feature_names.size()) {
        throw DataError("GBT model expects " + std::to_string(m.feature_names.size()) + " features, got " +
                        std::to_string(x.cols()));
    }
    std::vector<double> out(x.rows(), m.base_score);
    for (const auto& tree : m.trees) {
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] += tree.predict(x.row(i));
    }
    return out;
}

std::vector<double> predict_proba(const GbtModel& m, const Matrix& x) {
    auto out = predict_margin(m, x);
    for (auto& v : out) v = sigmoid(v);
    return out;
}

std::vector<std::pair<std::string, double>> gbt_importance(const GbtModel& m) {
    std::vector<double> total(m.feature_names.size(), 0.0);
    std::vector<char> used(m.feature_names.size(), 0);
    for (const auto& tree : m.trees) {
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) continue;
            total[static_cast<std::size_t>(node.feature)] += node.gain;
            used[static_cast<std::size_t>(node.feature)] = 1;
        }
    }
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < total.size(); ++j) {
        if (used[j]) order.push_back(j);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return total[a] > total[b]; });
    std::vector<std::pair<std::string, double>> ranking;
    ranking.reserve(order.size());
    for (auto j : order) ranking.emplace_back(m.feature_names[j], total[j]);
    return ranking;
}

} // namespace icumort
