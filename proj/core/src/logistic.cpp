#include "icumort/logistic.hpp"

#include <cmath>

#include "icumort/error.hpp"

namespace icumort {

double sigmoid(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::vector<std::string> default_feature_names(std::size_t d) {
    std::vector<std::string> names;
    names.reserve(d);
    for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j));
    return names;
}

namespace {

void check_inputs(const Matrix& x, std::span<const int> y) {
    if (x.rows() != y.size()) throw DataError("feature matrix and label vector lengths differ");
    for (double v : x.data()) {
        if (!std::isfinite(v)) throw NumericError("feature matrix contains non-finite values");
    }
    for (int t : y) {
        if (t != 0 && t != 1) throw DataError("labels must be 0 or 1");
    }
}

double margin(const LogisticModel& m, std::span<const double> row) {
    double z = m.intercept;
    for (std::size_t j = 0; j < row.size(); ++j) z += m.weights[j] * row[j];
    return z;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

} // namespace

double logistic_loss(const LogisticModel& m, const Matrix& x, std::span<const int> y, double l2) {
    const std::size_t n = x.rows();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = margin(m, x.row(i));
        total += softplus(z) - (y[i] == 1 ? z : 0.0);
    }
    double penalty = 0.0;
    for (double w : m.weights) penalty += w * w;
    return (n > 0 ? total / static_cast<double>(n) : 0.0) + 0.5 * l2 * penalty;
}

LogisticGradient logistic_gradient(const LogisticModel& m, const Matrix& x, std::span<const int> y, double l2) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    LogisticGradient g{std::vector<double>(d, 0.0), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        const double r = sigmoid(margin(m, row)) - y[i];
        g.intercept += r;
        for (std::size_t j = 0; j < d; ++j) g.weights[j] += r * row[j];
    }
    const double inv = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
    g.intercept *= inv;
    for (std::size_t j = 0; j < d; ++j) g.weights[j] = g.weights[j] * inv + l2 * m.weights[j];
    return g;
}

LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, const LogisticParams& params,
                           std::vector<std::string> feature_names) {
    check_inputs(x, y);
    if (x.rows() == 0) throw DataError("cannot fit logistic regression on zero rows");
    if (!(params.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (params.l2 < 0.0) throw ConfigError("l2 penalty must be non-negative");
    if (feature_names.empty()) feature_names = default_feature_names(x.cols());
    if (feature_names.size() != x.cols()) throw DataError("feature name count does not match columns");

    LogisticModel m;
    m.weights.assign(x.cols(), 0.0);
    m.feature_names = std::move(feature_names);
    m.params = params;
    m.loss_history.reserve(params.epochs + 1);
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        m.loss_history.push_back(logistic_loss(m, x, y, params.l2));
        const auto g = logistic_gradient(m, x, y, params.l2);
        m.intercept -= params.learning_rate * g.intercept;
        for (std::size_t j = 0; j < m.weights.size(); ++j) m.weights[j] -= params.learning_rate * g.weights[j];
    }
    m.loss_history.push_back(logistic_loss(m, x, y, params.l2));
    if (!std::isfinite(m.loss_history.back())) throw NumericError("logistic regression diverged");
    return m;
}

std::vector<double> predict_proba(const LogisticModel& m, const Matrix& x) {
    if (x.cols() != m.weights.size()) {
        throw DataError("logistic model expects " + std::to_string(m.weights.size()) + " features, got " +
                        std::to_string(x.cols()));
    }
    std::vector<double> p(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) p[i] = sigmoid(margin(m, x.row(i)));
    return p;
}

} // namespace icumort
