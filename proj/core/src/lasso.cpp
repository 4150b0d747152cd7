#include "icumort/lasso.hpp"

#include <algorithm>
#include <cmath>

#include "icumort/error.hpp"
#include "icumort/logistic.hpp"

namespace icumort {

double soft_threshold(double z, double t) noexcept {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

double lasso_objective(const Matrix& x, std::span<const double> y, std::span<const double> w, double b,
                       double lambda) {
    const std::size_t n = x.rows();
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        double r = y[i] - b;
        for (std::size_t j = 0; j < w.size(); ++j) r -= row[j] * w[j];
        rss += r * r;
    }
    double l1 = 0.0;
    for (double v : w) l1 += std::abs(v);
    return 0.5 * rss / static_cast<double>(n) + lambda * l1;
}

double lasso_lambda_max(const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows();
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(n);
    double best = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += x(i, j) * (y[i] - ybar);
        best = std::max(best, std::abs(dot) / static_cast<double>(n));
    }
    return best;
}

LassoModel fit_lasso(const Matrix& x, std::span<const double> y, const LassoParams& params,
                     std::vector<std::string> feature_names) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (n == 0) throw DataError("cannot fit LASSO on zero rows");
    if (y.size() != n) throw DataError("feature matrix and target lengths differ");
    if (params.lambda < 0.0) throw ConfigError("LASSO lambda must be non-negative");
    for (double v : x.data()) {
        if (!std::isfinite(v)) throw NumericError("feature matrix contains non-finite values");
    }
    if (feature_names.empty()) feature_names = default_feature_names(d);
    if (feature_names.size() != d) throw DataError("feature name count does not match columns");

    LassoModel m;
    m.weights.assign(d, 0.0);
    m.lambda = params.lambda;
    m.feature_names = std::move(feature_names);

    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> col_sq(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) col_sq[j] += x(i, j) * x(i, j);
    }
    for (auto& v : col_sq) v *= inv_n;

    // Residual r = y - Xw - b, kept current across coordinate updates.
    std::vector<double> r(y.begin(), y.end());
    for (m.iterations = 0; m.iterations < params.max_iter;) {
        ++m.iterations;
        double max_change = 0.0;

        double shift = 0.0;
        for (double v : r) shift += v;
        shift *= inv_n;
        m.intercept += shift;
        for (auto& v : r) v -= shift;
        max_change = std::abs(shift);

        for (std::size_t j = 0; j < d; ++j) {
            if (col_sq[j] == 0.0) continue;
            const double old = m.weights[j];
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i) rho += x(i, j) * r[i];
            rho = rho * inv_n + col_sq[j] * old;
            const double updated = soft_threshold(rho, params.lambda) / col_sq[j];
            const double delta = updated - old;
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i) r[i] -= x(i, j) * delta;
                m.weights[j] = updated;
            }
            max_change = std::max(max_change, std::abs(delta));
        }
        m.objective_history.push_back(lasso_objective(x, y, m.weights, m.intercept, params.lambda));
        if (max_change < params.tol) {
            m.converged = true;
            break;
        }
    }
    return m;
}

std::vector<std::string> lasso_selected(const LassoModel& m) {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < m.weights.size(); ++j) {
        if (m.weights[j] != 0.0) out.push_back(m.feature_names[j]);
    }
    return out;
}

std::vector<double> predict_proba(const LassoModel& m, const Matrix& x) {
    if (x.cols() != m.weights.size()) {
        throw DataError("LASSO model expects " + std::to_string(m.weights.size()) + " features, got " +
                        std::to_string(x.cols()));
    }
    std::vector<double> p(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto row = x.row(i);
        double z = m.intercept;
        for (std::size_t j = 0; j < row.size(); ++j) z += m.weights[j] * row[j];
        p[i] = std::clamp(z, 0.0, 1.0);
    }
    return p;
}

std::vector<double> labels_as_targets(std::span<const int> y) { return {y.begin(), y.end()}; }

} // namespace icumort
