#pragma once

#include <span>
#include <string>
#include <vector>

#include "icumort/matrix.hpp"

namespace icumort {

struct LassoParams {
    double lambda = 0.01;
    double tol = 1e-7;
    std::size_t max_iter = 10000;
};

/// Linear LASSO fit by cyclic coordinate descent on
///   (1 / 2n) ||y - X w - b||^2 + lambda ||w||_1
/// with an unpenalized intercept.
struct LassoModel {
    std::vector<double> weights;
    double intercept = 0.0;
    double lambda = 0.0;
    std::vector<std::string> feature_names;
    bool converged = false;
    std::size_t iterations = 0;
    /// Objective after each full sweep.
    std::vector<double> objective_history;
};

/// S(z, t) = sign(z) max(|z| - t, 0).
double soft_threshold(double z, double t) noexcept;

double lasso_objective(const Matrix& x, std::span<const double> y, std::span<const double> w, double b,
                       double lambda);

/// Smallest lambda for which every weight is zero: max_j |x_j' (y - mean y)| / n.
double lasso_lambda_max(const Matrix& x, std::span<const double> y);

/// Non-convergence within max_iter is reported through `converged`, not thrown.
LassoModel fit_lasso(const Matrix& x, std::span<const double> y, const LassoParams& params = {},
                     std::vector<std::string> feature_names = {});

/// Names of the coordinates with a nonzero weight, in feature order.
std::vector<std::string> lasso_selected(const LassoModel& m);

/// Linear predictions clamped to [0, 1].
std::vector<double> predict_proba(const LassoModel& m, const Matrix& x);

std::vector<double> labels_as_targets(std::span<const int> y);

} // namespace icumort
