#pragma once

#include <span>
#include <string>
#include <vector>

#include "icumort/matrix.hpp"

namespace icumort {

struct LogisticParams {
    double learning_rate = 0.5;
    std::size_t epochs = 2000;
    double l2 = 0.0;
};

struct LogisticModel {
    std::vector<double> weights;
    double intercept = 0.0;
    std::vector<std::string> feature_names;
    LogisticParams params;
    /// Regularized training loss before each epoch and after the last one.
    std::vector<double> loss_history;
};

struct LogisticGradient {
    std::vector<double> weights;
    double intercept = 0.0;
};

/// Mean negative log-likelihood plus (l2 / 2) * ||w||^2; the intercept is not penalized.
double logistic_loss(const LogisticModel& m, const Matrix& x, std::span<const int> y, double l2);
LogisticGradient logistic_gradient(const LogisticModel& m, const Matrix& x, std::span<const int> y, double l2);

/// Full-batch gradient descent from zero weights.
LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, const LogisticParams& params = {},
                           std::vector<std::string> feature_names = {});

std::vector<double> predict_proba(const LogisticModel& m, const Matrix& x);

/// Default feature names x0, x1, ...
std::vector<std::string> default_feature_names(std::size_t d);

/// Numerically stable logistic function.
double sigmoid(double z) noexcept;

} // namespace icumort
