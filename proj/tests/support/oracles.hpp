#pragma once

// Independent reference implementations used to check the library. None of
// these call into the code they verify.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "icumort/matrix.hpp"

namespace oracle {

/// O(n^2) pairwise AUROC: P(score+ > score-) + 0.5 P(tie).
double pairwise_auroc(std::span<const double> scores, std::span<const int> labels);

struct BruteSplit {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

/// Tries every feature and every threshold halfway between consecutive
/// distinct values; keeps the first strictly best positive gain.
BruteSplit brute_force_split(const icumort::Matrix& x, std::span<const double> g, std::span<const double> h,
                             double lambda, double gamma);

/// Least squares with intercept via the normal equations (Eigen LDLT).
/// Returns weights followed by the intercept.
std::vector<double> normal_equations(const icumort::Matrix& x, std::span<const double> y);

/// Indices of the k nearest rows of x to row i (Euclidean), self excluded,
/// found by sorting every distance.
std::vector<std::size_t> brute_knn(const icumort::Matrix& x, std::size_t i, std::size_t k);

/// Shapley values through the permutation definition: average marginal
/// contribution over all d! orderings. v(S) is supplied by the caller.
std::vector<double> permutation_shapley(std::size_t d, const std::function<double(std::uint64_t mask)>& value);

/// Interventional coalition value: mean over background rows of f on the
/// hybrid row that takes features in `mask` from the instance.
double coalition_value(const std::function<std::vector<double>(const icumort::Matrix&)>& f,
                       const icumort::Matrix& background, std::span<const double> instance, std::uint64_t mask);

/// |a - b| / max(|a|, |b|, floor)
double relative_error(double a, double b, double floor = 1e-6);

icumort::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double sd = 1.0);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

} // namespace oracle
