#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "icumort/matrix.hpp"
#include "icumort/tree.hpp"

namespace icumort {

struct RfParams {
    std::size_t n_trees = 200;
    /// Features tried per split; 0 selects floor(sqrt(d)).
    std::size_t max_features = 0;
    /// 0 means unlimited.
    std::size_t max_depth = 0;
    std::size_t min_samples_split = 2;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

/// Bagged Gini trees; the probability is the fraction of trees voting 1.
struct RfModel {
    std::vector<Tree> trees;
    RfParams params;
    std::vector<std::string> feature_names;
};

/// floor(sqrt(d)), at least 1.
std::size_t default_max_features(std::size_t d);

/// Tree t uses its own generator seeded from derive_seed(seed, "rf-tree", t).
RfModel fit_random_forest(const Matrix& x, std::span<const int> y, const RfParams& params = {},
                          std::vector<std::string> feature_names = {});

std::vector<double> predict_proba(const RfModel& m, const Matrix& x);

} // namespace icumort
