#pragma once

#include <cstdint>
#include <vector>

#include "icumort/dataset.hpp"

namespace icumort {

struct SmoteConfig {
    std::size_t k_neighbors = 5;
    /// Desired minority:majority ratio after resampling.
    double target_ratio = 1.0;
    std::uint64_t seed = 0;
};

struct SmoteResult {
    /// Original rows first, synthetic rows appended after them.
    Dataset data;
    std::size_t n_original = 0;
    std::size_t n_synthetic = 0;
    int minority_label = 1;
};

/// Indices (into `rows`) of the k nearest rows of `rows[i]` by Euclidean
/// distance, excluding itself. Ties go to the lower index.
std::vector<std::size_t> nearest_neighbors(const Matrix& x, std::span<const std::size_t> rows, std::size_t i,
                                           std::size_t k);

/// Synthetic minority oversampling. Each synthetic row is x + u (x_nn - x)
/// with u ~ U[0,1] and x_nn one of the k nearest minority neighbours of a
/// minority row x. Enough rows are added to bring the class ratio to
/// floor(target_ratio * majority) minority rows; nothing is added when the
/// ratio is already reached. Identifier columns are copied from x.
SmoteResult smote(const Dataset& train, const SmoteConfig& cfg);

} // namespace icumort
