#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icumort/dataset.hpp"

namespace icumort {

struct DropResult {
    Dataset data;
    std::vector<std::string> dropped;
};

/// Keeps exactly the columns with missing_count <= threshold * n_rows.
DropResult drop_high_nan_columns(const Dataset& ds, double threshold = 0.5);

/// Per-column medians of the observed values. Identifier columns are neither
/// fitted nor imputed.
struct ImputerParams {
    std::vector<std::string> names;
    std::vector<double> medians;
};

/// Median of the non-missing entries; even counts average the two middle
/// order statistics. Returns NaN when nothing is observed.
double median_of_observed(std::span<const double> values);

ImputerParams fit_median(const Dataset& ds);
Dataset apply_median(const Dataset& ds, const ImputerParams& params);
/// fit_median followed by apply_median on the same data.
Dataset impute_median(const Dataset& ds);

struct ColumnRange {
    std::string name;
    double min = 0.0;
    double max = 0.0;
};

struct ScalerParams {
    std::vector<ColumnRange> columns;
    /// Columns with min == max; they are mapped to 0.
    std::vector<std::string> constant_columns;
};

ScalerParams fit_scale_min_max(const Dataset& ds);
/// Maps each fitted column x -> 2 (x - min) / (max - min) - 1. Identifier
/// columns pass through unchanged.
Dataset apply_scale_min_max(const Dataset& ds, const ScalerParams& params);

struct SplitSpec {
    std::array<double, 3> ratios{0.70, 0.15, 0.15};
    std::uint64_t seed = 0;
    bool stratified = false;
};

struct SplitResult {
    Dataset train;
    Dataset val;
    Dataset test;
    std::array<std::vector<std::size_t>, 3> indices;
};

/// Part sizes for n rows: val and test get floor(n * ratio), train the rest.
std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& ratios);

SplitResult split(const Dataset& ds, const SplitSpec& spec);

nlohmann::json to_json(const ImputerParams& p);
ImputerParams imputer_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScalerParams& p);
ScalerParams scaler_from_json(const nlohmann::json& j);

} // namespace icumort
