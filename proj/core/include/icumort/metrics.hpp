#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace icumort {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t n() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// A row is predicted positive when score >= threshold.
ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

/// Ratios with an empty denominator are reported as 0 and their names are
/// listed in `undefined`.
struct ConfusionMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double f1 = 0.0;
    std::vector<std::string> undefined;
};

ConfusionMetrics confusion_metrics(const ConfusionCounts& c);

/// Mann-Whitney AUROC from average ranks, ties counted one half.
/// Throws DataError when only one class is present.
double auroc(std::span<const double> scores, std::span<const int> labels);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

/// Linear-interpolation quantile of sorted data, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

/// Percentile bootstrap of the AUROC. Positives and negatives are resampled
/// separately (keeping both class counts), resample r drawing from its own
/// generator derive_seed(seed, "bootstrap", r).
Interval bootstrap_ci(std::span<const double> scores, std::span<const int> labels, std::size_t n_resamples = 1000,
                      double level = 0.95, std::uint64_t seed = 0);

struct EvalOptions {
    double threshold = 0.5;
    std::size_t n_resamples = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
};

struct MetricsReport {
    ConfusionCounts counts;
    ConfusionMetrics metrics;
    double auroc = 0.5;
    double ci_low = 0.5;
    double ci_high = 0.5;
    std::size_t n = 0;
    std::optional<int> group;
};

MetricsReport evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                              const EvalOptions& options = {}, std::optional<int> group = std::nullopt);

/// One report per distinct group value, ascending. Groups lacking one of the
/// classes are skipped with a warning.
std::vector<MetricsReport> grouped_eval(std::span<const double> scores, std::span<const int> labels,
                                        std::span<const int> groups, const EvalOptions& options = {});

nlohmann::json to_json(const MetricsReport& r);
MetricsReport metrics_report_from_json(const nlohmann::json& j);

/// CSV layout: model,split,day,n,accuracy,precision,sensitivity,f1,specificity,auroc,ci_low,ci_high
/// with day "all" for ungrouped reports.
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& model, const std::string& split, const MetricsReport& r);

} // namespace icumort
