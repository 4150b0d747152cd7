#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icumort/dataset.hpp"

namespace icumort {

/// Logistic cohort with standard-normal informative features, independent
/// noise features and a day index in 1..days:
///   logit P(y = 1) = (1 + day * day_signal_gain) * w.x_inf + intercept
struct CohortSpec {
    std::size_t n_rows = 3487;
    std::size_t n_informative = 30;
    std::size_t n_noise = 20;
    std::vector<double> coefficients;
    /// Tuned by bisection to reach positive_fraction when unset.
    std::optional<double> intercept;
    double missing_rate = 0.05;
    double positive_fraction = 0.207;
    std::size_t days = 4;
    double day_signal_gain = 0.3;
    /// Adds a leading "stay_id" identifier column.
    bool identifier_column = true;
    std::uint64_t seed = 0;
    /// Monte-Carlo draws for the Bayes AUROC estimate.
    std::size_t bayes_draws = 1000000;
};

struct GroundTruth {
    std::vector<std::string> informative;
    std::vector<std::string> noise;
    std::vector<double> coefficients;
    double intercept = 0.0;
    double target_positive_fraction = 0.0;
    double realized_positive_fraction = 0.0;
    double day_signal_gain = 0.0;
    /// AUROC of the true risk on the cohort distribution, overall and per day.
    double bayes_auroc = 0.5;
    std::vector<double> bayes_auroc_per_day;
};

struct Cohort {
    Dataset data;
    GroundTruth truth;
};

/// ICU-study-sized preset: 3487 rows, 30 informative + 20 noise features,
/// positive fraction 0.207, 4 days. Coefficients decay from 0.35 to 0.175
/// with alternating sign; day_signal_gain 0.3.
CohortSpec paper_shape_spec(std::uint64_t seed);
/// Known presets: "paper-shape". Throws ConfigError otherwise.
CohortSpec preset_spec(const std::string& name, std::uint64_t seed);

/// Throws ConfigError for invalid specs and unattainable positive fractions.
Cohort generate_cohort(const CohortSpec& spec);

/// Monte-Carlo AUROC of the true risk; index 0 of the result is the overall
/// value, index t the value for day t.
std::vector<double> bayes_auroc(const std::vector<double>& coefficients, double intercept, std::size_t days,
                                double day_signal_gain, std::size_t draws, std::uint64_t seed);

nlohmann::json to_json(const GroundTruth& g);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

} // namespace icumort
