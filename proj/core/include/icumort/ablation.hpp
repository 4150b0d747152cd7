#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icumort/dataset.hpp"

namespace icumort {

/// Trains on `train` and returns scores for the rows of `val`. Both datasets
/// hold exactly the candidate feature columns plus labels.
using ModelFactory = std::function<std::vector<double>(const Dataset& train, const Dataset& val, std::uint64_t seed)>;

struct AblationOptions {
    /// A removal is accepted when the AUROC exceeds the best by more than this.
    double margin = 0.0;
    std::uint64_t seed = 0;
};

struct AblationEvaluation {
    std::string feature;
    double auroc_before = 0.0;
    double auroc_after = 0.0;
    bool accepted = false;
    std::vector<std::string> surviving; ///< feature set after this decision
};

struct AblationSweep {
    std::size_t index = 0;
    std::vector<AblationEvaluation> evaluations;
};

struct AblationTrace {
    std::vector<std::string> initial_features;
    double baseline_auroc = 0.0;
    std::vector<AblationSweep> sweeps;
    std::vector<std::string> final_features;
    double final_auroc = 0.0;
    std::size_t retrains = 0;
};

/// Seed used for the candidate that drops `feature` during sweep `sweep`.
std::uint64_t ablation_seed(std::uint64_t master, std::size_t sweep, const std::string& feature);

/// Greedy backward elimination on validation AUROC. Each sweep walks the
/// current features in order, retrains without one of them and keeps the
/// removal at once when the AUROC strictly improves on the best so far.
/// Sweeps repeat until one accepts nothing. The last feature is never removed.
/// Factory failures are rethrown with the candidate feature list appended.
AblationTrace ablate(const ModelFactory& factory, const Dataset& train, const Dataset& val,
                     const std::vector<std::string>& features, const AblationOptions& options = {});

nlohmann::json to_json(const AblationTrace& t);

} // namespace icumort
