#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "icumort/ablation.hpp"
#include "icumort/config.hpp"
#include "icumort/dataset.hpp"
#include "icumort/metrics.hpp"
#include "icumort/mlp_train.hpp"
#include "icumort/models.hpp"
#include "icumort/preprocess.hpp"

namespace icumort {

// ---------------------------------------------------------------------------
// Building blocks shared by the pipeline and the individual subcommands.

CsvReadOptions csv_options(const InputConfig& input);

struct PreprocessOutput {
    SplitResult split; ///< imputed and scaled
    std::vector<std::string> dropped;
    ImputerParams imputer;
    ScalerParams scaler;
};

/// Column filter on the whole cohort, then split; imputation and scaling are
/// fitted on the training part and applied to all three parts.
PreprocessOutput preprocess_dataset(const Dataset& raw, double nan_threshold, const SplitSpec& spec);
nlohmann::json to_json(const PreprocessOutput& p);

struct SelectionResult {
    std::string method;
    std::vector<std::pair<std::string, double>> ranking; ///< score per candidate, descending
    std::vector<std::string> selected;
};

/// Ranks features by boosted-tree gain or LASSO |weight| and keeps the top_k,
/// then appends keep-list names not already chosen. keep-list uses the list
/// alone.
SelectionResult select_features(const Dataset& train, const SelectConfig& cfg);
nlohmann::json to_json(const SelectionResult& s);
SelectionResult selection_from_json(const nlohmann::json& j);
/// One name per line; blank lines and '#' comments ignored.
std::vector<std::string> read_keep_list(const std::filesystem::path& path);

struct FitOutput {
    TrainedModel model;
    std::vector<EpochRecord> history; ///< DL only
};

/// Fits the configured model kind on train; DL also uses val for snapshot
/// selection. All randomness derives from `seed`.
FitOutput fit_model(const ModelConfig& cfg, const Dataset& train, const Dataset& val, std::uint64_t seed);

/// Ablation factory that fits `cfg` and scores the validation rows.
ModelFactory make_model_factory(ModelConfig cfg);

/// Scores a dataset holding (at least) the model's feature columns.
std::vector<double> score_dataset(const TrainedModel& m, const Dataset& ds);

/// "GBT-DL", "LASSO-RF", ...
std::string run_label(const std::string& selector, const std::string& model_kind);

// ---------------------------------------------------------------------------
// Full run.

struct StageRecord {
    std::string name;
    std::string status; ///< completed, skipped, resumed or failed
    nlohmann::json seeds = nlohmann::json::object();
    std::vector<std::string> artifacts;
    double wall_clock_s = 0.0;
    std::string error;
};

struct RunManifest {
    std::string config_hash;
    nlohmann::json versions;
    std::uint64_t master_seed = 0;
    std::vector<StageRecord> stages;
    bool completed = false;
    nlohmann::json result; ///< test-set report when evaluation ran
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
RunManifest load_manifest(const std::filesystem::path& path);

struct RunOptions {
    /// Skip stages recorded as completed under the same config hash whose
    /// artifacts are still present.
    bool resume = false;
};

inline const std::vector<std::string> kStageNames{"preprocess", "select", "resample", "train",
                                                  "ablate",     "evaluate", "explain"};

/// Runs every stage into cfg.out_dir and writes manifest.json after each
/// one. A failing stage is recorded in the manifest and the error rethrown.
RunManifest run_pipeline(const RunConfig& cfg, const RunOptions& options = {});

/// Applies a finished run's column filter, imputer, scaler, feature
/// selection and model to raw rows.
class Predictor {
public:
    static Predictor load(const std::filesystem::path& run_dir);

    std::vector<double> score(const Dataset& raw) const;
    const std::vector<std::string>& features() const noexcept { return model_.feature_names; }
    const TrainedModel& model() const noexcept { return model_; }

private:
    ImputerParams imputer_;
    ScalerParams scaler_;
    TrainedModel model_;
};

struct ComparisonRow {
    std::string label;
    std::filesystem::path run_dir;
    MetricsReport test;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    std::string text; ///< aligned table, best value per column marked '*'
    std::string csv;
    nlohmann::json json;
};

/// Accepts manifest.json paths or run directories. Needs at least two runs
/// with evaluation reports.
ComparisonTable compare_runs(const std::vector<std::filesystem::path>& runs);

/// Writes through a temporary file renamed into place.
void write_text(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace icumort
