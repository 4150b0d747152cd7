#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icumort/gbt.hpp"
#include "icumort/logistic.hpp"
#include "icumort/mlp.hpp"
#include "icumort/random_forest.hpp"

namespace icumort {

struct InputConfig {
    /// Exactly one of csv and synth_preset must be set.
    std::optional<std::string> csv;
    std::optional<std::string> synth_preset;
    std::optional<std::size_t> synth_rows;
    std::string label_column = "label";
    std::string group_column = "day";
};

struct PreprocessConfig {
    double nan_threshold = 0.5;
    std::array<double, 3> ratios{0.70, 0.15, 0.15};
    bool stratified = false;
};

struct SelectConfig {
    std::string method = "gbt"; ///< gbt, lasso or keep-list
    std::size_t top_k = 30;
    /// Always kept (and the whole selection for method keep-list).
    std::vector<std::string> keep_list;
    std::optional<std::string> keep_list_file;
    GbtParams gbt;
    /// LASSO penalty as a fraction of the smallest all-zero penalty.
    double lasso_lambda_ratio = 0.01;
};

struct SmoteSettings {
    bool enabled = true;
    std::size_t k_neighbors = 5;
    double ratio = 1.0;
};

struct DlSettings {
    std::vector<std::size_t> hidden{100, 50, 25};
    double dropout = 0.2;
    std::size_t dropout_sites = 2;
    bool hidden_batchnorm = false;
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    double momentum = 0.9;
};

struct ModelConfig {
    std::string kind = "dl"; ///< dl, lr, rf or gbt
    DlSettings dl;
    LogisticParams lr;
    RfParams rf;
    GbtParams gbt;
};

struct AblationConfig {
    bool enabled = false;
    double margin = 0.0;
    /// Overrides the DL epoch count for the retrains.
    std::optional<std::size_t> epochs;
};

struct EvaluateConfig {
    std::size_t bootstrap = 1000;
    double level = 0.95;
    bool per_day = true;
    double threshold = 0.5;
};

struct ExplainConfig {
    bool enabled = true;
    std::size_t rows = 100;
    std::size_t top_k = 15;
    std::size_t coalitions = 256;
    std::size_t background = 100;
};

struct RunConfig {
    std::uint64_t seed = 42;
    std::string out_dir = "run";
    InputConfig input;
    PreprocessConfig preprocess;
    SelectConfig select;
    SmoteSettings smote;
    ModelConfig model;
    AblationConfig ablation;
    EvaluateConfig evaluate;
    ExplainConfig explain;
};

/// Builds a config from its JSON form (TOML is converted first). Every
/// problem found, including unknown keys, is collected and reported in one
/// ConfigError, one per line.
RunConfig run_config_from_json(const nlohmann::json& j);
/// Reads .toml or .json by extension. Relative input paths are resolved
/// against the config file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& c);

/// Semantic checks (ranges, exactly one input, files exist). Empty when valid.
std::vector<std::string> validate(const RunConfig& c);
/// Throws ConfigError listing every problem from validate().
void require_valid(const RunConfig& c);

/// 16 hex digits identifying everything in the config except out_dir.
std::string config_hash(const RunConfig& c);

MlpArchitecture mlp_architecture(const DlSettings& s, std::size_t input_dim);

} // namespace icumort
