#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "icumort/gbt.hpp"
#include "icumort/lasso.hpp"
#include "icumort/logistic.hpp"
#include "icumort/mlp.hpp"
#include "icumort/random_forest.hpp"

namespace icumort {

inline constexpr int kModelFormatVersion = 1;

using AnyModel = std::variant<LogisticModel, LassoModel, GbtModel, RfModel, MlpModel>;

/// A fitted model together with the names of the columns it consumes, in order.
struct TrainedModel {
    AnyModel model;
    std::vector<std::string> feature_names;
};

/// "logistic", "lasso", "gbt", "rf" or "mlp".
std::string model_kind(const AnyModel& m);

std::vector<double> predict_proba(const TrainedModel& m, const Matrix& x);

/// Versioned document {format, version, kind, feature_names, payload, checksum}.
/// The checksum covers the serialized payload, so any edited field is caught
/// on load.
nlohmann::json model_to_json(const TrainedModel& m);
TrainedModel model_from_json(const nlohmann::json& doc);

void save_model(const TrainedModel& m, const std::filesystem::path& path);
/// Throws DataError on unreadable, truncated or corrupted files and on
/// version mismatches.
TrainedModel load_model(const std::filesystem::path& path);

} // namespace icumort
