#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "icumort/dataset.hpp"
#include "icumort/mlp.hpp"

namespace icumort {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 0;
};

struct EpochRecord {
    std::size_t epoch = 0; ///< 1-based
    double train_loss = 0.0;
    double val_auroc = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
    /// Parameters from the epoch with the highest validation AUROC (first one on ties).
    MlpModel model;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_auroc = 0.0;
    std::size_t skipped_batches = 0;
};

/// Mini-batch SGD over shuffled rows. The trailing partial batch is used,
/// except a batch of one row, which batch normalization cannot handle and is
/// skipped with a warning. Shuffling and dropout draw from generators derived
/// from cfg.seed, so identical inputs give a bitwise-identical history.
TrainResult train_mlp(MlpModel model, const Matrix& x_train, std::span<const int> y_train, const Matrix& x_val,
                      std::span<const int> y_val, const TrainConfig& cfg);
TrainResult train_mlp(MlpModel model, const Dataset& train, const Dataset& val, const TrainConfig& cfg);

/// epoch,train_loss,val_auroc
std::string history_csv(std::span<const EpochRecord> history);

} // namespace icumort
