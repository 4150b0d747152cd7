#include "icumort/mlp_train.hpp"

#include <limits>

#include "icumort/error.hpp"
#include "icumort/log.hpp"
#include "icumort/metrics.hpp"
#include "icumort/random.hpp"

namespace icumort {

TrainResult train_mlp(MlpModel model, const Matrix& x_train, std::span<const int> y_train, const Matrix& x_val,
                      std::span<const int> y_val, const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("training needs at least one epoch");
    if (cfg.batch_size < 1) throw ConfigError("batch size must be positive");
    if (x_train.rows() == 0) throw DataError("empty training set");
    if (x_train.rows() < 2) throw DataError("training needs at least two rows for batch statistics");
    if (y_train.size() != x_train.rows() || y_val.size() != x_val.rows()) {
        throw DataError("feature matrix and label lengths differ");
    }

    const SgdConfig sgd{cfg.learning_rate, cfg.momentum};
    Rng shuffle_rng(derive_seed(cfg.seed, "mlp-shuffle"));
    Rng dropout_rng(derive_seed(cfg.seed, "mlp-dropout"));
    const std::size_t n = x_train.rows();

    TrainResult result{model, {}, 0, -std::numeric_limits<double>::infinity(), 0};
    bool warned = false;
    std::vector<int> batch_y;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto order = permutation(n, shuffle_rng);
        double loss_sum = 0.0;
        std::size_t loss_rows = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            if (stop - start < 2) {
                ++result.skipped_batches;
                if (!warned) {
                    log_warning("skipping a mini-batch of one row (batch normalization needs two)");
                    warned = true;
                }
                continue;
            }
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            const Matrix xb = x_train.take_rows(rows);
            batch_y.resize(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) batch_y[i] = y_train[rows[i]];
            const double loss = model.train_step(xb, batch_y, sgd, dropout_rng);
            loss_sum += loss * static_cast<double>(rows.size());
            loss_rows += rows.size();
        }
        if (loss_rows == 0) throw ConfigError("every mini-batch has one row; use a batch size of at least 2");
        const auto val_scores = model.predict_proba(x_val);
        const double val_auc = auroc(val_scores, y_val);
        result.history.push_back({epoch, loss_sum / static_cast<double>(loss_rows), val_auc});
        if (val_auc > result.best_val_auroc) {
            result.best_val_auroc = val_auc;
            result.best_epoch = epoch;
            result.model = model;
        }
    }
    return result;
}

TrainResult train_mlp(MlpModel model, const Dataset& train, const Dataset& val, const TrainConfig& cfg) {
    if (train.feature_names() != val.feature_names()) throw DataError("training and validation schemas differ");
    return train_mlp(std::move(model), feature_matrix(train), train.labels(), feature_matrix(val), val.labels(), cfg);
}

std::string history_csv(std::span<const EpochRecord> history) {
    std::string out = "epoch,train_loss,val_auroc\n";
    for (const auto& r : history) {
        out += std::to_string(r.epoch) + "," + format_double(r.train_loss) + "," + format_double(r.val_auroc) + "\n";
    }
    return out;
}

} // namespace icumort
