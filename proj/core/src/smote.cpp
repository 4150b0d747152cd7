#include "icumort/smote.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "icumort/error.hpp"
#include "icumort/random.hpp"

namespace icumort {

std::vector<std::size_t> nearest_neighbors(const Matrix& x, std::span<const std::size_t> rows, std::size_t i,
                                           std::size_t k) {
    const auto base = x.row(rows[i]);
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
        if (j == i) continue;
        const auto other = x.row(rows[j]);
        double d2 = 0.0;
        for (std::size_t c = 0; c < base.size(); ++c) {
            const double diff = base[c] - other[c];
            d2 += diff * diff;
        }
        dist.emplace_back(d2, j);
    }
    k = std::min(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t j = 0; j < k; ++j) out[j] = dist[j].second;
    return out;
}

SmoteResult smote(const Dataset& train, const SmoteConfig& cfg) {
    if (cfg.k_neighbors < 1) throw ConfigError("SMOTE needs k_neighbors >= 1");
    if (!(cfg.target_ratio > 0.0)) throw ConfigError("SMOTE target ratio must be positive");
    if (!train.has_labels()) throw DataError("SMOTE needs labelled data");
    if (train.has_missing()) throw DataError("SMOTE needs imputed data");

    const auto labels = train.labels();
    const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const std::size_t negatives = labels.size() - positives;
    const int minority_label = positives <= negatives ? 1 : 0;
    const std::size_t minority = std::min(positives, negatives);
    const std::size_t majority = std::max(positives, negatives);

    if (minority <= cfg.k_neighbors) {
        throw DataError("minority class has " + std::to_string(minority) + " rows, SMOTE needs more than k=" +
                        std::to_string(cfg.k_neighbors));
    }

    SmoteResult result{train, train.n_rows(), 0, minority_label};
    const auto wanted = static_cast<std::size_t>(std::floor(cfg.target_ratio * static_cast<double>(majority) + 1e-9));
    if (wanted <= minority) return result;
    const std::size_t n_new = wanted - minority;

    std::vector<std::size_t> minority_rows;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] == minority_label) minority_rows.push_back(r);
    }

    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < train.n_cols(); ++c) {
        if (train.column(c).kind != ColumnKind::identifier) feature_cols.push_back(c);
    }
    const Matrix features = train.values().take_cols(feature_cols);

    std::vector<std::vector<std::size_t>> neighbors(minority_rows.size());
    for (std::size_t i = 0; i < minority_rows.size(); ++i) {
        neighbors[i] = nearest_neighbors(features, minority_rows, i, cfg.k_neighbors);
    }

    // Bases cycle through a seeded permutation of the minority rows so every
    // row seeds roughly the same number of synthetic points.
    Rng rng(cfg.seed);
    const auto order = permutation(minority_rows.size(), rng);
    std::uniform_int_distribution<std::size_t> pick(0, cfg.k_neighbors - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const std::size_t d = train.n_cols();
    std::vector<double> values(train.values().values());
    values.reserve((train.n_rows() + n_new) * d);
    std::vector<int> out_labels(labels.begin(), labels.end());
    std::optional<std::vector<int>> out_groups = train.maybe_groups();

    for (std::size_t s = 0; s < n_new; ++s) {
        const std::size_t i = order[s % order.size()];
        const std::size_t nn = neighbors[i][pick(rng)];
        const double lambda = unit(rng);
        const auto x = train.row(minority_rows[i]);
        const auto y = train.row(minority_rows[nn]);
        for (std::size_t c = 0; c < d; ++c) {
            const bool ident = train.column(c).kind == ColumnKind::identifier;
            values.push_back(ident ? x[c] : x[c] + lambda * (y[c] - x[c]));
        }
        out_labels.push_back(minority_label);
        if (out_groups) out_groups->push_back((*out_groups)[minority_rows[i]]);
    }

    result.data = Dataset(train.columns(), Matrix(train.n_rows() + n_new, d, std::move(values)),
                          std::move(out_labels), std::move(out_groups), train.label_name(), train.group_name());
    result.n_synthetic = n_new;
    return result;
}

} // namespace icumort
