#include "icumort/random_forest.hpp"

#include <cmath>
#include <numeric>

#include "icumort/error.hpp"
#include "icumort/logistic.hpp"
#include "icumort/random.hpp"

namespace icumort {

std::size_t default_max_features(std::size_t d) {
    auto k = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d))));
    return std::max<std::size_t>(k, 1);
}

RfModel fit_random_forest(const Matrix& x, std::span<const int> y, const RfParams& params,
                          std::vector<std::string> feature_names) {
    const std::size_t n = x.rows();
    if (y.size() != n) throw DataError("feature matrix and label lengths differ");
    if (n == 0) throw DataError("cannot fit a random forest on zero rows");
    if (params.n_trees < 1) throw ConfigError("random forest needs n_trees >= 1");
    for (double v : x.data()) {
        if (!std::isfinite(v)) throw NumericError("feature matrix contains non-finite values");
    }
    if (feature_names.empty()) feature_names = default_feature_names(x.cols());
    if (feature_names.size() != x.cols()) throw DataError("feature name count does not match columns");

    RfModel m;
    m.params = params;
    m.params.max_features = params.max_features == 0 ? default_max_features(x.cols()) : params.max_features;
    m.feature_names = std::move(feature_names);

    const ClassificationTreeParams tree_params{params.max_depth, params.min_samples_split, m.params.max_features};
    m.trees.reserve(params.n_trees);
    std::vector<std::size_t> rows(n);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        Rng rng(derive_seed(params.seed, "rf-tree", t));
        if (params.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            for (auto& r : rows) r = pick(rng);
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        m.trees.push_back(grow_classification_tree(x, y, rows, tree_params, rng));
    }
    return m;
}

std::vector<double> predict_proba(const RfModel& m, const Matrix& x) {
    if (x.cols() != m.feature_names.size()) {
        throw DataError("random forest expects " + std::to_string(m.feature_names.size()) + " features, got " +
                        std::to_string(x.cols()));
    }
    std::vector<double> out(x.rows(), 0.0);
    for (const auto& tree : m.trees) {
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] += tree.predict(x.row(i));
    }
    const auto count = static_cast<double>(m.trees.size());
    for (auto& v : out) v /= count;
    return out;
}

} // namespace icumort
