#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "icumort/error.hpp"
#include "icumort/smote.hpp"
#include "oracles.hpp"

using namespace icumort;

namespace {

Dataset imbalanced(std::size_t n_major, std::size_t n_minor, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto x = oracle::random_matrix(n_major + n_minor, d, rng);
    std::vector<ColumnMeta> cols;
    for (std::size_t j = 0; j < d; ++j) cols.push_back({"f" + std::to_string(j), ColumnKind::numeric, 0});
    std::vector<int> y(n_major + n_minor, 0);
    for (std::size_t i = n_major; i < y.size(); ++i) y[i] = 1;
    return Dataset(cols, x, y);
}

} // namespace

TEST(Knn, MatchesSortedDistances) {
    std::mt19937_64 rng(4);
    const auto x = oracle::random_matrix(40, 3, rng);
    std::vector<std::size_t> rows(40);
    for (std::size_t i = 0; i < 40; ++i) rows[i] = i;
    for (std::size_t i = 0; i < 40; ++i) {
        const auto got = nearest_neighbors(x, rows, i, 5);
        const auto want = oracle::brute_knn(x, i, 5);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t j = 0; j < got.size(); ++j) EXPECT_EQ(rows[got[j]], want[j]);
    }
}

TEST(Smote, BalancesAndKeepsOriginalsFirst) {
    const auto ds = imbalanced(200, 50, 4, 1);
    const auto out = smote(ds, {5, 1.0, 7});
    EXPECT_EQ(out.n_original, 250u);
    EXPECT_EQ(out.n_synthetic, 150u);
    EXPECT_EQ(out.minority_label, 1);
    for (std::size_t r = 0; r < 250; ++r) {
        for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out.data.at(r, c), ds.at(r, c));
    }
    for (std::size_t r = 250; r < out.data.n_rows(); ++r) EXPECT_EQ(out.data.labels()[r], 1);
}

TEST(Smote, PartialRatio) {
    const auto out = smote(imbalanced(100, 10, 2, 2), {3, 0.5, 0});
    EXPECT_EQ(out.n_synthetic, 40u);
}

TEST(Smote, AlreadyBalancedAddsNothing) {
    const auto out = smote(imbalanced(50, 50, 2, 3), {5, 1.0, 0});
    EXPECT_EQ(out.n_synthetic, 0u);
}

TEST(Smote, SyntheticRowsLieOnNeighbourSegments) {
    const auto ds = imbalanced(120, 30, 3, 8);
    const auto out = smote(ds, {5, 1.0, 9});
    const auto minority = feature_matrix(ds).take_rows(std::vector<std::size_t>{
        120, 121, 122, 123, 124, 125, 126, 127, 128, 129, 130, 131, 132, 133, 134,
        135, 136, 137, 138, 139, 140, 141, 142, 143, 144, 145, 146, 147, 148, 149});
    for (std::size_t r = out.n_original; r < out.data.n_rows(); ++r) {
        bool ok = false;
        for (std::size_t i = 0; i < minority.rows() && !ok; ++i) {
            for (auto j : oracle::brute_knn(minority, i, 5)) {
                double lambda = NAN;
                bool consistent = true;
                for (std::size_t c = 0; c < 3; ++c) {
                    const double span = minority(j, c) - minority(i, c);
                    const double off = out.data.at(r, c) - minority(i, c);
                    if (std::abs(span) < 1e-12) {
                        consistent = consistent && std::abs(off) < 1e-9;
                        continue;
                    }
                    const double l = off / span;
                    if (std::isnan(lambda)) lambda = l;
                    consistent = consistent && std::abs(l - lambda) < 1e-9;
                }
                if (consistent && lambda >= -1e-9 && lambda <= 1 + 1e-9) {
                    ok = true;
                    break;
                }
            }
        }
        EXPECT_TRUE(ok) << "synthetic row " << r;
    }
}

TEST(Smote, SeededDeterminism) {
    const auto ds = imbalanced(60, 10, 2, 5);
    EXPECT_TRUE(smote(ds, {5, 1.0, 1}).data == smote(ds, {5, 1.0, 1}).data);
    EXPECT_FALSE(smote(ds, {5, 1.0, 1}).data == smote(ds, {5, 1.0, 2}).data);
}

TEST(Smote, RejectsBadInput) {
    EXPECT_THROW(smote(imbalanced(10, 1, 2, 1), {5, 1.0, 0}), DataError);
    EXPECT_THROW(smote(imbalanced(10, 5, 2, 1), {0, 1.0, 0}), ConfigError);
    auto ds = imbalanced(10, 5, 2, 1);
    Matrix v = ds.values();
    v(0, 0) = kMissing;
    EXPECT_THROW(smote(Dataset(ds.columns(), v, ds.maybe_labels()), {3, 1.0, 0}), DataError);
}
