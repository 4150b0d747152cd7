#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "icumort/error.hpp"
#include "icumort/shapley.hpp"
#include "oracles.hpp"

using namespace icumort;

namespace {

// Nonlinear test model with interactions among the first few features.
PredictFn nonlinear(const std::vector<double>& w) {
    return [w](const Matrix& x) {
        std::vector<double> out(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            double z = 0;
            for (std::size_t c = 0; c < x.cols(); ++c) z += w[c] * x(r, c);
            z += 0.5 * x(r, 0) * x(r, 1) - 0.3 * std::max(x(r, 2), 0.0);
            out[r] = 1 / (1 + std::exp(-z));
        }
        return out;
    };
}

PredictFn linear(const std::vector<double>& w, double b) {
    return [w, b](const Matrix& x) {
        std::vector<double> out(x.rows(), b);
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t c = 0; c < x.cols(); ++c) out[r] += w[c] * x(r, c);
        }
        return out;
    };
}

std::vector<double> random_weights(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    std::vector<double> w(d);
    for (auto& v : w) v = z(rng);
    return w;
}

} // namespace

TEST(ExactShapley, MatchesPermutationDefinition) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 5; ++t) {
        const std::size_t d = 5;
        const auto f = nonlinear(random_weights(d, rng));
        const auto bg = oracle::random_matrix(6, d, rng);
        const auto x = oracle::random_matrix(1, d, rng);
        const auto rep = exact_shapley(f, bg, x.row(0));
        const auto ref = oracle::permutation_shapley(
            d, [&](std::uint64_t mask) { return oracle::coalition_value(f, bg, x.row(0), mask); });
        for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(rep.attributions[j], ref[j], 1e-12);
        EXPECT_LE(std::abs(rep.additivity_residual), 1e-12);
    }
}

TEST(ExactShapley, DummyAndSymmetry) {
    const std::vector<double> w{1.0, 0.0, 1.0};
    const auto f = [&](const Matrix& x) {
        std::vector<double> out(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) out[r] = std::tanh(x(r, 0) + x(r, 2));
        return out;
    };
    Matrix bg(3, 3);
    bg(0, 0) = bg(0, 2) = 0.3;
    bg(1, 0) = bg(1, 2) = -1.0;
    bg(2, 1) = 5.0;
    const std::vector<double> x{0.8, -2.0, 0.8};
    const auto rep = exact_shapley(f, bg, x);
    EXPECT_LE(std::abs(rep.attributions[1]), 1e-12);
    EXPECT_NEAR(rep.attributions[0], rep.attributions[2], 1e-12);
}

TEST(ExactShapley, TooManyFeaturesRejected) {
    const auto f = linear(std::vector<double>(15, 1.0), 0.0);
    EXPECT_THROW(exact_shapley(f, Matrix(2, 15), std::vector<double>(15, 0.0)), ConfigError);
}

TEST(KernelShap, FullEnumerationMatchesExact) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 5; ++t) {
        const std::size_t d = 6;
        const auto f = nonlinear(random_weights(d, rng));
        const auto bg = oracle::random_matrix(10, d, rng);
        const auto x = oracle::random_matrix(1, d, rng);
        const auto exact = exact_shapley(f, bg, x.row(0));
        const auto kernel = kernel_shap(f, bg, x.row(0), 1u << d, 0);
        for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(kernel.attributions[j], exact.attributions[j], 1e-9);
        EXPECT_LE(std::abs(kernel.additivity_residual), 1e-9);
    }
}

TEST(KernelShap, LinearModelClosedForm) {
    std::mt19937_64 rng(3);
    const std::size_t d = 12;
    const auto w = random_weights(d, rng);
    const auto f = linear(w, 0.7);
    const auto bg = oracle::random_matrix(20, d, rng);
    const auto x = oracle::random_matrix(1, d, rng);
    const auto rep = kernel_shap(f, bg, x.row(0), 100, 4);
    for (std::size_t j = 0; j < d; ++j) {
        const auto col = bg.column(j);
        const double mean = std::accumulate(col.begin(), col.end(), 0.0) / 20.0;
        EXPECT_NEAR(rep.attributions[j], w[j] * (x(0, j) - mean), 1e-9);
    }
    EXPECT_LE(std::abs(rep.additivity_residual), 1e-9);
}

TEST(KernelShap, SampledBudgetKeepsAdditivityAndDeterminism) {
    std::mt19937_64 rng(5);
    const std::size_t d = 20;
    const auto f = nonlinear(random_weights(d, rng));
    const auto bg = oracle::random_matrix(10, d, rng);
    const auto x = oracle::random_matrix(1, d, rng);
    const auto a = kernel_shap(f, bg, x.row(0), 200, 9);
    const auto b = kernel_shap(f, bg, x.row(0), 200, 9);
    EXPECT_EQ(a.attributions, b.attributions);
    EXPECT_LE(std::abs(a.additivity_residual), 1e-9);
    EXPECT_NEAR(a.prediction, f(x)[0], 1e-15);
}

TEST(KernelShap, BudgetBelowMinimumRejected) {
    const auto f = linear({1, 1, 1}, 0);
    EXPECT_THROW(kernel_shap(f, Matrix(2, 3), std::vector<double>{1, 2, 3}, 4, 0), ConfigError);
}

TEST(KernelShap, BackgroundSampling) {
    std::mt19937_64 rng(6);
    const auto x = oracle::random_matrix(500, 3, rng);
    const auto s = sample_background(x, 100, 1);
    EXPECT_EQ(s.rows(), 100u);
    EXPECT_TRUE(s == sample_background(x, 100, 1));
    EXPECT_EQ(sample_background(x, 1000, 1).rows(), 500u);
}

TEST(ShapSummary, ConstantModelAllZero) {
    std::mt19937_64 rng(7);
    const auto bg = oracle::random_matrix(5, 4, rng);
    const auto sample = oracle::random_matrix(3, 4, rng);
    const PredictFn f = [](const Matrix& x) { return std::vector<double>(x.rows(), 0.3); };
    const auto s = shap_summary(f, bg, sample, {"a", "b", "c", "d"}, 4, 16, 0);
    for (double v : s.attributions.values()) EXPECT_NEAR(v, 0.0, 1e-12);
    ASSERT_EQ(s.ranking.size(), 4u);
    EXPECT_EQ(s.ranking[0].feature, "a");
}

TEST(ShapSummary, SingleFeatureModelOwnsAllAttribution) {
    std::mt19937_64 rng(8);
    const auto bg = oracle::random_matrix(10, 3, rng);
    const auto sample = oracle::random_matrix(8, 3, rng);
    const auto f = linear({0, 2.0, 0}, 0.0);
    const auto s = shap_summary(f, bg, sample, {"a", "b", "c"}, 2, 8, 0);
    ASSERT_EQ(s.ranking.size(), 2u);
    EXPECT_EQ(s.ranking[0].feature, "b");
    EXPECT_NEAR(s.ranking[1].mean_abs, 0.0, 1e-12);
}

TEST(ShapSummary, LinearRankingFollowsWeightTimesSpread) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z;
    const std::vector<double> sd{1.0, 3.0, 0.5, 2.0};
    const std::vector<double> w{1.0, 0.5, 4.0, -0.2}; // |w| sd = 1, 1.5, 2, 0.4
    Matrix data(600, 4);
    for (std::size_t r = 0; r < 600; ++r) {
        for (std::size_t c = 0; c < 4; ++c) data(r, c) = sd[c] * z(rng);
    }
    std::vector<std::size_t> bi(100), si(500);
    std::iota(bi.begin(), bi.end(), std::size_t{0});
    std::iota(si.begin(), si.end(), std::size_t{100});
    const auto s = shap_summary(linear(w, 0), data.take_rows(bi), data.take_rows(si), {"a", "b", "c", "d"}, 4, 16, 1);
    std::vector<std::string> order;
    for (const auto& e : s.ranking) order.push_back(e.feature);
    EXPECT_EQ(order, (std::vector<std::string>{"c", "b", "a", "d"}));
}

TEST(ShapSummary, CsvLayout) {
    const auto f = linear({1, 1}, 0);
    Matrix sample(2, 2, 1.0);
    const auto s = shap_summary(f, Matrix(1, 2), sample, {"a", "b"}, 2, 4, 0);
    const auto csv = shap_csv(s, sample);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "row_id,feature,value,attribution");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}
