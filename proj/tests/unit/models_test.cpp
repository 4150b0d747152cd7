#include <cmath>
#include <fstream>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "icumort/error.hpp"
#include "icumort/gbt.hpp"
#include "icumort/lasso.hpp"
#include "icumort/logistic.hpp"
#include "icumort/metrics.hpp"
#include "icumort/models.hpp"
#include "icumort/random_forest.hpp"
#include "icumort/tree.hpp"
#include "oracles.hpp"

using namespace icumort;

namespace {

struct Problem {
    Matrix x;
    std::vector<int> y;
};

Problem logistic_problem(std::size_t n, const std::vector<double>& w, double b, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Problem p{oracle::random_matrix(n, w.size(), rng), std::vector<int>(n)};
    std::uniform_real_distribution<double> u;
    for (std::size_t i = 0; i < n; ++i) {
        double z = b;
        for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * p.x(i, j);
        p.y[i] = u(rng) < 1 / (1 + std::exp(-z));
    }
    return p;
}

// Centered columns with x_j' x_k / n = delta_jk.
Matrix orthonormal_design(std::size_t n, std::size_t d, std::mt19937_64& rng) {
    const auto raw = oracle::random_matrix(n, d + 1, rng);
    Eigen::MatrixXd a(n, d + 1);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, 0) = 1.0;
        for (std::size_t j = 1; j <= d; ++j) a(i, j) = raw(i, j);
    }
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() * Eigen::MatrixXd::Identity(n, d + 1);
    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) x(i, j) = q(i, j + 1) * std::sqrt(static_cast<double>(n));
    }
    return x;
}

} // namespace

TEST(Logistic, GradientMatchesFiniteDifferences) {
    const auto p = logistic_problem(60, {1.0, -2.0, 0.5}, 0.3, 1);
    LogisticModel m;
    m.weights = {0.2, -0.1, 0.4};
    m.intercept = -0.3;
    const auto g = logistic_gradient(m, p.x, p.y, 0.1);
    for (std::size_t j = 0; j <= 3; ++j) {
        auto plus = m, minus = m;
        double& a = j < 3 ? plus.weights[j] : plus.intercept;
        double& b = j < 3 ? minus.weights[j] : minus.intercept;
        a += 1e-6;
        b -= 1e-6;
        const double fd = (logistic_loss(plus, p.x, p.y, 0.1) - logistic_loss(minus, p.x, p.y, 0.1)) / 2e-6;
        EXPECT_NEAR(j < 3 ? g.weights[j] : g.intercept, fd, 1e-7);
    }
}

TEST(Logistic, LossNonIncreasingAndRecoversSigns) {
    const auto p = logistic_problem(2000, {1.5, -1.0, 0.0}, -0.5, 2);
    const auto m = fit_logistic(p.x, p.y, {0.5, 500, 0.0});
    for (std::size_t i = 1; i < m.loss_history.size(); ++i) EXPECT_LE(m.loss_history[i], m.loss_history[i - 1] * (1 + 1e-12));
    EXPECT_NEAR(m.weights[0], 1.5, 0.2);
    EXPECT_NEAR(m.weights[1], -1.0, 0.2);
    EXPECT_NEAR(m.weights[2], 0.0, 0.15);
}

TEST(Logistic, RecoversCoefficientsAtLargeN) {
    const std::vector<double> w{0.8, -0.6, 0.4, -0.2};
    const auto p = logistic_problem(50000, w, -1.0, 3);
    const auto m = fit_logistic(p.x, p.y, {1.0, 3000, 0.0});
    for (std::size_t j = 0; j < w.size(); ++j) EXPECT_LT(oracle::relative_error(m.weights[j], w[j]), 0.1) << j;
}

TEST(Lasso, SoftThreshold) {
    EXPECT_EQ(soft_threshold(3.0, 1.0), 2.0);
    EXPECT_EQ(soft_threshold(-3.0, 1.0), -2.0);
    EXPECT_EQ(soft_threshold(0.5, 1.0), 0.0);
    EXPECT_EQ(soft_threshold(-1.0, 1.0), 0.0);
}

TEST(Lasso, OrthonormalDesignMatchesClosedForm) {
    std::mt19937_64 rng(7);
    const std::size_t n = 200, d = 6;
    const auto x = orthonormal_design(n, d, rng);
    std::normal_distribution<double> z;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = 2 * x(i, 0) - 0.3 * x(i, 1) + 0.05 * x(i, 2) + z(rng);
    const double lambda = 0.2;
    const auto m = fit_lasso(x, y, {lambda, 1e-14, 1000});
    double ybar = 0;
    for (double v : y) ybar += v / n;
    for (std::size_t j = 0; j < d; ++j) {
        double rho = 0;
        for (std::size_t i = 0; i < n; ++i) rho += x(i, j) * (y[i] - ybar) / n;
        EXPECT_NEAR(m.weights[j], soft_threshold(rho, lambda), 1e-8);
    }
    EXPECT_NEAR(m.intercept, ybar, 1e-8);
}

TEST(Lasso, ZeroPenaltyMatchesNormalEquations) {
    std::mt19937_64 rng(8);
    const auto x = oracle::random_matrix(100, 5, rng);
    std::vector<double> y(100);
    std::normal_distribution<double> z;
    for (std::size_t i = 0; i < 100; ++i) y[i] = x(i, 0) - 2 * x(i, 3) + 0.5 + 0.3 * z(rng);
    const auto m = fit_lasso(x, y, {0.0, 1e-15, 100000});
    const auto ref = oracle::normal_equations(x, y);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(m.weights[j], ref[j], 1e-6);
    EXPECT_NEAR(m.intercept, ref[5], 1e-6);
}

TEST(Lasso, ObjectiveMonotoneOverSweeps) {
    std::mt19937_64 rng(9);
    const auto x = oracle::random_matrix(80, 10, rng);
    std::vector<double> y(80);
    for (std::size_t i = 0; i < 80; ++i) y[i] = x(i, 0) + x(i, 1) * x(i, 2);
    const auto m = fit_lasso(x, y, {0.05, 1e-10, 500});
    ASSERT_GT(m.objective_history.size(), 1u);
    for (std::size_t i = 1; i < m.objective_history.size(); ++i) {
        EXPECT_LE(m.objective_history[i], m.objective_history[i - 1] + 1e-12);
    }
}

TEST(Lasso, LambdaMaxZeroesEverything) {
    std::mt19937_64 rng(10);
    const auto x = oracle::random_matrix(50, 4, rng);
    std::vector<double> y(50);
    for (std::size_t i = 0; i < 50; ++i) y[i] = x(i, 1);
    const double lmax = lasso_lambda_max(x, y);
    EXPECT_TRUE(lasso_selected(fit_lasso(x, y, {lmax * 1.0001})).empty());
    EXPECT_FALSE(lasso_selected(fit_lasso(x, y, {lmax * 0.5})).empty());
}

TEST(Tree, SplitGainFormula) {
    EXPECT_DOUBLE_EQ(split_gain(-2, 1, 2, 1, 1, 0), 0.5 * (4.0 / 2 + 4.0 / 2 - 0));
    EXPECT_DOUBLE_EQ(leaf_weight(-3, 2, 1), 1.0);
    EXPECT_DOUBLE_EQ(midpoint_threshold(1, 2), 1.5);
}

TEST(Tree, BestSplitMatchesEnumeration) {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> small(-8, 8);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng() % 9, d = 1 + rng() % 3;
        Matrix x(n, d);
        std::vector<double> g(n), h(n);
        for (auto& v : x.data()) v = small(rng) / 4.0;
        for (std::size_t i = 0; i < n; ++i) {
            g[i] = small(rng) / 8.0;
            h[i] = (1 + rng() % 8) / 8.0;
        }
        std::vector<std::size_t> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = i;
        const auto got = find_best_split(x, g, h, rows, 1.0, 0.0);
        const auto want = oracle::brute_force_split(x, g, h, 1.0, 0.0);
        ASSERT_EQ(got.has_value(), want.found);
        if (!want.found) continue;
        EXPECT_EQ(got->feature, want.feature);
        EXPECT_EQ(got->threshold, want.threshold);
        EXPECT_EQ(got->gain, want.gain);
    }
}

TEST(Gbt, LearnsSignalAndRanksImportance) {
    const auto p = logistic_problem(1500, {2.0, 0.0, -1.0}, 0.0, 13);
    const auto m = fit_gbt(p.x, p.y, {50, 3, 0.1, 1.0, 0.0, {}}, {"a", "b", "c"});
    const auto probs = predict_proba(m, p.x);
    EXPECT_GT(auroc(probs, p.y), 0.8);
    const auto imp = gbt_importance(m);
    ASSERT_FALSE(imp.empty());
    EXPECT_EQ(imp[0].first, "a");
    for (const auto& t : m.trees) EXPECT_TRUE(t.well_formed());
}

TEST(Gbt, BaseScoreIsLogOddsOfBaseRate) {
    Matrix x(4, 1, 0.0);
    const std::vector<int> y{1, 0, 0, 0};
    const auto m = fit_gbt(x, y, {1, 2, 0.1, 1.0, 0.0, {}});
    EXPECT_NEAR(m.base_score, std::log(0.25 / 0.75), 1e-12);
    for (double p : predict_proba(m, x)) EXPECT_NEAR(p, 0.25, 1e-12);
}

TEST(RandomForest, VotesAreFractions) {
    const auto p = logistic_problem(400, {3.0, 0.0}, 0.0, 14);
    RfParams params;
    params.n_trees = 25;
    params.seed = 3;
    const auto m = fit_random_forest(p.x, p.y, params);
    const auto probs = predict_proba(m, p.x);
    for (double v : probs) {
        const double votes = v * 25;
        EXPECT_NEAR(votes, std::round(votes), 1e-9);
    }
    EXPECT_GT(auroc(probs, p.y), 0.9);
    EXPECT_EQ(default_max_features(50), 7u);
    const auto again = fit_random_forest(p.x, p.y, params);
    EXPECT_EQ(predict_proba(again, p.x), probs);
}

TEST(Serialization, RoundTripPreservesPredictions) {
    const auto p = logistic_problem(300, {1.0, -1.0}, 0.0, 15);
    const std::vector<std::string> names{"a", "b"};
    RfParams rp;
    rp.n_trees = 5;
    const std::vector<TrainedModel> models{
        {fit_logistic(p.x, p.y, {0.5, 100, 0.0}, names), names},
        {fit_lasso(p.x, labels_as_targets(p.y), {0.01}, names), names},
        {fit_gbt(p.x, p.y, {10, 3, 0.1, 1.0, 0.0, {}}, names), names},
        {fit_random_forest(p.x, p.y, rp, names), names},
    };
    const auto dir = oracle::scratch_dir("serialization");
    for (const auto& m : models) {
        const auto path = dir / (model_kind(m.model) + ".json");
        save_model(m, path);
        const auto back = load_model(path);
        EXPECT_EQ(model_kind(back.model), model_kind(m.model));
        EXPECT_EQ(predict_proba(back, p.x), predict_proba(m, p.x));
        EXPECT_EQ(model_to_json(back).dump(), model_to_json(m).dump());
    }
}

TEST(Serialization, CorruptionDetected) {
    const auto p = logistic_problem(100, {1.0}, 0.0, 16);
    const TrainedModel m{fit_logistic(p.x, p.y, {0.5, 50, 0.0}, {"a"}), {"a"}};
    const auto dir = oracle::scratch_dir("corrupt");
    auto doc = model_to_json(m);
    doc["payload"]["intercept"] = 123.0;
    std::ofstream(dir / "edited.json") << doc.dump();
    EXPECT_THROW(load_model(dir / "edited.json"), DataError);

    const auto text = model_to_json(m).dump();
    std::ofstream(dir / "truncated.json") << text.substr(0, text.size() / 2);
    EXPECT_THROW(load_model(dir / "truncated.json"), DataError);

    auto old = model_to_json(m);
    old["version"] = 99;
    std::ofstream(dir / "version.json") << old.dump();
    EXPECT_THROW(load_model(dir / "version.json"), DataError);
    EXPECT_THROW(load_model(dir / "absent.json"), DataError);
}

TEST(Serialization, FeatureCountMismatchRejected) {
    const auto p = logistic_problem(100, {1.0, 1.0}, 0.0, 17);
    const TrainedModel m{fit_logistic(p.x, p.y, {0.5, 50, 0.0}, {"a", "b"}), {"a", "b"}};
    EXPECT_THROW(predict_proba(m, Matrix(3, 5)), DataError);
}
