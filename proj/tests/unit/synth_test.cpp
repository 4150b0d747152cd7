#include <cmath>

#include <gtest/gtest.h>

#include "icumort/error.hpp"
#include "icumort/metrics.hpp"
#include "icumort/synth.hpp"

using namespace icumort;

TEST(Synth, IcuShapeLayout) {
    auto spec = paper_shape_spec(1);
    spec.bayes_draws = 20000;
    const auto c = generate_cohort(spec);
    EXPECT_EQ(c.data.n_rows(), 3487u);
    EXPECT_EQ(c.data.feature_names().size(), 50u);
    EXPECT_EQ(c.data.column(0).name, "stay_id");
    EXPECT_EQ(c.data.column(0).kind, ColumnKind::identifier);
    EXPECT_EQ(c.truth.informative.size(), 30u);
    EXPECT_EQ(c.truth.noise.size(), 20u);
    EXPECT_TRUE(c.data.has_groups());
    for (int g : c.data.groups()) EXPECT_TRUE(g >= 1 && g <= 4);
    EXPECT_NEAR(c.truth.realized_positive_fraction, 0.207, 0.03);
}

TEST(Synth, PositiveFractionHitWithinTolerance) {
    CohortSpec spec;
    spec.n_rows = 10000;
    spec.n_informative = 5;
    spec.n_noise = 2;
    spec.coefficients = {1.0, -0.5, 0.3, 0.8, -1.2};
    spec.positive_fraction = 0.2;
    spec.bayes_draws = 10000;
    spec.seed = 4;
    const auto c = generate_cohort(spec);
    EXPECT_GE(c.truth.realized_positive_fraction, 0.19);
    EXPECT_LE(c.truth.realized_positive_fraction, 0.21);
}

TEST(Synth, Deterministic) {
    auto spec = paper_shape_spec(9);
    spec.n_rows = 300;
    spec.bayes_draws = 1000;
    EXPECT_TRUE(generate_cohort(spec).data == generate_cohort(spec).data);
    auto other = spec;
    other.seed = 10;
    EXPECT_FALSE(generate_cohort(other).data == generate_cohort(spec).data);
}

TEST(Synth, MissingnessRate) {
    auto spec = paper_shape_spec(2);
    spec.n_rows = 4000;
    spec.bayes_draws = 1000;
    const auto c = generate_cohort(spec);
    std::size_t missing = 0, total = 0;
    for (std::size_t j = 1; j < c.data.n_cols(); ++j) {
        missing += c.data.column(j).missing_count;
        total += c.data.n_rows();
    }
    EXPECT_NEAR(static_cast<double>(missing) / total, 0.05, 0.005);
}

TEST(Synth, NoSignalGivesChanceAuroc) {
    CohortSpec spec;
    spec.n_rows = 4000;
    spec.n_informative = 3;
    spec.n_noise = 0;
    spec.coefficients = {0, 0, 0};
    spec.missing_rate = 0;
    spec.bayes_draws = 10000;
    const auto c = generate_cohort(spec);
    const auto col = c.data.values().column(c.data.column_index("inf_00"));
    EXPECT_NEAR(auroc(col, c.data.labels()), 0.5, 0.03);
    EXPECT_NEAR(c.truth.bayes_auroc, 0.5, 0.02);
}

TEST(Synth, NoiseColumnsUncorrelated) {
    int within = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto spec = paper_shape_spec(seed);
        spec.missing_rate = 0;
        spec.bayes_draws = 1000;
        const auto c = generate_cohort(spec);
        const double n = static_cast<double>(c.data.n_rows());
        const auto y = c.data.labels();
        for (const auto& name : c.truth.noise) {
            const auto x = c.data.values().column(c.data.column_index(name));
            double mx = 0, my = 0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                mx += x[i] / n;
                my += y[i] / n;
            }
            double sxy = 0, sxx = 0, syy = 0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                sxy += (x[i] - mx) * (y[i] - my);
                sxx += (x[i] - mx) * (x[i] - mx);
                syy += (y[i] - my) * (y[i] - my);
            }
            within += std::abs(sxy / std::sqrt(sxx * syy)) < 4 / std::sqrt(n);
            ++total;
        }
    }
    EXPECT_GE(within, static_cast<int>(std::ceil(0.99 * total)));
}

TEST(Synth, BayesAurocIncreasesWithDay) {
    const auto b = bayes_auroc(paper_shape_spec(0).coefficients, -2.5, 4, 0.3, 200000, 1);
    ASSERT_EQ(b.size(), 5u);
    for (std::size_t t = 2; t <= 4; ++t) EXPECT_GT(b[t], b[t - 1]);
    const auto flat = bayes_auroc({1.0}, 0.0, 3, 0.0, 200000, 1);
    EXPECT_NEAR(flat[1], flat[3], 0.01);
}

TEST(Synth, InvalidSpecsRejected) {
    CohortSpec spec;
    spec.n_informative = 2;
    spec.coefficients = {1.0};
    EXPECT_THROW(generate_cohort(spec), ConfigError);
    spec.coefficients = {1.0, 1.0};
    spec.positive_fraction = 1.0;
    EXPECT_THROW(generate_cohort(spec), ConfigError);
    EXPECT_THROW(preset_spec("nope", 0), ConfigError);
}

TEST(Synth, GroundTruthJsonRoundTrip) {
    auto spec = paper_shape_spec(3);
    spec.n_rows = 200;
    spec.bayes_draws = 1000;
    const auto g = generate_cohort(spec).truth;
    const auto back = ground_truth_from_json(to_json(g));
    EXPECT_EQ(back.coefficients, g.coefficients);
    EXPECT_EQ(back.bayes_auroc_per_day, g.bayes_auroc_per_day);
    EXPECT_EQ(back.intercept, g.intercept);
}
