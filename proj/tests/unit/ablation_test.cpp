#include <random>

#include <gtest/gtest.h>

#include "icumort/ablation.hpp"
#include "icumort/error.hpp"
#include "icumort/random.hpp"

using namespace icumort;

namespace {

// Columns "good*" carry the label, "bad*" carry its negation.
Dataset cohort(std::size_t n, const std::vector<std::string>& names, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<ColumnMeta> cols;
    for (const auto& name : names) cols.push_back({name, ColumnKind::numeric, 0});
    Matrix v(n, names.size());
    std::vector<int> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        y[r] = static_cast<int>(rng() % 2);
        for (std::size_t c = 0; c < names.size(); ++c) {
            const double sign = names[c].rfind("good", 0) == 0 ? 1.0 : -0.7;
            v(r, c) = sign * y[r] + z(rng);
        }
    }
    return Dataset(cols, v, y);
}

// Scores are the row sums of whatever columns the candidate keeps.
std::vector<double> sum_scores(const Dataset&, const Dataset& val, std::uint64_t) {
    std::vector<double> s(val.n_rows(), 0.0);
    for (std::size_t r = 0; r < val.n_rows(); ++r) {
        for (std::size_t c = 0; c < val.n_cols(); ++c) s[r] += val.at(r, c);
    }
    return s;
}

} // namespace

TEST(Ablation, RemovesHarmfulFeaturesWithStrictlyIncreasingAuroc) {
    const std::vector<std::string> names{"good0", "bad0", "good1", "bad1", "good2"};
    const auto train = cohort(50, names, 1);
    const auto val = cohort(400, names, 2);
    const auto trace = ablate(sum_scores, train, val, names);
    EXPECT_EQ(trace.final_features, (std::vector<std::string>{"good0", "good1", "good2"}));
    double best = trace.baseline_auroc;
    for (const auto& sweep : trace.sweeps) {
        for (const auto& e : sweep.evaluations) {
            EXPECT_EQ(e.auroc_before, best);
            if (e.accepted) {
                EXPECT_GT(e.auroc_after, best);
                best = e.auroc_after;
            }
        }
    }
    EXPECT_EQ(best, trace.final_auroc);
    // one sweep removes both, the second accepts nothing
    ASSERT_EQ(trace.sweeps.size(), 2u);
    for (const auto& e : trace.sweeps.back().evaluations) EXPECT_FALSE(e.accepted);
}

TEST(Ablation, AcceptanceShrinksTheCurrentSweepImmediately) {
    const std::vector<std::string> names{"bad0", "good0", "good1"};
    const auto val = cohort(300, names, 3);
    const auto trace = ablate(sum_scores, val, val, names);
    ASSERT_FALSE(trace.sweeps.empty());
    const auto& first = trace.sweeps[0].evaluations;
    ASSERT_TRUE(first[0].accepted);
    EXPECT_EQ(first[0].surviving, (std::vector<std::string>{"good0", "good1"}));
    EXPECT_EQ(first.size(), 3u); // bad0, then good0 and good1 against the shrunk set
}

TEST(Ablation, AllInformativeKeepsEverything) {
    const std::vector<std::string> names{"good0", "good1", "good2", "good3"};
    const auto val = cohort(500, names, 4);
    const auto trace = ablate(sum_scores, val, val, names);
    EXPECT_EQ(trace.final_features, names);
    EXPECT_EQ(trace.sweeps.size(), 1u);
    EXPECT_EQ(trace.retrains, 1u + names.size());
}

TEST(Ablation, MarginBlocksSmallGains) {
    const std::vector<std::string> names{"good0", "bad0"};
    const auto val = cohort(300, names, 5);
    AblationOptions o;
    o.margin = 1.0;
    EXPECT_EQ(ablate(sum_scores, val, val, names, o).final_features, names);
}

TEST(Ablation, LastFeatureNeverRemoved) {
    const std::vector<std::string> names{"bad0"};
    const auto val = cohort(100, names, 6);
    const auto trace = ablate(sum_scores, val, val, names);
    EXPECT_EQ(trace.final_features, names);
}

TEST(Ablation, SeedsDependOnFeatureAndSweep) {
    std::vector<std::uint64_t> seen;
    const std::vector<std::string> names{"good0", "good1"};
    const auto val = cohort(100, names, 7);
    ablate(
        [&](const Dataset& t, const Dataset& v, std::uint64_t seed) {
            seen.push_back(seed);
            return sum_scores(t, v, seed);
        },
        val, val, names, {0.0, 11});
    ASSERT_EQ(seen.size(), 3u);
    EXPECT_EQ(seen[1], ablation_seed(11, 0, "good0"));
    EXPECT_EQ(seen[2], ablation_seed(11, 0, "good1"));
    EXPECT_NE(ablation_seed(11, 0, "good0"), ablation_seed(11, 1, "good0"));
}

TEST(Ablation, FactoryErrorNamesTheCandidateSet) {
    const std::vector<std::string> names{"good0", "good1"};
    const auto val = cohort(50, names, 8);
    int calls = 0;
    try {
        ablate(
            [&](const Dataset& t, const Dataset& v, std::uint64_t s) -> std::vector<double> {
                if (++calls == 2) throw NumericError("diverged");
                return sum_scores(t, v, s);
            },
            val, val, names);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("good1"), std::string::npos);
    }
}
