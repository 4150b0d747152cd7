#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "icumort/config.hpp"
#include "icumort/error.hpp"
#include "icumort/metrics.hpp"
#include "icumort/pipeline.hpp"
#include "icumort/synth.hpp"
#include "oracles.hpp"

using namespace icumort;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const fs::path& out, const std::string& kind) {
    RunConfig c;
    c.input.synth_preset = "paper-shape";
    c.input.synth_rows = 600;
    c.out_dir = out.string();
    c.select.top_k = 10;
    c.model.kind = kind;
    c.model.dl.epochs = 3;
    c.model.rf.n_trees = 10;
    c.model.gbt.n_trees = 10;
    c.select.gbt.n_trees = 10;
    c.evaluate.bootstrap = 50;
    c.explain.rows = 5;
    c.explain.background = 10;
    c.explain.coalitions = 24;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ICUMORT_CLI) + " --quiet " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST(Pipeline, SmallRunProducesEveryArtifact) {
    const auto dir = oracle::scratch_dir("pipeline_small");
    const auto m = run_pipeline(small_config(dir, "dl"));
    EXPECT_TRUE(m.completed);
    ASSERT_EQ(m.stages.size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(m.stages[i].name, kStageNames[i]);
    EXPECT_EQ(m.stages[4].status, "skipped");
    for (const auto& s : m.stages) {
        for (const auto& a : s.artifacts) EXPECT_TRUE(fs::exists(dir / a)) << a;
    }
    EXPECT_TRUE(m.result.contains("auroc"));
    const auto manifest = load_manifest(dir / "manifest.json");
    EXPECT_EQ(manifest.config_hash, m.config_hash);
}

TEST(Pipeline, ResumeReusesCompletedStages) {
    const auto dir = oracle::scratch_dir("pipeline_resume");
    auto cfg = small_config(dir, "lr");
    cfg.explain.enabled = false;
    run_pipeline(cfg);
    const auto before = slurp(dir / "metrics.json");
    const auto resumed = run_pipeline(cfg, {true});
    for (const auto& s : resumed.stages) {
        if (s.status != "skipped") EXPECT_EQ(s.status, "resumed") << s.name;
    }
    EXPECT_EQ(slurp(dir / "metrics.json"), before);

    cfg.evaluate.threshold = 0.4;
    const auto changed = run_pipeline(cfg, {true});
    EXPECT_EQ(changed.stages[5].status, "completed");
}

TEST(Pipeline, PredictorReproducesTestScores) {
    const auto dir = oracle::scratch_dir("pipeline_predictor");
    auto cfg = small_config(dir, "gbt");
    cfg.explain.enabled = false;
    run_pipeline(cfg);
    const auto predictor = Predictor::load(dir);
    CsvReadOptions opts;
    opts.group_column = "day";
    const auto raw = load_csv(dir / "raw.csv", opts);
    const auto scores = predictor.score(raw);
    EXPECT_EQ(scores.size(), raw.n_rows());
    const auto test = load_csv(dir / "test.csv", opts);
    const auto direct = score_dataset(predictor.model(), test);
    const auto pre = read_json(dir / "preprocess.json");
    const auto idx = pre.at("indices").at("test").get<std::vector<std::size_t>>();
    for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_NEAR(scores[idx[i]], direct[i], 1e-12);
}

TEST(Pipeline, CompareBuildsOneRowPerRun) {
    const auto a = oracle::scratch_dir("compare_a");
    const auto b = oracle::scratch_dir("compare_b");
    auto ca = small_config(a, "lr");
    auto cb = small_config(b, "rf");
    ca.explain.enabled = cb.explain.enabled = false;
    run_pipeline(ca);
    run_pipeline(cb);
    const auto table = compare_runs({a, b / "manifest.json"});
    ASSERT_EQ(table.rows.size(), 2u);
    EXPECT_EQ(table.rows[0].label, "GBT-LR");
    EXPECT_EQ(table.rows[1].label, "GBT-RF");
    EXPECT_NE(table.text.find('*'), std::string::npos);
    EXPECT_THROW(compare_runs({a}), ConfigError);
    const auto same = compare_runs({a, a});
    EXPECT_EQ(metrics_csv_row("x", "test", same.rows[0].test), metrics_csv_row("x", "test", same.rows[1].test));
}

TEST(Pipeline, FailingStageRecordedInManifest) {
    const auto dir = oracle::scratch_dir("pipeline_fail");
    auto cfg = small_config(dir, "dl");
    cfg.select.method = "keep-list";
    cfg.select.keep_list = {"not_a_column"};
    EXPECT_THROW(run_pipeline(cfg), DataError);
    const auto m = load_manifest(dir / "manifest.json");
    EXPECT_FALSE(m.completed);
    EXPECT_EQ(m.stages[0].status, "completed");
    EXPECT_EQ(m.stages[1].status, "failed");
    EXPECT_FALSE(m.stages[1].error.empty());
}

TEST(Pipeline, KeepListFromFile) {
    const auto dir = oracle::scratch_dir("keep_list");
    std::ofstream(dir / "keep.txt") << "# always\ninf_00\n\nnoise_03\n";
    EXPECT_EQ(read_keep_list(dir / "keep.txt"), (std::vector<std::string>{"inf_00", "noise_03"}));
}

TEST(Cli, ExitCodes) {
    const auto dir = oracle::scratch_dir("cli_codes");
    EXPECT_EQ(run_cli("--no-such-flag synth"), 2);
    EXPECT_EQ(run_cli("synth --preset nope --out " + (dir / "x.csv").string()), 2);
    std::ofstream(dir / "bad.csv") << "a,label\n1,7\n";
    EXPECT_EQ(run_cli("--out-dir " + dir.string() + " preprocess --input " + (dir / "bad.csv").string()), 3);
    std::ofstream(dir / "both.toml") << "[input]\ncsv = \"bad.csv\"\nsynth_preset = \"paper-shape\"\n";
    EXPECT_EQ(run_cli("run --config " + (dir / "both.toml").string()), 2);
}

TEST(Cli, StagewiseCommandsChain) {
    const auto dir = oracle::scratch_dir("cli_chain");
    const std::string d = dir.string();
    ASSERT_EQ(run_cli("synth --preset paper-shape --rows 500 --seed 3 --out " + d + "/cohort.csv"), 0);
    ASSERT_EQ(run_cli("--out-dir " + d + " preprocess --input " + d + "/cohort.csv --seed 3"), 0);
    ASSERT_EQ(run_cli("--out-dir " + d + " select-features --method lasso --top 8 --train " + d + "/train.csv"), 0);
    ASSERT_EQ(run_cli("--out-dir " + d + " resample --tag-synthetic --features " + d + "/selection.json --input " + d +
                      "/train.csv"),
              0);
    ASSERT_EQ(run_cli("--out-dir " + d + " train --model lr --train " + d + "/train_resampled.csv --val " + d +
                      "/val.csv"),
              0);
    ASSERT_EQ(run_cli("--out-dir " + d + " evaluate --per-day --bootstrap 20 --model " + d + "/model.json --data " + d +
                      "/test.csv --csv " + d + "/report.csv"),
              0);
    ASSERT_EQ(run_cli("--out-dir " + d + " explain --rows 3 --coalitions 20 --model " + d + "/model.json --data " + d +
                      "/test.csv"),
              0);
    EXPECT_TRUE(fs::exists(dir / "report.json"));
    EXPECT_TRUE(fs::exists(dir / "shap.csv"));
    const auto resampled = slurp(dir / "train_resampled.csv");
    EXPECT_NE(resampled.find("is_synthetic"), std::string::npos);
}

TEST(Pipeline, SelectorModelGridGivesEightRows) {
    std::vector<fs::path> runs;
    for (const std::string selector : {"gbt", "lasso"}) {
        for (const std::string kind : {"rf", "lr", "gbt", "dl"}) {
            const auto dir = oracle::scratch_dir("grid_" + selector + "_" + kind);
            auto cfg = small_config(dir, kind);
            cfg.select.method = selector;
            cfg.explain.enabled = false;
            run_pipeline(cfg);
            runs.push_back(dir);
        }
    }
    const auto table = compare_runs(runs);
    ASSERT_EQ(table.rows.size(), 8u);
    EXPECT_EQ(table.rows.front().label, "GBT-RF");
    EXPECT_EQ(table.rows.back().label, "LASSO-DL");
    EXPECT_EQ(table.json.size(), 8u);
    EXPECT_EQ(std::count(table.csv.begin(), table.csv.end(), '\n'), 9);
}
