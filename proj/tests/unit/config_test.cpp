#include <fstream>

#include <gtest/gtest.h>

#include "icumort/config.hpp"
#include "icumort/error.hpp"
#include "icumort/toml_lite.hpp"
#include "oracles.hpp"

using namespace icumort;

TEST(Toml, TablesArraysAndScalars) {
    const auto j = parse_toml(R"(
seed = 7
name = "run # not a comment"
[model]
kind = 'dl'
[model.dl]
hidden = [
  100, 50,
  25,
]
dropout = 0.2
flag = true
inline = { a = 1, b = "x" }
big = 1_000
neg = -3.5e-2
)");
    EXPECT_EQ(j["seed"], 7);
    EXPECT_EQ(j["name"], "run # not a comment");
    EXPECT_EQ(j["model"]["kind"], "dl");
    EXPECT_EQ(j["model"]["dl"]["hidden"], nlohmann::json({100, 50, 25}));
    EXPECT_EQ(j["model"]["dl"]["dropout"], 0.2);
    EXPECT_EQ(j["model"]["dl"]["flag"], true);
    EXPECT_EQ(j["model"]["dl"]["inline"]["b"], "x");
    EXPECT_EQ(j["model"]["dl"]["big"], 1000);
    EXPECT_EQ(j["model"]["dl"]["neg"], -3.5e-2);
}

TEST(Toml, ErrorsCarryLineNumbers) {
    try {
        parse_toml("a = 1\nb = \n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    EXPECT_THROW(parse_toml("a = 1\na = 2\n"), ConfigError);
    EXPECT_THROW(parse_toml("[t\n"), ConfigError);
}

TEST(Config, DefaultsAreValidWithOneInput) {
    RunConfig c;
    c.input.synth_preset = "paper-shape";
    EXPECT_TRUE(validate(c).empty());
    EXPECT_EQ(c.select.top_k, 30u);
    EXPECT_EQ(c.model.dl.epochs, 100u);
    EXPECT_EQ(c.model.dl.batch_size, 32u);
}

TEST(Config, BothInputsRejected) {
    RunConfig c;
    c.input.synth_preset = "paper-shape";
    c.input.csv = "x.csv";
    EXPECT_THROW(require_valid(c), ConfigError);
}

TEST(Config, AllProblemsReportedTogether) {
    const auto j = nlohmann::json::parse(R"({
        "input": {"synth_preset": "paper-shape"},
        "preprocess": {"nan_threshold": 2.0},
        "select": {"method": "magic"},
        "model": {"kind": "svm", "dl": {"epochs": 0}},
        "bogus": 1
    })");
    try {
        run_config_from_json(j);
        FAIL();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        for (const char* key : {"nan_threshold", "method", "kind", "epochs", "bogus"}) {
            EXPECT_NE(msg.find(key), std::string::npos) << key << " missing from:\n" << msg;
        }
    }
}

TEST(Config, TypeErrorsReported) {
    const auto j = nlohmann::json::parse(R"({"input": {"synth_preset": "paper-shape"}, "seed": "abc"})");
    EXPECT_THROW(run_config_from_json(j), ConfigError);
}

TEST(Config, JsonRoundTripAndHash) {
    RunConfig c;
    c.input.synth_preset = "paper-shape";
    c.model.kind = "rf";
    const auto back = run_config_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_EQ(config_hash(back), config_hash(c));
    auto moved = c;
    moved.out_dir = "elsewhere";
    EXPECT_EQ(config_hash(moved), config_hash(c));
    auto reseeded = c;
    reseeded.seed = 43;
    EXPECT_NE(config_hash(reseeded), config_hash(c));
}

TEST(Config, TomlFileResolvesRelativePaths) {
    const auto dir = oracle::scratch_dir("config_paths");
    std::ofstream(dir / "cohort.csv") << "a,label\n1,0\n2,1\n";
    std::ofstream(dir / "run.toml") << "[input]\ncsv = \"cohort.csv\"\ngroup_column = \"\"\n";
    const auto c = load_run_config(dir / "run.toml");
    ASSERT_TRUE(c.input.csv.has_value());
    EXPECT_EQ(std::filesystem::path(*c.input.csv), dir / "cohort.csv");
    EXPECT_TRUE(validate(c).empty());
}

TEST(Config, MissingInputFileReported) {
    RunConfig c;
    c.input.csv = "/nonexistent/cohort.csv";
    const auto problems = validate(c);
    ASSERT_FALSE(problems.empty());
}

TEST(Config, ArchitectureFromSettings) {
    DlSettings s;
    const auto a = mlp_architecture(s, 30);
    EXPECT_EQ(a.input_dim, 30u);
    EXPECT_EQ(a.hidden, (std::vector<std::size_t>{100, 50, 25}));
    EXPECT_TRUE(a.input_batchnorm);
}
