// icumort command-line driver.
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "icumort/ablation.hpp"
#include "icumort/config.hpp"
#include "icumort/error.hpp"
#include "icumort/log.hpp"
#include "icumort/metrics.hpp"
#include "icumort/pipeline.hpp"
#include "icumort/random.hpp"
#include "icumort/shapley.hpp"
#include "icumort/smote.hpp"
#include "icumort/synth.hpp"
#include "icumort/toml_lite.hpp"

namespace fs = std::filesystem;
using namespace icumort;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> config;
    bool resume = false;
    bool quiet = false;

    std::uint64_t seed_or(std::uint64_t fallback) const { return seed.value_or(fallback); }
    fs::path dir() const { return out_dir.value_or("."); }
};

CsvReadOptions read_options(const std::string& label, const std::string& group) {
    CsvReadOptions o;
    o.label_column = label;
    if (!group.empty()) o.group_column = group;
    o.identifier_columns = {"is_synthetic"};
    return o;
}

// Ad-hoc CSV loads: take the group column only when the header has it.
Dataset load_any(const fs::path& path, const std::string& label = "label", const std::string& group = "day") {
    try {
        return load_csv(path, read_options(label, group));
    } catch (const DataError& e) {
        if (group.empty() || std::string(e.what()).find("group column") == std::string::npos) throw;
        return load_csv(path, read_options(label, ""));
    }
}

std::array<double, 3> parse_ratios(const std::string& text) {
    std::array<double, 3> r{};
    std::stringstream ss(text);
    std::string part;
    std::size_t i = 0;
    while (std::getline(ss, part, ',')) {
        if (i == 3) throw ConfigError("--ratios takes three comma-separated numbers");
        try {
            r[i++] = std::stod(part);
        } catch (const std::exception&) {
            throw ConfigError("--ratios: '" + part + "' is not a number");
        }
    }
    if (i != 3) throw ConfigError("--ratios takes three comma-separated numbers");
    return r;
}

// Base configuration for the single-stage subcommands: defaults, or the
// sections of --config when given.
RunConfig base_config(const Globals& g) {
    if (!g.config) return RunConfig{};
    auto j = fs::path(*g.config).extension() == ".json" ? read_json(*g.config) : load_toml(*g.config);
    // Single stages take their input from flags, so the input section may be absent.
    if (!j.contains("input")) j["input"] = {{"synth_preset", "paper-shape"}};
    return run_config_from_json(j);
}

std::vector<std::string> features_from(const std::string& selection_path, const Dataset& ds) {
    if (selection_path.empty()) return ds.feature_names();
    const auto j = read_json(selection_path);
    if (j.contains("final_features")) return j.at("final_features").get<std::vector<std::string>>();
    return selection_from_json(j).selected;
}

void print(const Globals& g, const std::string& msg) {
    if (!g.quiet) std::cout << msg << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ICU mortality modelling pipeline"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Master seed");
    app.add_option("--out-dir", g.out_dir, "Output directory");
    app.add_option("--config", g.config, "Run configuration (.toml or .json)");
    app.add_flag("--resume", g.resume, "Skip stages already completed with the same configuration");
    app.add_flag("--quiet", g.quiet, "Only print warnings and errors");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic cohort with known ground truth");
    std::string preset = "paper-shape";
    std::string synth_out;
    std::string truth_out;
    std::optional<std::size_t> synth_rows;
    synth_cmd->add_option("--preset", preset, "Cohort preset")->capture_default_str();
    synth_cmd->add_option("--out", synth_out, "Output CSV")->required();
    synth_cmd->add_option("--truth", truth_out, "Ground-truth JSON (default: <out>.truth.json)");
    synth_cmd->add_option("--rows", synth_rows, "Override the row count");

    // preprocess
    auto* pre_cmd = app.add_subcommand("preprocess", "Filter, split, impute and scale a cohort");
    std::string pre_input;
    double nan_threshold = 0.5;
    std::string ratios = "0.7,0.15,0.15";
    bool stratified = false;
    std::string label_col = "label";
    std::string group_col = "day";
    pre_cmd->add_option("--input", pre_input, "Input CSV")->required()->check(CLI::ExistingFile);
    pre_cmd->add_option("--nan-threshold", nan_threshold, "Maximum missing fraction kept")->capture_default_str();
    pre_cmd->add_option("--ratios", ratios, "train,val,test fractions")->capture_default_str();
    pre_cmd->add_flag("--stratified", stratified, "Stratify the split by label");
    pre_cmd->add_option("--label", label_col, "Label column")->capture_default_str();
    pre_cmd->add_option("--group", group_col, "Day column (empty for none)")->capture_default_str();

    // select-features
    auto* sel_cmd = app.add_subcommand("select-features", "Rank features and keep the top k");
    std::string sel_method = "gbt";
    std::size_t top_k = 30;
    std::string sel_train;
    std::string keep_list;
    std::string sel_out;
    sel_cmd->add_option("--method", sel_method, "gbt, lasso or keep-list")
        ->check(CLI::IsMember({"gbt", "lasso", "keep-list"}))
        ->capture_default_str();
    sel_cmd->add_option("--top", top_k, "Features kept")->capture_default_str();
    sel_cmd->add_option("--train", sel_train, "Training CSV")->required()->check(CLI::ExistingFile);
    sel_cmd->add_option("--keep-list", keep_list, "File of feature names always kept")->check(CLI::ExistingFile);
    sel_cmd->add_option("--out", sel_out, "Selection JSON (default: <out-dir>/selection.json)");

    // resample
    auto* res_cmd = app.add_subcommand("resample", "SMOTE oversampling of a training CSV");
    std::string res_input;
    std::string res_out;
    std::string res_features;
    std::size_t k_neighbors = 5;
    double smote_ratio = 1.0;
    bool tag_synthetic = false;
    res_cmd->add_option("--input", res_input, "Training CSV")->required()->check(CLI::ExistingFile);
    res_cmd->add_option("--features", res_features, "Selection JSON restricting the columns");
    res_cmd->add_option("--k", k_neighbors, "Nearest neighbours")->capture_default_str();
    res_cmd->add_option("--ratio", smote_ratio, "Target minority:majority ratio")->capture_default_str();
    res_cmd->add_flag("--tag-synthetic", tag_synthetic, "Add an is_synthetic provenance column");
    res_cmd->add_option("--out", res_out, "Output CSV (default: <out-dir>/train_resampled.csv)");

    // train
    auto* train_cmd = app.add_subcommand("train", "Fit a model");
    std::string model_kind = "dl";
    std::string train_path;
    std::string val_path;
    std::string train_features;
    std::string model_out;
    std::string history_out;
    std::optional<std::size_t> epochs;
    train_cmd->add_option("--model", model_kind, "dl, lr, rf or gbt")
        ->check(CLI::IsMember({"dl", "lr", "rf", "gbt"}))
        ->capture_default_str();
    train_cmd->add_option("--train", train_path, "Training CSV")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--val", val_path, "Validation CSV (required for dl)")->check(CLI::ExistingFile);
    train_cmd->add_option("--features", train_features, "Selection or ablation JSON");
    train_cmd->add_option("--epochs", epochs, "Override the DL epoch count");
    train_cmd->add_option("--out", model_out, "Model JSON (default: <out-dir>/model.json)");
    train_cmd->add_option("--history", history_out, "Per-epoch history CSV (dl)");

    // ablate
    auto* abl_cmd = app.add_subcommand("ablate", "Greedy backward feature elimination on validation AUROC");
    std::string abl_model = "dl";
    std::string abl_train;
    std::string abl_val;
    std::string abl_features;
    std::string abl_out;
    double margin = 0.0;
    std::optional<std::size_t> abl_epochs;
    abl_cmd->add_option("--model", abl_model, "dl, lr, rf or gbt")
        ->check(CLI::IsMember({"dl", "lr", "rf", "gbt"}))
        ->capture_default_str();
    abl_cmd->add_option("--train", abl_train, "Training CSV")->required()->check(CLI::ExistingFile);
    abl_cmd->add_option("--val", abl_val, "Validation CSV")->required()->check(CLI::ExistingFile);
    abl_cmd->add_option("--features", abl_features, "Selection JSON (default: all features)");
    abl_cmd->add_option("--margin", margin, "Minimum AUROC improvement")->capture_default_str();
    abl_cmd->add_option("--epochs", abl_epochs, "Override the DL epoch count");
    abl_cmd->add_option("--out", abl_out, "Trace JSON (default: <out-dir>/ablation.json)");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Confusion metrics, AUROC and bootstrap CI");
    std::string eval_model;
    std::string eval_data;
    bool per_day = false;
    std::size_t bootstrap = 1000;
    double level = 0.95;
    double threshold = 0.5;
    std::string eval_out;
    std::string eval_csv;
    std::string eval_label;
    eval_cmd->add_option("--model", eval_model, "Model JSON")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--data", eval_data, "Preprocessed CSV")->required()->check(CLI::ExistingFile);
    eval_cmd->add_flag("--per-day", per_day, "Also report each day separately");
    eval_cmd->add_option("--bootstrap", bootstrap, "Bootstrap resamples")->capture_default_str();
    eval_cmd->add_option("--level", level, "Confidence level")->capture_default_str();
    eval_cmd->add_option("--threshold", threshold, "Decision threshold")->capture_default_str();
    eval_cmd->add_option("--out", eval_out, "Report JSON (default: <out-dir>/report.json)");
    eval_cmd->add_option("--csv", eval_csv, "Report CSV");
    eval_cmd->add_option("--label", eval_label, "Model label in the CSV (default: model kind)");

    // explain
    auto* exp_cmd = app.add_subcommand("explain", "KernelSHAP attributions for a sample of rows");
    std::string exp_model;
    std::string exp_data;
    std::string exp_background;
    std::size_t exp_rows = 200;
    std::size_t exp_top = 15;
    std::size_t coalitions = 256;
    std::size_t background_rows = 100;
    std::string exp_out;
    exp_cmd->add_option("--model", exp_model, "Model JSON")->required()->check(CLI::ExistingFile);
    exp_cmd->add_option("--data", exp_data, "Rows to explain")->required()->check(CLI::ExistingFile);
    exp_cmd->add_option("--background", exp_background, "Background CSV (default: --data)")
        ->check(CLI::ExistingFile);
    exp_cmd->add_option("--rows", exp_rows, "Rows explained")->capture_default_str();
    exp_cmd->add_option("--top", exp_top, "Features ranked")->capture_default_str();
    exp_cmd->add_option("--coalitions", coalitions, "Coalitions per row")->capture_default_str();
    exp_cmd->add_option("--background-rows", background_rows, "Background sample size")->capture_default_str();
    exp_cmd->add_option("--out", exp_out, "Attribution CSV (default: <out-dir>/shap.csv)");

    // run
    auto* run_cmd = app.add_subcommand("run", "Run the full pipeline from a configuration");

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "Tabulate test metrics of several runs");
    std::vector<std::string> cmp_runs;
    cmp_cmd->add_option("runs", cmp_runs, "Run directories or manifest files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    set_log_level(g.quiet ? LogLevel::warning : LogLevel::info);
    set_log_sink([](LogLevel level, std::string_view msg) {
        std::cerr << (level >= LogLevel::warning ? "warning: " : "") << msg << '\n';
    });

    try {
        const fs::path out_dir = g.dir();
        if (synth_cmd->parsed()) {
            const auto cohort = [&] {
                auto spec = preset_spec(preset, g.seed_or(0));
                if (synth_rows) spec.n_rows = *synth_rows;
                return generate_cohort(spec);
            }();
            write_csv(cohort.data, synth_out);
            const std::string truth = truth_out.empty() ? synth_out + ".truth.json" : truth_out;
            write_text(truth, to_json(cohort.truth).dump(2) + "\n");
            print(g, "wrote " + synth_out + " (" + std::to_string(cohort.data.n_rows()) + " rows, Bayes AUROC " +
                         format_double(cohort.truth.bayes_auroc) + ")");
        } else if (pre_cmd->parsed()) {
            const auto raw = load_any(pre_input, label_col, group_col);
            SplitSpec spec;
            spec.ratios = parse_ratios(ratios);
            spec.seed = derive_seed(g.seed_or(0), "split");
            spec.stratified = stratified;
            const auto out = preprocess_dataset(raw, nan_threshold, spec);
            fs::create_directories(out_dir);
            write_csv(out.split.train, out_dir / "train.csv");
            write_csv(out.split.val, out_dir / "val.csv");
            write_csv(out.split.test, out_dir / "test.csv");
            write_text(out_dir / "preprocess.json", to_json(out).dump(2) + "\n");
            print(g, "dropped " + std::to_string(out.dropped.size()) + " columns; split " +
                         std::to_string(out.split.train.n_rows()) + "/" + std::to_string(out.split.val.n_rows()) +
                         "/" + std::to_string(out.split.test.n_rows()));
        } else if (sel_cmd->parsed()) {
            auto cfg = base_config(g).select;
            cfg.method = sel_method;
            cfg.top_k = top_k;
            if (!keep_list.empty()) cfg.keep_list_file = keep_list;
            const auto sel = select_features(load_any(sel_train), cfg);
            const fs::path out = sel_out.empty() ? out_dir / "selection.json" : fs::path(sel_out);
            write_text(out, to_json(sel).dump(2) + "\n");
            print(g, "selected " + std::to_string(sel.selected.size()) + " features -> " + out.string());
        } else if (res_cmd->parsed()) {
            const auto full = load_any(res_input);
            const auto train = select_columns(full, features_from(res_features, full));
            auto res = smote(train, {k_neighbors, smote_ratio, derive_seed(g.seed_or(0), "smote")});
            Dataset out = res.data;
            if (tag_synthetic) {
                auto cols = out.columns();
                cols.push_back({"is_synthetic", ColumnKind::identifier, 0});
                Matrix v(out.n_rows(), out.n_cols() + 1);
                for (std::size_t r = 0; r < out.n_rows(); ++r) {
                    for (std::size_t c = 0; c < out.n_cols(); ++c) v(r, c) = out.at(r, c);
                    v(r, out.n_cols()) = r >= res.n_original ? 1.0 : 0.0;
                }
                out = Dataset(cols, std::move(v), out.maybe_labels(), out.maybe_groups(), out.label_name(),
                              out.group_name());
            }
            const fs::path path = res_out.empty() ? out_dir / "train_resampled.csv" : fs::path(res_out);
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            write_csv(out, path);
            print(g, "appended " + std::to_string(res.n_synthetic) + " synthetic rows -> " + path.string());
        } else if (train_cmd->parsed()) {
            auto cfg = base_config(g).model;
            cfg.kind = model_kind;
            if (epochs) cfg.dl.epochs = *epochs;
            const auto full = load_any(train_path);
            const auto features = features_from(train_features, full);
            const auto train = select_columns(full, features);
            Dataset val;
            if (!val_path.empty()) val = select_columns(load_any(val_path), features);
            else if (model_kind == "dl") throw ConfigError("--val is required for the dl model");
            const auto fit = fit_model(cfg, train, val, derive_seed(g.seed_or(0), "model"));
            const fs::path out = model_out.empty() ? out_dir / "model.json" : fs::path(model_out);
            if (out.has_parent_path()) fs::create_directories(out.parent_path());
            save_model(fit.model, out);
            if (!history_out.empty() && !fit.history.empty()) write_text(history_out, history_csv(fit.history));
            print(g, "wrote " + out.string());
        } else if (abl_cmd->parsed()) {
            auto cfg = base_config(g).model;
            cfg.kind = abl_model;
            if (abl_epochs) cfg.dl.epochs = *abl_epochs;
            const auto full_train = load_any(abl_train);
            const auto features = features_from(abl_features, full_train);
            const auto train = select_columns(full_train, features);
            const auto val = select_columns(load_any(abl_val), features);
            const auto trace = ablate(make_model_factory(cfg), train, val, features,
                                      {margin, derive_seed(g.seed_or(0), "ablation")});
            const fs::path out = abl_out.empty() ? out_dir / "ablation.json" : fs::path(abl_out);
            write_text(out, to_json(trace).dump(2) + "\n");
            print(g, "kept " + std::to_string(trace.final_features.size()) + " of " +
                         std::to_string(features.size()) + " features (AUROC " + format_double(trace.final_auroc) +
                         ") -> " + out.string());
        } else if (eval_cmd->parsed()) {
            const auto model = load_model(eval_model);
            const auto data = load_any(eval_data);
            const auto scores = score_dataset(model, data);
            EvalOptions opts{threshold, bootstrap, level, derive_seed(g.seed_or(0), "bootstrap")};
            const auto overall = evaluate_scores(scores, data.labels(), opts);
            const std::string label = eval_label.empty() ? icumort::model_kind(model.model) : eval_label;
            nlohmann::json report = {{"model", label}, {"overall", to_json(overall)}};
            std::string csv = metrics_csv_header() + "\n" + metrics_csv_row(label, "data", overall) + "\n";
            if (per_day) {
                if (!data.has_groups()) throw DataError("--per-day needs a day column");
                nlohmann::json days = nlohmann::json::array();
                for (const auto& r : grouped_eval(scores, data.labels(), data.groups(), opts)) {
                    days.push_back(to_json(r));
                    csv += metrics_csv_row(label, "data", r) + "\n";
                }
                report["per_day"] = std::move(days);
            }
            const fs::path out = eval_out.empty() ? out_dir / "report.json" : fs::path(eval_out);
            write_text(out, report.dump(2) + "\n");
            if (!eval_csv.empty()) write_text(eval_csv, csv);
            if (!g.quiet) std::cout << csv;
        } else if (exp_cmd->parsed()) {
            const auto model = load_model(exp_model);
            const auto data = select_columns(load_any(exp_data), model.feature_names);
            const auto bg_data =
                exp_background.empty() ? data : select_columns(load_any(exp_background), model.feature_names);
            const auto seed = derive_seed(g.seed_or(0), "explain");
            const auto background =
                sample_background(feature_matrix(bg_data), background_rows, derive_seed(seed, "background"));
            Rng rng(derive_seed(seed, "rows"));
            auto order = permutation(data.n_rows(), rng);
            order.resize(std::min(order.size(), exp_rows));
            std::sort(order.begin(), order.end());
            const Matrix sample = feature_matrix(data).take_rows(order);
            const PredictFn predict = [&](const Matrix& x) { return predict_proba(model, x); };
            const auto summary = shap_summary(predict, background, sample, model.feature_names, exp_top, coalitions,
                                              derive_seed(seed, "kernel"));
            const fs::path out = exp_out.empty() ? out_dir / "shap.csv" : fs::path(exp_out);
            write_text(out, shap_csv(summary, sample));
            auto j = to_json(summary);
            j["rows_explained"] = order;
            write_text(out.string() + ".json", j.dump(2) + "\n");
            if (!g.quiet) {
                for (const auto& e : summary.ranking) std::cout << e.feature << "\t" << format_double(e.mean_abs) << '\n';
            }
        } else if (run_cmd->parsed()) {
            if (!g.config) throw ConfigError("run needs --config");
            auto cfg = load_run_config(*g.config);
            if (g.seed) cfg.seed = *g.seed;
            if (g.out_dir) cfg.out_dir = *g.out_dir;
            const auto m = run_pipeline(cfg, {g.resume});
            if (!g.quiet && !m.result.is_null()) {
                std::cout << "test AUROC " << format_double(m.result.at("auroc").get<double>()) << " ["
                          << format_double(m.result.at("ci_low").get<double>()) << ", "
                          << format_double(m.result.at("ci_high").get<double>()) << "]\n";
            }
        } else if (cmp_cmd->parsed()) {
            std::vector<fs::path> runs(cmp_runs.begin(), cmp_runs.end());
            const auto table = compare_runs(runs);
            if (g.out_dir) {
                write_text(out_dir / "comparison.txt", table.text);
                write_text(out_dir / "comparison.csv", table.csv);
                write_text(out_dir / "comparison.json", table.json.dump(2) + "\n");
            }
            std::cout << table.text;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
