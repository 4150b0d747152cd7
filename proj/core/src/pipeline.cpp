#include "icumort/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "icumort/error.hpp"
#include "icumort/lasso.hpp"
#include "icumort/log.hpp"
#include "icumort/random.hpp"
#include "icumort/shapley.hpp"
#include "icumort/smote.hpp"
#include "icumort/synth.hpp"

#ifndef ICUMORT_VERSION
#define ICUMORT_VERSION "0.0.0"
#endif

namespace icumort {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// I/O helpers

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + path.string());
        out << text;
        if (!out) throw DataError("failed writing " + path.string());
    }
    fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw DataError(path.string() + " is not valid JSON");
    return j;
}

namespace {

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

std::vector<std::string> model_features(const Dataset& ds) { return ds.feature_names(); }

} // namespace

CsvReadOptions csv_options(const InputConfig& input) {
    CsvReadOptions o;
    o.label_column = input.label_column;
    if (!input.group_column.empty()) o.group_column = input.group_column;
    return o;
}

// ---------------------------------------------------------------------------
// Preprocessing

PreprocessOutput preprocess_dataset(const Dataset& raw, double nan_threshold, const SplitSpec& spec) {
    auto dropped = drop_high_nan_columns(raw, nan_threshold);
    auto parts = split(dropped.data, spec);
    PreprocessOutput out;
    out.dropped = std::move(dropped.dropped);
    out.imputer = fit_median(parts.train);
    const auto train = apply_median(parts.train, out.imputer);
    out.scaler = fit_scale_min_max(train);
    for (const auto& c : out.scaler.constant_columns) {
        log_warning("column '" + c + "' is constant on the training split; scaled to 0");
    }
    out.split.train = apply_scale_min_max(train, out.scaler);
    out.split.val = apply_scale_min_max(apply_median(parts.val, out.imputer), out.scaler);
    out.split.test = apply_scale_min_max(apply_median(parts.test, out.imputer), out.scaler);
    out.split.indices = parts.indices;
    return out;
}

json to_json(const PreprocessOutput& p) {
    return {{"dropped", p.dropped},
            {"imputer", to_json(p.imputer)},
            {"scaler", to_json(p.scaler)},
            {"constant_columns", p.scaler.constant_columns},
            {"sizes", {p.split.train.n_rows(), p.split.val.n_rows(), p.split.test.n_rows()}},
            {"indices", {{"train", p.split.indices[0]}, {"val", p.split.indices[1]}, {"test", p.split.indices[2]}}}};
}

// ---------------------------------------------------------------------------
// Feature selection

std::vector<std::string> read_keep_list(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open keep-list " + path.string());
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        names.push_back(line.substr(b, e - b + 1));
    }
    return names;
}

SelectionResult select_features(const Dataset& train, const SelectConfig& cfg) {
    SelectionResult out;
    out.method = cfg.method;
    auto keep = cfg.keep_list;
    if (cfg.keep_list_file) {
        for (auto& n : read_keep_list(*cfg.keep_list_file)) keep.push_back(std::move(n));
    }
    const auto names = model_features(train);
    for (const auto& k : keep) {
        if (std::find(names.begin(), names.end(), k) == names.end()) {
            throw DataError("keep-list feature '" + k + "' is not in the data");
        }
    }

    if (cfg.method == "keep-list") {
        for (const auto& k : keep) {
            if (std::find(out.selected.begin(), out.selected.end(), k) == out.selected.end()) out.selected.push_back(k);
        }
        return out;
    }

    const Matrix x = feature_matrix(train);
    if (cfg.method == "gbt") {
        const auto model = fit_gbt(x, train.labels(), cfg.gbt, names);
        out.ranking = gbt_importance(model);
    } else if (cfg.method == "lasso") {
        const auto y = labels_as_targets(train.labels());
        LassoParams params;
        params.lambda = cfg.lasso_lambda_ratio * lasso_lambda_max(x, y);
        const auto model = fit_lasso(x, y, params, names);
        if (!model.converged) log_warning("LASSO did not converge within max_iter");
        std::vector<std::size_t> order(names.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(model.weights[a]) > std::abs(model.weights[b]);
        });
        for (auto j : order) {
            if (model.weights[j] != 0.0) out.ranking.emplace_back(names[j], std::abs(model.weights[j]));
        }
    } else {
        throw ConfigError("unknown selection method '" + cfg.method + "'");
    }

    for (std::size_t i = 0; i < out.ranking.size() && out.selected.size() < cfg.top_k; ++i) {
        out.selected.push_back(out.ranking[i].first);
    }
    for (const auto& k : keep) {
        if (std::find(out.selected.begin(), out.selected.end(), k) == out.selected.end()) out.selected.push_back(k);
    }
    if (out.selected.empty()) throw DataError("feature selection kept no features");
    return out;
}

json to_json(const SelectionResult& s) {
    json ranking = json::array();
    for (const auto& [name, score] : s.ranking) ranking.push_back({{"feature", name}, {"score", score}});
    return {{"method", s.method}, {"ranking", std::move(ranking)}, {"selected", s.selected}};
}

SelectionResult selection_from_json(const json& j) {
    SelectionResult s;
    try {
        s.method = j.at("method").get<std::string>();
        for (const auto& r : j.at("ranking")) s.ranking.emplace_back(r.at("feature"), r.at("score"));
        s.selected = j.at("selected").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed selection file: ") + e.what());
    }
    return s;
}

// ---------------------------------------------------------------------------
// Model fitting

FitOutput fit_model(const ModelConfig& cfg, const Dataset& train, const Dataset& val, std::uint64_t seed) {
    const auto names = model_features(train);
    if (names.empty()) throw DataError("no feature columns to train on");
    const Matrix x = feature_matrix(train);
    const auto y = train.labels();
    FitOutput out;
    out.model.feature_names = names;
    if (cfg.kind == "dl") {
        if (model_features(val) != names) throw DataError("training and validation features differ");
        MlpModel net(mlp_architecture(cfg.dl, names.size()), derive_seed(seed, "mlp-init"));
        TrainConfig tc;
        tc.epochs = cfg.dl.epochs;
        tc.batch_size = cfg.dl.batch_size;
        tc.learning_rate = cfg.dl.learning_rate;
        tc.momentum = cfg.dl.momentum;
        tc.seed = derive_seed(seed, "mlp-train");
        auto result = train_mlp(std::move(net), x, y, feature_matrix(val), val.labels(), tc);
        out.model.model = std::move(result.model);
        out.history = std::move(result.history);
    } else if (cfg.kind == "lr") {
        out.model.model = fit_logistic(x, y, cfg.lr, names);
    } else if (cfg.kind == "rf") {
        auto params = cfg.rf;
        params.seed = derive_seed(seed, "rf");
        out.model.model = fit_random_forest(x, y, params, names);
    } else if (cfg.kind == "gbt") {
        out.model.model = fit_gbt(x, y, cfg.gbt, names);
    } else {
        throw ConfigError("unknown model kind '" + cfg.kind + "'");
    }
    return out;
}

std::vector<double> score_dataset(const TrainedModel& m, const Dataset& ds) {
    return predict_proba(m, feature_matrix(select_columns(ds, m.feature_names)));
}

ModelFactory make_model_factory(ModelConfig cfg) {
    return [cfg = std::move(cfg)](const Dataset& train, const Dataset& val, std::uint64_t seed) {
        const auto fit = fit_model(cfg, train, val, seed);
        return score_dataset(fit.model, val);
    };
}

std::string run_label(const std::string& selector, const std::string& model_kind) {
    const std::string sel = selector == "keep-list" ? "KEEP" : upper(selector);
    return sel + "-" + upper(model_kind);
}

// ---------------------------------------------------------------------------
// Manifest

json to_json(const RunManifest& m) {
    json stages = json::array();
    for (const auto& s : m.stages) {
        json e = {{"name", s.name},
                  {"status", s.status},
                  {"seeds", s.seeds},
                  {"artifacts", s.artifacts},
                  {"wall_clock_s", s.wall_clock_s}};
        if (!s.error.empty()) e["error"] = s.error;
        stages.push_back(std::move(e));
    }
    return {{"config_hash", m.config_hash}, {"versions", m.versions}, {"master_seed", m.master_seed},
            {"stages", std::move(stages)},  {"completed", m.completed}, {"result", m.result}};
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    try {
        m.config_hash = j.at("config_hash").get<std::string>();
        m.versions = j.at("versions");
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        for (const auto& s : j.at("stages")) {
            StageRecord r;
            r.name = s.at("name").get<std::string>();
            r.status = s.at("status").get<std::string>();
            r.seeds = s.at("seeds");
            r.artifacts = s.at("artifacts").get<std::vector<std::string>>();
            r.wall_clock_s = s.at("wall_clock_s").get<double>();
            r.error = s.value("error", "");
            m.stages.push_back(std::move(r));
        }
        m.completed = j.at("completed").get<bool>();
        m.result = j.value("result", json());
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

RunManifest load_manifest(const fs::path& path) { return manifest_from_json(read_json(path)); }

// ---------------------------------------------------------------------------
// Stages

namespace {

struct Context {
    const RunConfig& cfg;
    fs::path dir;
    CsvReadOptions csv;

    Dataset load(const std::string& name) const { return load_csv(dir / name, csv); }
    void save(const std::string& name, const Dataset& ds) const {
        write_text(dir / name, format_csv(ds));
    }
    std::uint64_t seed(std::string_view tag) const { return derive_seed(cfg.seed, tag); }
    std::string final_model() const { return cfg.ablation.enabled ? "model_final.json" : "model.json"; }
    std::vector<std::string> final_features() const {
        if (cfg.ablation.enabled) return read_json(dir / "ablation.json").at("final_features");
        return selection_from_json(read_json(dir / "selection.json")).selected;
    }
};

using StageFn = std::function<void(const Context&, StageRecord&)>;

void stage_preprocess(const Context& ctx, StageRecord& rec) {
    const auto& cfg = ctx.cfg;
    Dataset raw;
    if (cfg.input.synth_preset) {
        const auto synth_seed = ctx.seed("synth");
        auto spec = preset_spec(*cfg.input.synth_preset, synth_seed);
        if (cfg.input.synth_rows) spec.n_rows = *cfg.input.synth_rows;
        auto cohort = generate_cohort(spec);
        write_json(ctx.dir / "ground_truth.json", to_json(cohort.truth));
        raw = std::move(cohort.data);
        rec.seeds["synth"] = synth_seed;
        rec.artifacts.push_back("ground_truth.json");
    } else {
        raw = load_csv(*cfg.input.csv, ctx.csv);
    }
    if (!raw.has_labels()) throw DataError("input data has no labels");
    ctx.save("raw.csv", raw);
    write_json(ctx.dir / "raw_metadata.json", metadata_json(raw));

    SplitSpec spec;
    spec.ratios = cfg.preprocess.ratios;
    spec.stratified = cfg.preprocess.stratified;
    spec.seed = ctx.seed("split");
    rec.seeds["split"] = spec.seed;
    const auto out = preprocess_dataset(raw, cfg.preprocess.nan_threshold, spec);
    ctx.save("train.csv", out.split.train);
    ctx.save("val.csv", out.split.val);
    ctx.save("test.csv", out.split.test);
    write_json(ctx.dir / "preprocess.json", to_json(out));
    for (const char* a : {"raw.csv", "raw_metadata.json", "train.csv", "val.csv", "test.csv", "preprocess.json"}) {
        rec.artifacts.emplace_back(a);
    }
}

void stage_select(const Context& ctx, StageRecord& rec) {
    const auto sel = select_features(ctx.load("train.csv"), ctx.cfg.select);
    write_json(ctx.dir / "selection.json", to_json(sel));
    rec.artifacts.emplace_back("selection.json");
}

void stage_resample(const Context& ctx, StageRecord& rec) {
    const auto features = selection_from_json(read_json(ctx.dir / "selection.json")).selected;
    const auto train = select_columns(ctx.load("train.csv"), features);
    json info = {{"enabled", ctx.cfg.smote.enabled}};
    Dataset out = train;
    if (ctx.cfg.smote.enabled) {
        SmoteConfig sc{ctx.cfg.smote.k_neighbors, ctx.cfg.smote.ratio, ctx.seed("smote")};
        rec.seeds["smote"] = sc.seed;
        auto res = smote(train, sc);
        info["n_original"] = res.n_original;
        info["n_synthetic"] = res.n_synthetic;
        info["minority_label"] = res.minority_label;
        out = std::move(res.data);
    }
    const auto y = out.labels();
    info["positives"] = std::count(y.begin(), y.end(), 1);
    info["negatives"] = std::count(y.begin(), y.end(), 0);
    ctx.save("train_resampled.csv", out);
    write_json(ctx.dir / "resample.json", info);
    rec.artifacts.emplace_back("train_resampled.csv");
    rec.artifacts.emplace_back("resample.json");
}

void stage_train(const Context& ctx, StageRecord& rec) {
    const auto features = selection_from_json(read_json(ctx.dir / "selection.json")).selected;
    const auto train = ctx.load("train_resampled.csv");
    const auto val = select_columns(ctx.load("val.csv"), features);
    rec.seeds["model"] = ctx.seed("model");
    const auto fit = fit_model(ctx.cfg.model, train, val, ctx.seed("model"));
    save_model(fit.model, ctx.dir / "model.json");
    rec.artifacts.emplace_back("model.json");
    if (!fit.history.empty()) {
        write_text(ctx.dir / "history.csv", history_csv(fit.history));
        rec.artifacts.emplace_back("history.csv");
    }
}

void stage_ablate(const Context& ctx, StageRecord& rec) {
    const auto features = selection_from_json(read_json(ctx.dir / "selection.json")).selected;
    const auto train = ctx.load("train_resampled.csv");
    const auto val = select_columns(ctx.load("val.csv"), features);
    auto model_cfg = ctx.cfg.model;
    if (ctx.cfg.ablation.epochs) model_cfg.dl.epochs = *ctx.cfg.ablation.epochs;
    AblationOptions opts{ctx.cfg.ablation.margin, ctx.seed("ablation")};
    rec.seeds["ablation"] = opts.seed;
    const auto trace = ablate(make_model_factory(model_cfg), train, val, features, opts);
    write_json(ctx.dir / "ablation.json", to_json(trace));
    rec.artifacts.emplace_back("ablation.json");

    if (trace.final_features == features) {
        fs::copy_file(ctx.dir / "model.json", ctx.dir / "model_final.json", fs::copy_options::overwrite_existing);
    } else {
        const auto fit = fit_model(ctx.cfg.model, select_columns(train, trace.final_features),
                                   select_columns(val, trace.final_features), ctx.seed("model"));
        save_model(fit.model, ctx.dir / "model_final.json");
    }
    rec.artifacts.emplace_back("model_final.json");
}

void stage_evaluate(const Context& ctx, StageRecord& rec, json& result) {
    const auto model = load_model(ctx.dir / ctx.final_model());
    EvalOptions opts;
    opts.threshold = ctx.cfg.evaluate.threshold;
    opts.n_resamples = ctx.cfg.evaluate.bootstrap;
    opts.level = ctx.cfg.evaluate.level;
    opts.seed = ctx.seed("bootstrap");
    rec.seeds["bootstrap"] = opts.seed;

    const std::string label = run_label(ctx.cfg.select.method, ctx.cfg.model.kind);
    json splits = json::object();
    std::string csv = metrics_csv_header() + "\n";
    json per_day = json::array();
    std::string predictions = "row,day,label,score\n";
    for (const char* name : {"train", "val", "test"}) {
        const auto ds = ctx.load(std::string(name) + ".csv");
        const auto scores = score_dataset(model, ds);
        const auto report = evaluate_scores(scores, ds.labels(), opts);
        splits[name] = to_json(report);
        csv += metrics_csv_row(label, name, report) + "\n";
        if (std::string(name) != "test") continue;
        result = splits[name];
        const auto y = ds.labels();
        for (std::size_t i = 0; i < scores.size(); ++i) {
            predictions += std::to_string(i) + "," + (ds.has_groups() ? std::to_string(ds.groups()[i]) : "") + "," +
                           std::to_string(y[i]) + "," + format_double(scores[i]) + "\n";
        }
        if (ctx.cfg.evaluate.per_day && ds.has_groups()) {
            for (const auto& r : grouped_eval(scores, y, ds.groups(), opts)) {
                per_day.push_back(to_json(r));
                csv += metrics_csv_row(label, name, r) + "\n";
            }
        }
    }
    const json report = {{"model", label},
                         {"kind", model_kind(model.model)},
                         {"features", model.feature_names},
                         {"threshold", opts.threshold},
                         {"bootstrap", opts.n_resamples},
                         {"level", opts.level},
                         {"splits", std::move(splits)},
                         {"per_day", std::move(per_day)}};
    write_json(ctx.dir / "metrics.json", report);
    write_text(ctx.dir / "metrics.csv", csv);
    write_text(ctx.dir / "predictions.csv", predictions);
    for (const char* a : {"metrics.json", "metrics.csv", "predictions.csv"}) rec.artifacts.emplace_back(a);
}

void stage_explain(const Context& ctx, StageRecord& rec) {
    const auto model = load_model(ctx.dir / ctx.final_model());
    const auto& ex = ctx.cfg.explain;
    const auto train = select_columns(ctx.load("train.csv"), model.feature_names);
    const auto test = select_columns(ctx.load("test.csv"), model.feature_names);
    const auto seed = ctx.seed("explain");
    rec.seeds["explain"] = seed;

    const Matrix background = sample_background(feature_matrix(train), ex.background, derive_seed(seed, "background"));
    Rng rng(derive_seed(seed, "rows"));
    auto order = permutation(test.n_rows(), rng);
    order.resize(std::min(order.size(), ex.rows));
    std::sort(order.begin(), order.end());
    const Matrix sample = feature_matrix(test).take_rows(order);

    const PredictFn predict = [&](const Matrix& x) { return predict_proba(model, x); };
    const auto summary = shap_summary(predict, background, sample, model.feature_names, ex.top_k, ex.coalitions,
                                      derive_seed(seed, "kernel"));
    auto j = to_json(summary);
    j["test_rows"] = order;
    write_json(ctx.dir / "shap.json", j);
    write_text(ctx.dir / "shap.csv", shap_csv(summary, sample));
    rec.artifacts.emplace_back("shap.json");
    rec.artifacts.emplace_back("shap.csv");
}

bool artifacts_present(const fs::path& dir, const StageRecord& rec) {
    return std::all_of(rec.artifacts.begin(), rec.artifacts.end(),
                       [&](const std::string& a) { return fs::exists(dir / a); });
}

} // namespace

RunManifest run_pipeline(const RunConfig& cfg, const RunOptions& options) {
    require_valid(cfg);
    const fs::path dir = cfg.out_dir;
    fs::create_directories(dir);
    const Context ctx{cfg, dir, csv_options(cfg.input)};

    RunManifest previous;
    bool have_previous = false;
    if (options.resume && fs::exists(dir / "manifest.json")) {
        try {
            previous = load_manifest(dir / "manifest.json");
            have_previous = previous.config_hash == config_hash(cfg);
        } catch (const DataError&) {
            log_warning("existing manifest is unreadable; running every stage");
        }
    }

    RunManifest m;
    m.config_hash = config_hash(cfg);
    m.versions = {{"icumort", ICUMORT_VERSION}, {"model_format", kModelFormatVersion}, {"manifest_format", 1}};
    m.master_seed = cfg.seed;
    write_json(dir / "config.json", to_json(cfg));

    json result;
    const std::vector<std::pair<std::string, StageFn>> stages{
        {"preprocess", stage_preprocess},
        {"select", stage_select},
        {"resample", stage_resample},
        {"train", stage_train},
        {"ablate", stage_ablate},
        {"evaluate", [&](const Context& c, StageRecord& r) { stage_evaluate(c, r, result); }},
        {"explain", stage_explain},
    };

    bool upstream_ran = false;
    for (const auto& [name, fn] : stages) {
        StageRecord rec;
        rec.name = name;
        const bool enabled = (name != "ablate" || cfg.ablation.enabled) && (name != "explain" || cfg.explain.enabled);
        if (!enabled) {
            rec.status = "skipped";
            m.stages.push_back(std::move(rec));
            continue;
        }
        if (have_previous && !upstream_ran) {
            auto it = std::find_if(previous.stages.begin(), previous.stages.end(),
                                   [&](const StageRecord& s) { return s.name == name; });
            if (it != previous.stages.end() && (it->status == "completed" || it->status == "resumed") &&
                artifacts_present(dir, *it)) {
                rec = *it;
                rec.status = "resumed";
                rec.wall_clock_s = 0.0;
                if (name == "evaluate") result = read_json(dir / "metrics.json").at("splits").at("test");
                m.stages.push_back(std::move(rec));
                log_info("stage " + name + ": up to date");
                continue;
            }
        }
        upstream_ran = true;
        log_info("stage " + name + ": running");
        const auto start = std::chrono::steady_clock::now();
        try {
            fn(ctx, rec);
        } catch (const std::exception& e) {
            rec.status = "failed";
            rec.error = e.what();
            rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            m.stages.push_back(std::move(rec));
            write_json(dir / "manifest.json", to_json(m));
            throw;
        }
        rec.status = "completed";
        rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        m.stages.push_back(std::move(rec));
        write_json(dir / "manifest.json", to_json(m));
    }
    m.completed = true;
    m.result = result;
    write_json(dir / "manifest.json", to_json(m));
    return m;
}

// ---------------------------------------------------------------------------
// Predictor

Predictor Predictor::load(const fs::path& run_dir) {
    Predictor p;
    const auto pre = read_json(run_dir / "preprocess.json");
    p.imputer_ = imputer_from_json(pre.at("imputer"));
    p.scaler_ = scaler_from_json(pre.at("scaler"));
    const auto cfg = read_json(run_dir / "config.json");
    const bool ablated = cfg.at("ablation").at("enabled").get<bool>();
    p.model_ = load_model(run_dir / (ablated ? "model_final.json" : "model.json"));
    return p;
}

std::vector<double> Predictor::score(const Dataset& raw) const {
    const auto kept = select_columns(raw, imputer_.names);
    const auto scaled = apply_scale_min_max(apply_median(kept, imputer_), scaler_);
    return score_dataset(model_, scaled);
}

// ---------------------------------------------------------------------------
// Comparison

ComparisonTable compare_runs(const std::vector<fs::path>& runs) {
    if (runs.size() < 2) throw ConfigError("compare needs at least two runs");
    ComparisonTable t;
    for (const auto& r : runs) {
        const fs::path manifest_path = fs::is_directory(r) ? r / "manifest.json" : r;
        const fs::path dir = manifest_path.parent_path().empty() ? fs::path(".") : manifest_path.parent_path();
        const auto manifest = load_manifest(manifest_path);
        const auto has_eval = std::any_of(manifest.stages.begin(), manifest.stages.end(), [](const StageRecord& s) {
            return s.name == "evaluate" && (s.status == "completed" || s.status == "resumed");
        });
        if (!has_eval || !fs::exists(dir / "metrics.json")) {
            throw DataError("run " + dir.string() + " has no evaluation report");
        }
        const auto metrics = read_json(dir / "metrics.json");
        t.rows.push_back({metrics.at("model").get<std::string>(), dir,
                          metrics_report_from_json(metrics.at("splits").at("test"))});
    }

    const std::vector<std::string> heads{"Accuracy", "Precision", "Sensitivity", "F1-score", "Specificity", "AUROC"};
    const auto values = [](const MetricsReport& r) {
        return std::vector<double>{r.metrics.accuracy, r.metrics.precision, r.metrics.sensitivity,
                                   r.metrics.f1,       r.metrics.specificity, r.auroc};
    };
    std::vector<double> best(heads.size(), -1.0);
    for (const auto& row : t.rows) {
        const auto v = values(row.test);
        for (std::size_t c = 0; c < v.size(); ++c) best[c] = std::max(best[c], v[c]);
    }

    std::size_t label_w = 5;
    for (const auto& row : t.rows) label_w = std::max(label_w, row.label.size());
    const auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };
    std::string text = pad("Model", label_w);
    for (const auto& h : heads) text += "  " + pad(h, 12);
    text += "  95% CI\n";
    t.csv = "model,accuracy,precision,sensitivity,f1,specificity,auroc,ci_low,ci_high\n";
    t.json = json::array();
    for (const auto& row : t.rows) {
        const auto v = values(row.test);
        text += pad(row.label, label_w);
        t.csv += row.label;
        json cells = json::object();
        for (std::size_t c = 0; c < v.size(); ++c) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f%s", v[c], v[c] == best[c] ? "*" : "");
            text += "  " + pad(buf, 12);
            t.csv += "," + format_double(v[c]);
            cells[heads[c]] = {{"value", v[c]}, {"best", v[c] == best[c]}};
        }
        char ci[48];
        std::snprintf(ci, sizeof ci, "[%.3f-%.3f]", row.test.ci_low, row.test.ci_high);
        text += std::string("  ") + ci + "\n";
        t.csv += "," + format_double(row.test.ci_low) + "," + format_double(row.test.ci_high) + "\n";
        t.json.push_back({{"model", row.label},
                          {"run", row.run_dir.string()},
                          {"metrics", cells},
                          {"ci_low", row.test.ci_low},
                          {"ci_high", row.test.ci_high}});
    }
    t.text = std::move(text);
    return t;
}

} // namespace icumort
