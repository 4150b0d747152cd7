#include "icumort/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "icumort/error.hpp"
#include "icumort/random.hpp"
#include "icumort/toml_lite.hpp"

namespace icumort {

namespace {

using json = nlohmann::json;

bool convert(const json& v, double& out) {
    if (!v.is_number()) return false;
    out = v.get<double>();
    return true;
}
bool convert(const json& v, bool& out) {
    if (!v.is_boolean()) return false;
    out = v.get<bool>();
    return true;
}
bool convert(const json& v, std::string& out) {
    if (!v.is_string()) return false;
    out = v.get<std::string>();
    return true;
}
bool convert(const json& v, std::uint64_t& out) {
    if (v.is_number_unsigned()) {
        out = v.get<std::uint64_t>();
        return true;
    }
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        out = static_cast<std::uint64_t>(v.get<std::int64_t>());
        return true;
    }
    return false;
}
template <class T>
bool convert(const json& v, std::vector<T>& out) {
    if (!v.is_array()) return false;
    std::vector<T> tmp(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!convert(v[i], tmp[i])) return false;
    }
    out = std::move(tmp);
    return true;
}
bool convert(const json& v, std::array<double, 3>& out) {
    std::vector<double> tmp;
    if (!convert(v, tmp) || tmp.size() != 3) return false;
    std::copy(tmp.begin(), tmp.end(), out.begin());
    return true;
}

template <class T>
constexpr const char* type_name() {
    if constexpr (std::is_same_v<T, double>) return "a number";
    else if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else if constexpr (std::is_same_v<T, std::uint64_t>) return "a non-negative integer";
    else if constexpr (std::is_same_v<T, std::array<double, 3>>) return "an array of three numbers";
    else return "an array";
}

// Reads one table, remembering the keys it consumed so leftovers can be
// reported as unknown.
class Reader {
public:
    Reader(const json& j, std::string where, std::vector<std::string>& errors)
        : j_(j), where_(std::move(where)), errors_(errors) {
        if (!j_.is_object()) {
            errors_.push_back(label("") + "must be a table");
            valid_ = false;
        }
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!valid_ || !j_.contains(key)) return;
        if constexpr (std::is_same_v<T, std::size_t> && !std::is_same_v<std::size_t, std::uint64_t>) {
            std::uint64_t v = 0;
            if (!convert(j_.at(key), v)) errors_.push_back(label(key) + "must be a non-negative integer");
            else out = static_cast<std::size_t>(v);
        } else {
            if (!convert(j_.at(key), out)) errors_.push_back(label(key) + "must be " + type_name<T>());
        }
    }

    template <class T>
    void get(const char* key, std::optional<T>& out) {
        seen_.insert(key);
        if (!valid_ || !j_.contains(key) || j_.at(key).is_null()) return;
        T v{};
        get(key, v);
        if (convert(j_.at(key), v)) out = v;
    }

    Reader child(const char* key) {
        seen_.insert(key);
        static const json empty = json::object();
        const json& sub = valid_ && j_.contains(key) ? j_.at(key) : empty;
        return Reader(sub, where_.empty() ? key : where_ + "." + key, errors_);
    }

    ~Reader() {
        if (!valid_) return;
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) errors_.push_back(label(k) + "unknown key");
        }
    }

    Reader(const Reader&) = delete;
    Reader& operator=(const Reader&) = delete;
    Reader(Reader&&) = default;

private:
    std::string label(const std::string& key) const {
        const std::string full = where_.empty() ? key : (key.empty() ? where_ : where_ + "." + key);
        return full + ": ";
    }

    const json& j_;
    std::string where_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
    bool valid_ = true;
};

void read_gbt(Reader&& r, GbtParams& p) {
    r.get("n_trees", p.n_trees);
    r.get("max_depth", p.max_depth);
    r.get("learning_rate", p.learning_rate);
    r.get("reg_lambda", p.reg_lambda);
    r.get("gamma", p.gamma);
}

json gbt_json(const GbtParams& p) {
    return {{"n_trees", p.n_trees},
            {"max_depth", p.max_depth},
            {"learning_rate", p.learning_rate},
            {"reg_lambda", p.reg_lambda},
            {"gamma", p.gamma}};
}

void check_gbt(const GbtParams& p, const std::string& where, std::vector<std::string>& errors) {
    if (p.max_depth < 1) errors.push_back(where + ".max_depth: must be at least 1");
    if (!(p.learning_rate > 0.0 && p.learning_rate <= 1.0)) errors.push_back(where + ".learning_rate: must lie in (0, 1]");
    if (!(p.reg_lambda >= 0.0)) errors.push_back(where + ".reg_lambda: must be non-negative");
    if (!(p.gamma >= 0.0)) errors.push_back(where + ".gamma: must be non-negative");
}

} // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    std::vector<std::string> errors;
    {
        Reader root(j, "", errors);
        root.get("seed", c.seed);
        root.get("out_dir", c.out_dir);
        {
            auto r = root.child("input");
            r.get("csv", c.input.csv);
            r.get("synth_preset", c.input.synth_preset);
            r.get("synth_rows", c.input.synth_rows);
            r.get("label_column", c.input.label_column);
            r.get("group_column", c.input.group_column);
        }
        {
            auto r = root.child("preprocess");
            r.get("nan_threshold", c.preprocess.nan_threshold);
            r.get("ratios", c.preprocess.ratios);
            r.get("stratified", c.preprocess.stratified);
        }
        {
            auto r = root.child("select");
            r.get("method", c.select.method);
            r.get("top_k", c.select.top_k);
            r.get("keep_list", c.select.keep_list);
            r.get("keep_list_file", c.select.keep_list_file);
            r.get("lasso_lambda_ratio", c.select.lasso_lambda_ratio);
            read_gbt(r.child("gbt"), c.select.gbt);
        }
        {
            auto r = root.child("smote");
            r.get("enabled", c.smote.enabled);
            r.get("k_neighbors", c.smote.k_neighbors);
            r.get("ratio", c.smote.ratio);
        }
        {
            auto r = root.child("model");
            r.get("kind", c.model.kind);
            {
                auto d = r.child("dl");
                d.get("hidden", c.model.dl.hidden);
                d.get("dropout", c.model.dl.dropout);
                d.get("dropout_sites", c.model.dl.dropout_sites);
                d.get("hidden_batchnorm", c.model.dl.hidden_batchnorm);
                d.get("epochs", c.model.dl.epochs);
                d.get("batch_size", c.model.dl.batch_size);
                d.get("learning_rate", c.model.dl.learning_rate);
                d.get("momentum", c.model.dl.momentum);
            }
            {
                auto l = r.child("lr");
                l.get("learning_rate", c.model.lr.learning_rate);
                l.get("epochs", c.model.lr.epochs);
                l.get("l2", c.model.lr.l2);
            }
            {
                auto f = r.child("rf");
                f.get("n_trees", c.model.rf.n_trees);
                f.get("max_features", c.model.rf.max_features);
                f.get("max_depth", c.model.rf.max_depth);
                f.get("min_samples_split", c.model.rf.min_samples_split);
                f.get("bootstrap", c.model.rf.bootstrap);
            }
            read_gbt(r.child("gbt"), c.model.gbt);
        }
        {
            auto r = root.child("ablation");
            r.get("enabled", c.ablation.enabled);
            r.get("margin", c.ablation.margin);
            r.get("epochs", c.ablation.epochs);
        }
        {
            auto r = root.child("evaluate");
            r.get("bootstrap", c.evaluate.bootstrap);
            r.get("level", c.evaluate.level);
            r.get("per_day", c.evaluate.per_day);
            r.get("threshold", c.evaluate.threshold);
        }
        {
            auto r = root.child("explain");
            r.get("enabled", c.explain.enabled);
            r.get("rows", c.explain.rows);
            r.get("top_k", c.explain.top_k);
            r.get("coalitions", c.explain.coalitions);
            r.get("background", c.explain.background);
        }
    }
    // Fields with type errors keep their defaults, so the semantic checks
    // still run and everything is reported in one go.
    for (auto& e : validate(c)) errors.push_back(std::move(e));
    if (!errors.empty()) {
        std::string msg = "invalid run configuration (" + std::to_string(errors.size()) + " problem" +
                          (errors.size() == 1 ? "" : "s") + "):";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    json j;
    if (path.extension() == ".json") {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path.string());
        std::stringstream buf;
        buf << in.rdbuf();
        j = json::parse(buf.str(), nullptr, false);
        if (j.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
    } else {
        j = load_toml(path);
    }
    const auto base = path.parent_path();
    const auto resolve = [&](const json::json_pointer& ptr) {
        if (j.contains(ptr) && j.at(ptr).is_string()) {
            const std::filesystem::path p = j.at(ptr).get<std::string>();
            if (p.is_relative()) j[ptr] = (base / p).lexically_normal().string();
        }
    };
    resolve(json::json_pointer("/input/csv"));
    resolve(json::json_pointer("/select/keep_list_file"));
    return run_config_from_json(j);
}

nlohmann::json to_json(const RunConfig& c) {
    json input = {{"label_column", c.input.label_column}, {"group_column", c.input.group_column}};
    if (c.input.csv) input["csv"] = *c.input.csv;
    if (c.input.synth_preset) input["synth_preset"] = *c.input.synth_preset;
    if (c.input.synth_rows) input["synth_rows"] = *c.input.synth_rows;

    json select = {{"method", c.select.method},
                   {"top_k", c.select.top_k},
                   {"keep_list", c.select.keep_list},
                   {"lasso_lambda_ratio", c.select.lasso_lambda_ratio},
                   {"gbt", gbt_json(c.select.gbt)}};
    if (c.select.keep_list_file) select["keep_list_file"] = *c.select.keep_list_file;

    json ablation = {{"enabled", c.ablation.enabled}, {"margin", c.ablation.margin}};
    if (c.ablation.epochs) ablation["epochs"] = *c.ablation.epochs;

    const auto& dl = c.model.dl;
    const auto& rf = c.model.rf;
    return {{"seed", c.seed},
            {"out_dir", c.out_dir},
            {"input", std::move(input)},
            {"preprocess",
             {{"nan_threshold", c.preprocess.nan_threshold},
              {"ratios", c.preprocess.ratios},
              {"stratified", c.preprocess.stratified}}},
            {"select", std::move(select)},
            {"smote", {{"enabled", c.smote.enabled}, {"k_neighbors", c.smote.k_neighbors}, {"ratio", c.smote.ratio}}},
            {"model",
             {{"kind", c.model.kind},
              {"dl",
               {{"hidden", dl.hidden},
                {"dropout", dl.dropout},
                {"dropout_sites", dl.dropout_sites},
                {"hidden_batchnorm", dl.hidden_batchnorm},
                {"epochs", dl.epochs},
                {"batch_size", dl.batch_size},
                {"learning_rate", dl.learning_rate},
                {"momentum", dl.momentum}}},
              {"lr",
               {{"learning_rate", c.model.lr.learning_rate}, {"epochs", c.model.lr.epochs}, {"l2", c.model.lr.l2}}},
              {"rf",
               {{"n_trees", rf.n_trees},
                {"max_features", rf.max_features},
                {"max_depth", rf.max_depth},
                {"min_samples_split", rf.min_samples_split},
                {"bootstrap", rf.bootstrap}}},
              {"gbt", gbt_json(c.model.gbt)}}},
            {"ablation", std::move(ablation)},
            {"evaluate",
             {{"bootstrap", c.evaluate.bootstrap},
              {"level", c.evaluate.level},
              {"per_day", c.evaluate.per_day},
              {"threshold", c.evaluate.threshold}}},
            {"explain",
             {{"enabled", c.explain.enabled},
              {"rows", c.explain.rows},
              {"top_k", c.explain.top_k},
              {"coalitions", c.explain.coalitions},
              {"background", c.explain.background}}}};
}

std::vector<std::string> validate(const RunConfig& c) {
    std::vector<std::string> e;
    namespace fs = std::filesystem;

    if (c.input.csv && c.input.synth_preset) e.push_back("input: set either csv or synth_preset, not both");
    if (!c.input.csv && !c.input.synth_preset) e.push_back("input: one of csv or synth_preset is required");
    if (c.input.csv && !fs::exists(*c.input.csv)) e.push_back("input.csv: file not found: " + *c.input.csv);
    if (c.input.synth_preset && *c.input.synth_preset != "paper-shape") {
        e.push_back("input.synth_preset: unknown preset '" + *c.input.synth_preset + "'");
    }
    if (c.input.synth_rows && *c.input.synth_rows < 20) e.push_back("input.synth_rows: must be at least 20");
    if (c.out_dir.empty()) e.push_back("out_dir: must not be empty");

    const auto& p = c.preprocess;
    if (!(p.nan_threshold >= 0.0 && p.nan_threshold <= 1.0)) e.push_back("preprocess.nan_threshold: must lie in [0, 1]");
    if (!(p.ratios[0] > 0.0 && p.ratios[1] > 0.0 && p.ratios[2] > 0.0) ||
        std::abs(p.ratios[0] + p.ratios[1] + p.ratios[2] - 1.0) > 1e-9) {
        e.push_back("preprocess.ratios: must be three positive numbers summing to 1");
    }

    const auto& s = c.select;
    if (s.method != "gbt" && s.method != "lasso" && s.method != "keep-list") {
        e.push_back("select.method: must be gbt, lasso or keep-list");
    }
    if (s.top_k < 1) e.push_back("select.top_k: must be at least 1");
    if (s.method == "keep-list" && s.keep_list.empty() && !s.keep_list_file) {
        e.push_back("select.keep_list: required when method is keep-list");
    }
    if (s.keep_list_file && !fs::exists(*s.keep_list_file)) {
        e.push_back("select.keep_list_file: file not found: " + *s.keep_list_file);
    }
    if (!(s.lasso_lambda_ratio > 0.0 && s.lasso_lambda_ratio <= 1.0)) {
        e.push_back("select.lasso_lambda_ratio: must lie in (0, 1]");
    }
    check_gbt(s.gbt, "select.gbt", e);

    if (c.smote.k_neighbors < 1) e.push_back("smote.k_neighbors: must be at least 1");
    if (!(c.smote.ratio > 0.0)) e.push_back("smote.ratio: must be positive");

    const auto& m = c.model;
    if (m.kind != "dl" && m.kind != "lr" && m.kind != "rf" && m.kind != "gbt") {
        e.push_back("model.kind: must be dl, lr, rf or gbt");
    }
    if (m.dl.hidden.empty()) e.push_back("model.dl.hidden: needs at least one layer");
    for (auto h : m.dl.hidden) {
        if (h == 0) e.push_back("model.dl.hidden: widths must be positive");
    }
    if (!(m.dl.dropout >= 0.0 && m.dl.dropout < 1.0)) e.push_back("model.dl.dropout: must lie in [0, 1)");
    if (m.dl.dropout_sites > m.dl.hidden.size()) e.push_back("model.dl.dropout_sites: more than hidden layers");
    if (m.dl.epochs < 1) e.push_back("model.dl.epochs: must be at least 1");
    if (m.dl.batch_size < 2) e.push_back("model.dl.batch_size: must be at least 2");
    if (!(m.dl.learning_rate > 0.0)) e.push_back("model.dl.learning_rate: must be positive");
    if (!(m.dl.momentum >= 0.0 && m.dl.momentum < 1.0)) e.push_back("model.dl.momentum: must lie in [0, 1)");
    if (m.lr.epochs < 1) e.push_back("model.lr.epochs: must be at least 1");
    if (!(m.lr.learning_rate > 0.0)) e.push_back("model.lr.learning_rate: must be positive");
    if (!(m.lr.l2 >= 0.0)) e.push_back("model.lr.l2: must be non-negative");
    if (m.rf.n_trees < 1) e.push_back("model.rf.n_trees: must be at least 1");
    if (m.rf.min_samples_split < 2) e.push_back("model.rf.min_samples_split: must be at least 2");
    check_gbt(m.gbt, "model.gbt", e);

    if (!(c.ablation.margin >= 0.0)) e.push_back("ablation.margin: must be non-negative");
    if (c.ablation.epochs && *c.ablation.epochs < 1) e.push_back("ablation.epochs: must be at least 1");

    if (c.evaluate.bootstrap < 1) e.push_back("evaluate.bootstrap: must be at least 1");
    if (!(c.evaluate.level > 0.0 && c.evaluate.level < 1.0)) e.push_back("evaluate.level: must lie in (0, 1)");

    if (c.explain.rows < 1) e.push_back("explain.rows: must be at least 1");
    if (c.explain.top_k < 1) e.push_back("explain.top_k: must be at least 1");
    if (c.explain.background < 1) e.push_back("explain.background: must be at least 1");
    if (c.explain.coalitions < 4) e.push_back("explain.coalitions: must be at least 4");
    return e;
}

void require_valid(const RunConfig& c) {
    const auto errors = validate(c);
    if (errors.empty()) return;
    std::string msg = "invalid run configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
}

std::string config_hash(const RunConfig& c) {
    auto j = to_json(c);
    j.erase("out_dir");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

MlpArchitecture mlp_architecture(const DlSettings& s, std::size_t input_dim) {
    MlpArchitecture a;
    a.input_dim = input_dim;
    a.hidden = s.hidden;
    a.dropout = s.dropout;
    a.dropout_sites = s.dropout_sites;
    a.hidden_batchnorm = s.hidden_batchnorm;
    return a;
}

} // namespace icumort
