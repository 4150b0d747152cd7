#include "icumort/models.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "icumort/error.hpp"
#include "icumort/random.hpp"

namespace icumort {

namespace {

constexpr const char* kFormat = "icumort-model";

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

nlohmann::json trees_json(const std::vector<Tree>& trees) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : trees) out.push_back(to_json(t));
    return out;
}

std::vector<Tree> trees_from(const nlohmann::json& j, std::size_t n_features) {
    std::vector<Tree> out;
    for (const auto& t : j) {
        out.push_back(tree_from_json(t));
        for (const auto& node : out.back().nodes) {
            if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= n_features) {
                throw DataError("tree splits on a feature outside the model's inputs");
            }
        }
    }
    return out;
}

nlohmann::json payload_of(const AnyModel& model) {
    return std::visit(
        overloaded{
            [](const LogisticModel& m) -> nlohmann::json {
                return {{"hyperparameters",
                         {{"learning_rate", m.params.learning_rate}, {"epochs", m.params.epochs}, {"l2", m.params.l2}}},
                        {"weights", m.weights},
                        {"intercept", m.intercept}};
            },
            [](const LassoModel& m) -> nlohmann::json {
                return {{"hyperparameters", {{"lambda", m.lambda}}},
                        {"weights", m.weights},
                        {"intercept", m.intercept},
                        {"converged", m.converged},
                        {"iterations", m.iterations}};
            },
            [](const GbtModel& m) -> nlohmann::json {
                nlohmann::json hp = {{"n_trees", m.params.n_trees},
                                     {"max_depth", m.params.max_depth},
                                     {"learning_rate", m.params.learning_rate},
                                     {"reg_lambda", m.params.reg_lambda},
                                     {"gamma", m.params.gamma}};
                hp["base_probability"] =
                    m.params.base_probability ? nlohmann::json(*m.params.base_probability) : nlohmann::json(nullptr);
                return {{"hyperparameters", hp}, {"base_score", m.base_score}, {"trees", trees_json(m.trees)}};
            },
            [](const RfModel& m) -> nlohmann::json {
                return {{"hyperparameters",
                         {{"n_trees", m.params.n_trees},
                          {"max_features", m.params.max_features},
                          {"max_depth", m.params.max_depth},
                          {"min_samples_split", m.params.min_samples_split},
                          {"bootstrap", m.params.bootstrap},
                          {"seed", m.params.seed}}},
                        {"trees", trees_json(m.trees)}};
            },
            [](const MlpModel& m) -> nlohmann::json {
                return {{"architecture", to_json(m.architecture())}, {"parameters", mlp_parameters_json(m)}};
            },
        },
        model);
}

AnyModel model_from_payload(const std::string& kind, const nlohmann::json& p,
                            const std::vector<std::string>& names) {
    const std::size_t d = names.size();
    if (kind == "logistic") {
        LogisticModel m;
        const auto& hp = p.at("hyperparameters");
        m.params = {hp.at("learning_rate").get<double>(), hp.at("epochs").get<std::size_t>(),
                    hp.at("l2").get<double>()};
        m.weights = p.at("weights").get<std::vector<double>>();
        m.intercept = p.at("intercept").get<double>();
        m.feature_names = names;
        if (m.weights.size() != d) throw DataError("logistic weight count does not match feature names");
        return m;
    }
    if (kind == "lasso") {
        LassoModel m;
        m.lambda = p.at("hyperparameters").at("lambda").get<double>();
        m.weights = p.at("weights").get<std::vector<double>>();
        m.intercept = p.at("intercept").get<double>();
        m.converged = p.at("converged").get<bool>();
        m.iterations = p.at("iterations").get<std::size_t>();
        m.feature_names = names;
        if (m.weights.size() != d) throw DataError("lasso weight count does not match feature names");
        return m;
    }
    if (kind == "gbt") {
        GbtModel m;
        const auto& hp = p.at("hyperparameters");
        m.params.n_trees = hp.at("n_trees").get<std::size_t>();
        m.params.max_depth = hp.at("max_depth").get<std::size_t>();
        m.params.learning_rate = hp.at("learning_rate").get<double>();
        m.params.reg_lambda = hp.at("reg_lambda").get<double>();
        m.params.gamma = hp.at("gamma").get<double>();
        if (!hp.at("base_probability").is_null()) m.params.base_probability = hp.at("base_probability").get<double>();
        m.base_score = p.at("base_score").get<double>();
        m.trees = trees_from(p.at("trees"), d);
        m.feature_names = names;
        return m;
    }
    if (kind == "rf") {
        RfModel m;
        const auto& hp = p.at("hyperparameters");
        m.params.n_trees = hp.at("n_trees").get<std::size_t>();
        m.params.max_features = hp.at("max_features").get<std::size_t>();
        m.params.max_depth = hp.at("max_depth").get<std::size_t>();
        m.params.min_samples_split = hp.at("min_samples_split").get<std::size_t>();
        m.params.bootstrap = hp.at("bootstrap").get<bool>();
        m.params.seed = hp.at("seed").get<std::uint64_t>();
        m.trees = trees_from(p.at("trees"), d);
        if (m.trees.empty()) throw DataError("random forest file holds no trees");
        m.feature_names = names;
        return m;
    }
    if (kind == "mlp") {
        auto m = mlp_from_json(p.at("architecture"), p.at("parameters"));
        if (m.input_dim() != d) throw DataError("MLP input dimension does not match feature names");
        return m;
    }
    throw DataError("unknown model kind '" + kind + "'");
}

std::string checksum(const nlohmann::json& kind, const nlohmann::json& names, const nlohmann::json& payload) {
    const nlohmann::json covered = {{"kind", kind}, {"feature_names", names}, {"payload", payload}};
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(covered.dump())));
    return buf;
}

} // namespace

std::string model_kind(const AnyModel& m) {
    static const char* kinds[] = {"logistic", "lasso", "gbt", "rf", "mlp"};
    return kinds[m.index()];
}

std::vector<double> predict_proba(const TrainedModel& m, const Matrix& x) {
    if (x.cols() != m.feature_names.size()) {
        throw DataError("model expects " + std::to_string(m.feature_names.size()) + " features, got " +
                        std::to_string(x.cols()));
    }
    return std::visit(overloaded{[&](const MlpModel& mm) { return mm.predict_proba(x); },
                                 [&](const auto& mm) { return predict_proba(mm, x); }},
                      m.model);
}

nlohmann::json model_to_json(const TrainedModel& m) {
    const nlohmann::json kind = model_kind(m.model);
    const nlohmann::json names = m.feature_names;
    auto payload = payload_of(m.model);
    const auto sum = checksum(kind, names, payload);
    return {{"format", kFormat},       {"version", kModelFormatVersion}, {"kind", kind},
            {"feature_names", names},  {"payload", std::move(payload)},  {"checksum", sum}};
}

TrainedModel model_from_json(const nlohmann::json& doc) {
    try {
        if (!doc.is_object() || doc.value("format", "") != kFormat) throw DataError("not an icumort model document");
        const int version = doc.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw DataError("model format version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kModelFormatVersion) + ")");
        }
        const auto& kind = doc.at("kind");
        const auto& names = doc.at("feature_names");
        const auto& payload = doc.at("payload");
        if (checksum(kind, names, payload) != doc.at("checksum").get<std::string>()) {
            throw DataError("model checksum mismatch; the file was modified or corrupted");
        }
        TrainedModel m;
        m.feature_names = names.get<std::vector<std::string>>();
        m.model = model_from_payload(kind.get<std::string>(), payload, m.feature_names);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    } catch (const ConfigError& e) {
        throw DataError(std::string("invalid model document: ") + e.what());
    }
}

void save_model(const TrainedModel& m, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << model_to_json(m).dump(1) << '\n';
    if (!out) throw DataError("failed writing " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const auto doc = nlohmann::json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded()) throw DataError("model file " + path.string() + " is not valid JSON (truncated?)");
    return model_from_json(doc);
}

} // namespace icumort
