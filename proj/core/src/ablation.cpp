#include "icumort/ablation.hpp"

#include <algorithm>

#include "icumort/error.hpp"
#include "icumort/metrics.hpp"
#include "icumort/random.hpp"

namespace icumort {

namespace {

std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
    return out;
}

double evaluate_subset(const ModelFactory& factory, const Dataset& train, const Dataset& val,
                       const std::vector<std::string>& subset, std::uint64_t seed) {
    const auto where = " (features: " + join(subset) + ")";
    try {
        const auto scores = factory(select_columns(train, subset), select_columns(val, subset), seed);
        return auroc(scores, val.labels());
    } catch (const ConfigError& e) {
        throw ConfigError(e.what() + where);
    } catch (const DataError& e) {
        throw DataError(e.what() + where);
    } catch (const NumericError& e) {
        throw NumericError(e.what() + where);
    } catch (const std::exception& e) {
        throw Error(e.what() + where);
    }
}

} // namespace

std::uint64_t ablation_seed(std::uint64_t master, std::size_t sweep, const std::string& feature) {
    return derive_seed(master, "ablation:" + feature, sweep);
}

AblationTrace ablate(const ModelFactory& factory, const Dataset& train, const Dataset& val,
                     const std::vector<std::string>& features, const AblationOptions& options) {
    if (features.empty()) throw ConfigError("ablation needs at least one feature");
    if (!(options.margin >= 0.0)) throw ConfigError("ablation margin must be non-negative");
    for (const auto& f : features) {
        if (!train.find_column(f) || !val.find_column(f)) throw DataError("feature '" + f + "' missing from data");
    }

    AblationTrace trace;
    trace.initial_features = features;
    std::vector<std::string> current = features;
    double best = evaluate_subset(factory, train, val, current, derive_seed(options.seed, "ablation-baseline"));
    trace.baseline_auroc = best;
    trace.retrains = 1;

    for (std::size_t sweep = 0;; ++sweep) {
        AblationSweep record{sweep, {}};
        bool improved = false;
        const auto order = current;
        for (const auto& feature : order) {
            if (current.size() == 1) break;
            std::vector<std::string> candidate;
            for (const auto& f : current) {
                if (f != feature) candidate.push_back(f);
            }
            const double score =
                evaluate_subset(factory, train, val, candidate, ablation_seed(options.seed, sweep, feature));
            ++trace.retrains;
            AblationEvaluation eval{feature, best, score, score > best + options.margin, {}};
            if (eval.accepted) {
                current = std::move(candidate);
                best = score;
                improved = true;
            }
            eval.surviving = current;
            record.evaluations.push_back(std::move(eval));
        }
        trace.sweeps.push_back(std::move(record));
        if (!improved) break;
    }
    trace.final_features = current;
    trace.final_auroc = best;
    return trace;
}

nlohmann::json to_json(const AblationTrace& t) {
    nlohmann::json sweeps = nlohmann::json::array();
    for (const auto& s : t.sweeps) {
        nlohmann::json evals = nlohmann::json::array();
        for (const auto& e : s.evaluations) {
            evals.push_back({{"feature", e.feature},
                             {"auroc_before", e.auroc_before},
                             {"auroc_after", e.auroc_after},
                             {"accepted", e.accepted},
                             {"surviving", e.surviving}});
        }
        sweeps.push_back({{"index", s.index}, {"evaluations", std::move(evals)}});
    }
    return {{"initial_features", t.initial_features},
            {"baseline_auroc", t.baseline_auroc},
            {"sweeps", std::move(sweeps)},
            {"final_features", t.final_features},
            {"final_auroc", t.final_auroc},
            {"retrains", t.retrains}};
}

} // namespace icumort
