#include "icumort/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "icumort/error.hpp"
#include "icumort/logistic.hpp"
#include "icumort/metrics.hpp"
#include "icumort/random.hpp"

namespace icumort {

namespace {

std::string numbered(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%02zu", prefix, i);
    return buf;
}

void validate(const CohortSpec& s) {
    if (s.n_rows == 0) throw ConfigError("cohort needs at least one row");
    if (s.coefficients.size() != s.n_informative) {
        throw ConfigError("cohort has " + std::to_string(s.n_informative) + " informative features but " +
                          std::to_string(s.coefficients.size()) + " coefficients");
    }
    if (!(s.missing_rate >= 0.0 && s.missing_rate < 1.0)) throw ConfigError("missing rate must lie in [0, 1)");
    if (!(s.positive_fraction > 0.0 && s.positive_fraction < 1.0)) {
        throw ConfigError("positive fraction must lie strictly between 0 and 1");
    }
    if (s.days == 0) throw ConfigError("cohort needs at least one day");
    if (!(s.day_signal_gain >= 0.0)) throw ConfigError("day signal gain must be non-negative");
}

double mean_risk(const std::vector<double>& eta, double b) {
    double s = 0.0;
    for (double e : eta) s += sigmoid(e + b);
    return s / static_cast<double>(eta.size());
}

} // namespace

CohortSpec paper_shape_spec(std::uint64_t seed) {
    CohortSpec s;
    s.seed = seed;
    s.coefficients.resize(s.n_informative);
    for (std::size_t j = 0; j < s.n_informative; ++j) {
        const double magnitude = 0.35 * (1.0 - 0.5 * static_cast<double>(j) / static_cast<double>(s.n_informative - 1));
        s.coefficients[j] = j % 2 == 0 ? magnitude : -magnitude;
    }
    return s;
}

CohortSpec preset_spec(const std::string& name, std::uint64_t seed) {
    if (name == "paper-shape") return paper_shape_spec(seed);
    throw ConfigError("unknown synth preset '" + name + "'");
}

Cohort generate_cohort(const CohortSpec& spec) {
    validate(spec);
    const std::size_t n = spec.n_rows;
    const std::size_t k = spec.n_informative;
    const std::size_t lead = spec.identifier_column ? 1 : 0;
    const std::size_t d = lead + k + spec.n_noise;

    Rng feature_rng(derive_seed(spec.seed, "synth-features"));
    Rng day_rng(derive_seed(spec.seed, "synth-day"));
    Rng label_rng(derive_seed(spec.seed, "synth-label"));
    Rng missing_rng(derive_seed(spec.seed, "synth-missing"));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> day_dist(1, spec.days);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Matrix values(n, d);
    std::vector<int> days(n);
    std::vector<double> eta(n);
    for (std::size_t r = 0; r < n; ++r) {
        auto row = values.row(r);
        if (lead) row[0] = static_cast<double>(r + 1);
        for (std::size_t j = lead; j < d; ++j) row[j] = normal(feature_rng);
        days[r] = static_cast<int>(day_dist(day_rng));
        double lin = 0.0;
        for (std::size_t j = 0; j < k; ++j) lin += spec.coefficients[j] * row[lead + j];
        eta[r] = (1.0 + static_cast<double>(days[r]) * spec.day_signal_gain) * lin;
    }

    double intercept = 0.0;
    if (spec.intercept) {
        intercept = *spec.intercept;
    } else {
        double lo = -60.0;
        double hi = 60.0;
        if (mean_risk(eta, lo) > spec.positive_fraction || mean_risk(eta, hi) < spec.positive_fraction) {
            throw ConfigError("positive fraction " + std::to_string(spec.positive_fraction) + " is unattainable");
        }
        for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
            const double mid = 0.5 * (lo + hi);
            (mean_risk(eta, mid) < spec.positive_fraction ? lo : hi) = mid;
        }
        intercept = 0.5 * (lo + hi);
    }

    std::vector<int> labels(n);
    std::size_t positives = 0;
    for (std::size_t r = 0; r < n; ++r) {
        labels[r] = unit(label_rng) < sigmoid(eta[r] + intercept) ? 1 : 0;
        positives += static_cast<std::size_t>(labels[r]);
    }

    if (spec.missing_rate > 0.0) {
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = lead; j < d; ++j) {
                if (unit(missing_rng) < spec.missing_rate) values(r, j) = kMissing;
            }
        }
    }

    GroundTruth truth;
    std::vector<ColumnMeta> columns;
    if (lead) columns.push_back({"stay_id", ColumnKind::identifier, 0});
    for (std::size_t j = 0; j < k; ++j) {
        truth.informative.push_back(numbered("inf", j));
        columns.push_back({truth.informative.back(), ColumnKind::numeric, 0});
    }
    for (std::size_t j = 0; j < spec.n_noise; ++j) {
        truth.noise.push_back(numbered("noise", j));
        columns.push_back({truth.noise.back(), ColumnKind::numeric, 0});
    }
    truth.coefficients = spec.coefficients;
    truth.intercept = intercept;
    truth.target_positive_fraction = spec.positive_fraction;
    truth.realized_positive_fraction = static_cast<double>(positives) / static_cast<double>(n);
    truth.day_signal_gain = spec.day_signal_gain;
    if (spec.bayes_draws > 0) {
        auto aucs = bayes_auroc(spec.coefficients, intercept, spec.days, spec.day_signal_gain, spec.bayes_draws,
                                derive_seed(spec.seed, "synth-bayes"));
        truth.bayes_auroc = aucs[0];
        truth.bayes_auroc_per_day.assign(aucs.begin() + 1, aucs.end());
    }

    return {Dataset(std::move(columns), std::move(values), std::move(labels), std::move(days)), std::move(truth)};
}

std::vector<double> bayes_auroc(const std::vector<double>& coefficients, double intercept, std::size_t days,
                                double day_signal_gain, std::size_t draws, std::uint64_t seed) {
    if (draws < 2 || days == 0) throw ConfigError("Bayes AUROC needs at least two draws and one day");
    // w.x for standard-normal x is N(0, |w|^2), so one normal draw per row suffices.
    double norm2 = 0.0;
    for (double w : coefficients) norm2 += w * w;
    const double scale = std::sqrt(norm2);

    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> day_dist(1, days);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> risk(draws);
    std::vector<int> label(draws);
    std::vector<int> day(draws);
    for (std::size_t i = 0; i < draws; ++i) {
        const double lin = scale * normal(rng);
        day[i] = static_cast<int>(day_dist(rng));
        risk[i] = sigmoid((1.0 + static_cast<double>(day[i]) * day_signal_gain) * lin + intercept);
        label[i] = unit(rng) < risk[i] ? 1 : 0;
    }

    std::vector<double> out(days + 1, 0.5);
    const auto safe_auroc = [](const std::vector<double>& s, const std::vector<int>& y) {
        const auto pos = std::count(y.begin(), y.end(), 1);
        if (pos == 0 || pos == static_cast<std::ptrdiff_t>(y.size())) return 0.5;
        return auroc(s, y);
    };
    out[0] = safe_auroc(risk, label);
    for (std::size_t t = 1; t <= days; ++t) {
        std::vector<double> s;
        std::vector<int> y;
        for (std::size_t i = 0; i < draws; ++i) {
            if (day[i] == static_cast<int>(t)) {
                s.push_back(risk[i]);
                y.push_back(label[i]);
            }
        }
        out[t] = safe_auroc(s, y);
    }
    return out;
}

nlohmann::json to_json(const GroundTruth& g) {
    return {{"informative", g.informative},
            {"noise", g.noise},
            {"coefficients", g.coefficients},
            {"intercept", g.intercept},
            {"target_positive_fraction", g.target_positive_fraction},
            {"realized_positive_fraction", g.realized_positive_fraction},
            {"day_signal_gain", g.day_signal_gain},
            {"bayes_auroc", g.bayes_auroc},
            {"bayes_auroc_per_day", g.bayes_auroc_per_day}};
}

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
    GroundTruth g;
    try {
        g.informative = j.at("informative").get<std::vector<std::string>>();
        g.noise = j.at("noise").get<std::vector<std::string>>();
        g.coefficients = j.at("coefficients").get<std::vector<double>>();
        g.intercept = j.at("intercept").get<double>();
        g.target_positive_fraction = j.at("target_positive_fraction").get<double>();
        g.realized_positive_fraction = j.at("realized_positive_fraction").get<double>();
        g.day_signal_gain = j.at("day_signal_gain").get<double>();
        g.bayes_auroc = j.at("bayes_auroc").get<double>();
        g.bayes_auroc_per_day = j.at("bayes_auroc_per_day").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed ground truth: ") + e.what());
    }
    return g;
}

} // namespace icumort
