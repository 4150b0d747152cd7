#include "icumort/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "icumort/dataset.hpp"
#include "icumort/error.hpp"
#include "icumort/log.hpp"
#include "icumort/random.hpp"

namespace icumort {

namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DataError("score and label lengths differ");
    for (int y : labels) {
        if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
    }
}

double ratio(std::size_t num, std::size_t den, const char* name, std::vector<std::string>& undefined) {
    if (den == 0) {
        undefined.emplace_back(name);
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

// Rank-sum AUROC over rows given as indices into scores/labels.
double auroc_rows(std::span<const double> scores, std::span<const int> labels, std::vector<std::size_t>& rows) {
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        while (j < rows.size() && scores[rows[j]] == scores[rows[i]]) ++j;
        // Ranks i+1..j share their average.
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[rows[k]] == 1) {
                rank_sum += avg_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = rows.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("AUROC is undefined when only one class is present");
    const double np = static_cast<double>(n_pos);
    const double u = rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

} // namespace

ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check_lengths(scores, labels);
    ConfusionCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i] == 1) (predicted ? c.tp : c.fn)++;
        else (predicted ? c.fp : c.tn)++;
    }
    return c;
}

ConfusionMetrics confusion_metrics(const ConfusionCounts& c) {
    ConfusionMetrics m;
    m.accuracy = ratio(c.tp + c.tn, c.n(), "accuracy", m.undefined);
    m.precision = ratio(c.tp, c.tp + c.fp, "precision", m.undefined);
    m.sensitivity = ratio(c.tp, c.tp + c.fn, "sensitivity", m.undefined);
    m.specificity = ratio(c.tn, c.tn + c.fp, "specificity", m.undefined);
    const double denom = m.precision + m.sensitivity;
    if (denom > 0.0) {
        m.f1 = 2.0 * m.precision * m.sensitivity / denom;
    } else {
        m.f1 = 0.0;
        m.undefined.emplace_back("f1");
    }
    return m;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
    check_lengths(scores, labels);
    for (double s : scores) {
        if (std::isnan(s)) throw NumericError("AUROC of NaN scores");
    }
    std::vector<std::size_t> rows(scores.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return auroc_rows(scores, labels, rows);
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw DataError("quantile of an empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Interval bootstrap_ci(std::span<const double> scores, std::span<const int> labels, std::size_t n_resamples,
                      double level, std::uint64_t seed) {
    if (n_resamples < 1) throw ConfigError("bootstrap needs at least one resample");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
    check_lengths(scores, labels);
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty()) throw DataError("bootstrap CI needs both classes");

    std::vector<double> stats(n_resamples);
    std::vector<std::size_t> rows(scores.size());
    for (std::size_t r = 0; r < n_resamples; ++r) {
        Rng rng(derive_seed(seed, "bootstrap", r));
        std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_neg(0, neg.size() - 1);
        std::size_t k = 0;
        for (std::size_t i = 0; i < pos.size(); ++i) rows[k++] = pos[pick_pos(rng)];
        for (std::size_t i = 0; i < neg.size(); ++i) rows[k++] = neg[pick_neg(rng)];
        stats[r] = auroc_rows(scores, labels, rows);
    }
    std::sort(stats.begin(), stats.end());
    const double alpha = (1.0 - level) / 2.0;
    return {quantile_sorted(stats, alpha), quantile_sorted(stats, 1.0 - alpha)};
}

MetricsReport evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                              const EvalOptions& options, std::optional<int> group) {
    MetricsReport r;
    r.counts = confusion(scores, labels, options.threshold);
    r.metrics = confusion_metrics(r.counts);
    r.auroc = auroc(scores, labels);
    if (options.n_resamples > 0) {
        const auto ci = bootstrap_ci(scores, labels, options.n_resamples, options.level, options.seed);
        r.ci_low = ci.low;
        r.ci_high = ci.high;
    } else {
        r.ci_low = r.ci_high = r.auroc;
    }
    r.n = scores.size();
    r.group = group;
    return r;
}

std::vector<MetricsReport> grouped_eval(std::span<const double> scores, std::span<const int> labels,
                                        std::span<const int> groups, const EvalOptions& options) {
    check_lengths(scores, labels);
    if (groups.size() != scores.size()) throw DataError("group and score lengths differ");
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);

    std::vector<MetricsReport> out;
    for (const auto& [g, rows] : members) {
        std::vector<double> s;
        std::vector<int> y;
        for (auto i : rows) {
            s.push_back(scores[i]);
            y.push_back(labels[i]);
        }
        const auto positives = std::count(y.begin(), y.end(), 1);
        if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y.size())) {
            log_warning("group " + std::to_string(g) + " has a single class; skipped");
            continue;
        }
        out.push_back(evaluate_scores(s, y, options, g));
    }
    return out;
}

nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json j = {
        {"n", r.n},
        {"tp", r.counts.tp},
        {"fp", r.counts.fp},
        {"tn", r.counts.tn},
        {"fn", r.counts.fn},
        {"accuracy", r.metrics.accuracy},
        {"precision", r.metrics.precision},
        {"sensitivity", r.metrics.sensitivity},
        {"specificity", r.metrics.specificity},
        {"f1", r.metrics.f1},
        {"undefined", r.metrics.undefined},
        {"auroc", r.auroc},
        {"ci_low", r.ci_low},
        {"ci_high", r.ci_high},
    };
    j["group"] = r.group ? nlohmann::json(*r.group) : nlohmann::json(nullptr);
    return j;
}

MetricsReport metrics_report_from_json(const nlohmann::json& j) {
    MetricsReport r;
    try {
        r.n = j.at("n").get<std::size_t>();
        r.counts = {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(), j.at("tn").get<std::size_t>(),
                    j.at("fn").get<std::size_t>()};
        r.metrics.accuracy = j.at("accuracy").get<double>();
        r.metrics.precision = j.at("precision").get<double>();
        r.metrics.sensitivity = j.at("sensitivity").get<double>();
        r.metrics.specificity = j.at("specificity").get<double>();
        r.metrics.f1 = j.at("f1").get<double>();
        r.metrics.undefined = j.value("undefined", std::vector<std::string>{});
        r.auroc = j.at("auroc").get<double>();
        r.ci_low = j.at("ci_low").get<double>();
        r.ci_high = j.at("ci_high").get<double>();
        if (j.contains("group") && !j.at("group").is_null()) r.group = j.at("group").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed metrics report: ") + e.what());
    }
    return r;
}

std::string metrics_csv_header() {
    return "model,split,day,n,accuracy,precision,sensitivity,f1,specificity,auroc,ci_low,ci_high";
}

std::string metrics_csv_row(const std::string& model, const std::string& split, const MetricsReport& r) {
    std::string row = model + "," + split + "," + (r.group ? std::to_string(*r.group) : std::string("all")) + "," +
                      std::to_string(r.n);
    for (double v : {r.metrics.accuracy, r.metrics.precision, r.metrics.sensitivity, r.metrics.f1,
                     r.metrics.specificity, r.auroc, r.ci_low, r.ci_high}) {
        row += "," + format_double(v);
    }
    return row;
}

} // namespace icumort
