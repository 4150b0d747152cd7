#include "icumort/shapley.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "icumort/dataset.hpp"
#include "icumort/error.hpp"
#include "icumort/random.hpp"

namespace icumort {

namespace {

using Mask = std::uint64_t;

double binomial(std::size_t n, std::size_t k) {
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

void check_inputs(const Matrix& background, std::span<const double> instance) {
    if (background.rows() == 0) throw DataError("Shapley values need at least one background row");
    if (background.cols() != instance.size()) throw DataError("instance and background widths differ");
    if (instance.size() > 63) throw ConfigError("Shapley estimation supports at most 63 features");
}

// Mean prediction over the background for each coalition.
std::vector<double> coalition_values(const PredictFn& predict, const Matrix& background,
                                     std::span<const double> instance, std::span<const Mask> masks) {
    const std::size_t b = background.rows();
    const std::size_t d = instance.size();
    std::vector<double> out(masks.size());
    // Chunk so that the scored matrix stays moderate.
    const std::size_t per_chunk = std::max<std::size_t>(1, 65536 / b);
    for (std::size_t start = 0; start < masks.size(); start += per_chunk) {
        const std::size_t stop = std::min(masks.size(), start + per_chunk);
        Matrix z((stop - start) * b, d);
        for (std::size_t m = start; m < stop; ++m) {
            for (std::size_t r = 0; r < b; ++r) {
                auto row = z.row((m - start) * b + r);
                const auto bg = background.row(r);
                for (std::size_t j = 0; j < d; ++j) row[j] = (masks[m] >> j & 1U) ? instance[j] : bg[j];
            }
        }
        const auto p = predict(z);
        if (p.size() != z.rows()) throw DataError("model returned the wrong number of scores");
        for (std::size_t m = start; m < stop; ++m) {
            double s = 0.0;
            for (std::size_t r = 0; r < b; ++r) s += p[(m - start) * b + r];
            out[m] = s / static_cast<double>(b);
        }
    }
    return out;
}

double predict_one(const PredictFn& predict, std::span<const double> instance) {
    Matrix x(1, instance.size(), std::vector<double>(instance.begin(), instance.end()));
    return predict(x).at(0);
}

AttributionReport finish(double base, std::vector<double> phi, double prediction) {
    AttributionReport r;
    r.base_value = base;
    r.prediction = prediction;
    r.additivity_residual = base + std::accumulate(phi.begin(), phi.end(), 0.0) - prediction;
    r.attributions = std::move(phi);
    return r;
}

// Coalition sizes 1..d-1 with their number of sampled/enumerated masks.
std::vector<Mask> choose_coalitions(std::size_t d, std::size_t budget, Rng& rng, std::vector<double>& weights) {
    std::vector<Mask> masks;
    weights.clear();
    const auto kernel_mass = [&](std::size_t s) {
        return static_cast<double>(d - 1) / (static_cast<double>(s) * static_cast<double>(d - s));
    };
    std::vector<std::size_t> remaining;
    for (std::size_t s = 1; s < d; ++s) remaining.push_back(s);
    const bool enumerate_all = static_cast<double>(budget) >= std::ldexp(1.0, static_cast<int>(d)) - 2.0;

    const auto enumerate_size = [&](std::size_t s) {
        // Each coalition of size s carries kernel weight mass(s) / C(d, s).
        const double w = kernel_mass(s) / binomial(d, s);
        std::vector<int> pick(d, 0);
        std::fill(pick.end() - static_cast<std::ptrdiff_t>(s), pick.end(), 1);
        do {
            Mask m = 0;
            for (std::size_t j = 0; j < d; ++j) {
                if (pick[j]) m |= Mask{1} << j;
            }
            masks.push_back(m);
            weights.push_back(w);
        } while (std::next_permutation(pick.begin(), pick.end()));
    };

    if (enumerate_all) {
        for (auto s : remaining) enumerate_size(s);
        return masks;
    }

    // Fully enumerate the sizes whose proportional share covers them,
    // heaviest (smallest and largest) sizes first.
    for (bool changed = true; changed && !remaining.empty();) {
        changed = false;
        double total = 0.0;
        for (auto s : remaining) total += kernel_mass(s);
        std::stable_sort(remaining.begin(), remaining.end(),
                         [&](std::size_t a, std::size_t b) { return kernel_mass(a) > kernel_mass(b); });
        const std::size_t s = remaining.front();
        const double share = static_cast<double>(budget) * kernel_mass(s) / total;
        const double count = binomial(d, s);
        if (share >= count) {
            enumerate_size(s);
            budget -= static_cast<std::size_t>(count);
            remaining.erase(remaining.begin());
            changed = true;
        }
    }
    if (remaining.empty() || budget == 0) return masks;

    // Largest-remainder allocation of what is left.
    std::sort(remaining.begin(), remaining.end());
    double total = 0.0;
    for (auto s : remaining) total += kernel_mass(s);
    std::vector<std::size_t> alloc(remaining.size());
    std::vector<std::pair<double, std::size_t>> frac;
    std::size_t used = 0;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
        const double exact = static_cast<double>(budget) * kernel_mass(remaining[i]) / total;
        alloc[i] = static_cast<std::size_t>(std::floor(exact));
        used += alloc[i];
        frac.emplace_back(-(exact - std::floor(exact)), i);
    }
    std::sort(frac.begin(), frac.end());
    for (std::size_t k = 0; used < budget && k < frac.size(); ++k, ++used) ++alloc[frac[k].second];

    std::vector<std::size_t> idx(d);
    for (std::size_t i = 0; i < remaining.size(); ++i) {
        const std::size_t s = remaining[i];
        const double available = binomial(d, s);
        const auto m_s = static_cast<std::size_t>(std::min(static_cast<double>(alloc[i]), available));
        if (m_s == 0) continue;
        std::set<Mask> drawn;
        while (drawn.size() < m_s) {
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            for (std::size_t k = 0; k < s; ++k) {
                std::uniform_int_distribution<std::size_t> pick(k, d - 1);
                std::swap(idx[k], idx[pick(rng)]);
            }
            Mask m = 0;
            for (std::size_t k = 0; k < s; ++k) m |= Mask{1} << idx[k];
            drawn.insert(m);
        }
        // The sampled masks stand in for the whole size class.
        const double w = kernel_mass(s) / static_cast<double>(m_s);
        for (Mask m : drawn) {
            masks.push_back(m);
            weights.push_back(w);
        }
    }
    return masks;
}

} // namespace

AttributionReport exact_shapley(const PredictFn& predict, const Matrix& background, std::span<const double> instance) {
    check_inputs(background, instance);
    const std::size_t d = instance.size();
    if (d > kMaxExactShapleyFeatures) {
        throw ConfigError("exact Shapley enumeration supports at most " + std::to_string(kMaxExactShapleyFeatures) +
                          " features, got " + std::to_string(d));
    }
    const Mask full = (Mask{1} << d) - 1;
    std::vector<Mask> masks(full + 1);
    std::iota(masks.begin(), masks.end(), Mask{0});
    auto v = coalition_values(predict, background, instance, masks);
    const double prediction = predict_one(predict, instance);
    v[full] = prediction;

    // weight(|S|) = |S|! (d - |S| - 1)! / d! = 1 / (d C(d-1, |S|))
    std::vector<double> weight(d);
    for (std::size_t s = 0; s < d; ++s) weight[s] = 1.0 / (static_cast<double>(d) * binomial(d - 1, s));

    std::vector<double> phi(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const Mask bit = Mask{1} << i;
        for (Mask s = 0; s <= full; ++s) {
            if (s & bit) continue;
            phi[i] += weight[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]);
        }
    }
    return finish(v[0], std::move(phi), prediction);
}

AttributionReport kernel_shap(const PredictFn& predict, const Matrix& background, std::span<const double> instance,
                              std::size_t n_coalitions, std::uint64_t seed) {
    check_inputs(background, instance);
    const std::size_t d = instance.size();
    if (d == 0) throw DataError("no features to explain");
    if (n_coalitions < d + 2) {
        throw ConfigError("KernelSHAP needs at least d + 2 = " + std::to_string(d + 2) + " coalitions");
    }
    const std::vector<Mask> ends{0};
    const double base = coalition_values(predict, background, instance, ends)[0];
    const double prediction = predict_one(predict, instance);
    const double delta = prediction - base;
    if (d == 1) return finish(base, {delta}, prediction);

    Rng rng(seed);
    std::vector<double> w;
    const double all = std::ldexp(1.0, static_cast<int>(d)) - 2.0;
    const std::size_t budget = static_cast<double>(n_coalitions - 2) >= all ? static_cast<std::size_t>(all)
                                                                             : n_coalitions - 2;
    const auto masks = choose_coalitions(d, budget, rng, w);
    const auto v = coalition_values(predict, background, instance, masks);

    // Substitute phi_last = delta - sum(phi_j, j < last) and solve the
    // unconstrained weighted least squares in the remaining d - 1 unknowns.
    const std::size_t k = d - 1;
    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    Eigen::VectorXd atb = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    Eigen::VectorXd row(static_cast<Eigen::Index>(k));
    for (std::size_t m = 0; m < masks.size(); ++m) {
        const double z_last = (masks[m] >> k & 1U) ? 1.0 : 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            row(static_cast<Eigen::Index>(j)) = ((masks[m] >> j & 1U) ? 1.0 : 0.0) - z_last;
        }
        const double target = v[m] - base - z_last * delta;
        ata.noalias() += w[m] * row * row.transpose();
        atb.noalias() += w[m] * target * row;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ata);
    if (lu.rank() < static_cast<Eigen::Index>(k)) {
        throw NumericError("KernelSHAP regression is singular; too few distinct coalitions");
    }
    const Eigen::VectorXd sol = lu.solve(atb);
    std::vector<double> phi(d);
    double partial = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        phi[j] = sol(static_cast<Eigen::Index>(j));
        partial += phi[j];
    }
    phi[k] = delta - partial;
    return finish(base, std::move(phi), prediction);
}

Matrix sample_background(const Matrix& x, std::size_t max_rows, std::uint64_t seed) {
    if (x.rows() <= max_rows) return x;
    Rng rng(seed);
    auto order = permutation(x.rows(), rng);
    order.resize(max_rows);
    std::sort(order.begin(), order.end());
    return x.take_rows(order);
}

ShapSummary shap_summary(const PredictFn& predict, const Matrix& background, const Matrix& sample,
                         std::vector<std::string> feature_names, std::size_t top_k, std::size_t n_coalitions,
                         std::uint64_t seed) {
    if (sample.rows() == 0) throw DataError("SHAP summary needs at least one row");
    const std::size_t d = sample.cols();
    if (feature_names.size() != d) throw DataError("feature name count does not match columns");

    ShapSummary out;
    out.feature_names = std::move(feature_names);
    out.attributions = Matrix(sample.rows(), d);
    std::vector<double> mean_abs(d, 0.0);
    for (std::size_t r = 0; r < sample.rows(); ++r) {
        const auto rep = kernel_shap(predict, background, sample.row(r), n_coalitions, derive_seed(seed, "shap-row", r));
        for (std::size_t j = 0; j < d; ++j) {
            out.attributions(r, j) = rep.attributions[j];
            mean_abs[j] += std::abs(rep.attributions[j]);
        }
        out.base_values.push_back(rep.base_value);
        out.predictions.push_back(rep.prediction);
    }
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mean_abs[a] > mean_abs[b]; });
    order.resize(std::min(top_k, d));
    for (auto j : order) {
        out.ranking.push_back({out.feature_names[j], j, mean_abs[j] / static_cast<double>(sample.rows())});
    }
    return out;
}

nlohmann::json to_json(const ShapSummary& s) {
    nlohmann::json ranking = nlohmann::json::array();
    for (const auto& e : s.ranking) ranking.push_back({{"feature", e.feature}, {"mean_abs_attribution", e.mean_abs}});
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < s.attributions.rows(); ++r) {
        const auto a = s.attributions.row(r);
        rows.push_back({{"base_value", s.base_values[r]},
                        {"prediction", s.predictions[r]},
                        {"attributions", std::vector<double>(a.begin(), a.end())}});
    }
    return {{"features", s.feature_names}, {"ranking", std::move(ranking)}, {"rows", std::move(rows)}};
}

std::string shap_csv(const ShapSummary& s, const Matrix& sample) {
    std::string out = "row_id,feature,value,attribution\n";
    for (std::size_t r = 0; r < s.attributions.rows(); ++r) {
        for (std::size_t j = 0; j < s.feature_names.size(); ++j) {
            out += std::to_string(r) + "," + s.feature_names[j] + "," + format_double(sample(r, j)) + "," +
                   format_double(s.attributions(r, j)) + "\n";
        }
    }
    return out;
}

} // namespace icumort
