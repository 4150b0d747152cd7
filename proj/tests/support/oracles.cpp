#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

namespace oracle {

double pairwise_auroc(std::span<const double> scores, std::span<const int> labels) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

BruteSplit brute_force_split(const icumort::Matrix& x, std::span<const double> g, std::span<const double> h,
                             double lambda, double gamma) {
    BruteSplit best;
    const std::size_t n = x.rows();
    for (std::size_t f = 0; f < x.cols(); ++f) {
        std::vector<double> vals = x.column(f);
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t t = 0; t + 1 < vals.size(); ++t) {
            const double thr = vals[t] + (vals[t + 1] - vals[t]) / 2.0;
            double gl = 0, hl = 0, gr = 0, hr = 0;
            for (std::size_t r = 0; r < n; ++r) {
                if (x(r, f) < thr) {
                    gl += g[r];
                    hl += h[r];
                } else {
                    gr += g[r];
                    hr += h[r];
                }
            }
            const double gain =
                0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - (gl + gr) * (gl + gr) / (hl + hr + lambda)) -
                gamma;
            if (gain > 0 && (!best.found || gain > best.gain)) best = {true, f, thr, gain};
        }
    }
    return best;
}

std::vector<double> normal_equations(const icumort::Matrix& x, std::span<const double> y) {
    const auto n = static_cast<Eigen::Index>(x.rows());
    const auto d = static_cast<Eigen::Index>(x.cols());
    Eigen::MatrixXd a(n, d + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = x(i, j);
        a(i, d) = 1.0;
        b(i) = y[i];
    }
    const Eigen::VectorXd w = (a.transpose() * a).ldlt().solve(a.transpose() * b);
    return {w.data(), w.data() + w.size()};
}

std::vector<std::size_t> brute_knn(const icumort::Matrix& x, std::size_t i, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        if (r == i) continue;
        double s = 0;
        for (std::size_t c = 0; c < x.cols(); ++c) s += (x(r, c) - x(i, c)) * (x(r, c) - x(i, c));
        d.emplace_back(s, r);
    }
    std::sort(d.begin(), d.end());
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < std::min(k, d.size()); ++j) out.push_back(d[j].second);
    return out;
}

std::vector<double> permutation_shapley(std::size_t d, const std::function<double(std::uint64_t)>& value) {
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> phi(d, 0.0);
    double count = 0;
    do {
        std::uint64_t mask = 0;
        double prev = value(0);
        for (std::size_t j : order) {
            mask |= std::uint64_t{1} << j;
            const double cur = value(mask);
            phi[j] += cur - prev;
            prev = cur;
        }
        count += 1;
    } while (std::next_permutation(order.begin(), order.end()));
    for (auto& p : phi) p /= count;
    return phi;
}

double coalition_value(const std::function<std::vector<double>(const icumort::Matrix&)>& f,
                       const icumort::Matrix& background, std::span<const double> instance, std::uint64_t mask) {
    icumort::Matrix hybrid = background;
    for (std::size_t r = 0; r < hybrid.rows(); ++r) {
        for (std::size_t c = 0; c < hybrid.cols(); ++c) {
            if (mask >> c & 1U) hybrid(r, c) = instance[c];
        }
    }
    const auto p = f(hybrid);
    return std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
}

double relative_error(double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

icumort::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double sd) {
    std::normal_distribution<double> z(0.0, sd);
    icumort::Matrix m(rows, cols);
    for (auto& v : m.data()) v = z(rng);
    return m;
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("icumort_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace oracle
