#include "icumort/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "icumort/error.hpp"

namespace icumort {

double Tree::predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

bool Tree::well_formed() const {
    if (nodes.empty()) return false;
    std::vector<int> parents(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.is_leaf()) {
            if (n.left != -1 || n.right != -1) return false;
            continue;
        }
        for (int child : {n.left, n.right}) {
            if (child <= static_cast<int>(i) || child >= static_cast<int>(nodes.size())) return false;
            ++parents[static_cast<std::size_t>(child)];
        }
    }
    if (parents[0] != 0) return false;
    return std::all_of(parents.begin() + 1, parents.end(), [](int p) { return p == 1; });
}

std::size_t Tree::depth() const {
    std::function<std::size_t(std::size_t)> rec = [&](std::size_t i) -> std::size_t {
        const auto& n = nodes[i];
        if (n.is_leaf()) return 0;
        return 1 + std::max(rec(static_cast<std::size_t>(n.left)), rec(static_cast<std::size_t>(n.right)));
    };
    return nodes.empty() ? 0 : rec(0);
}

nlohmann::json to_json(const Tree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.gain});
    return nodes;
}

Tree tree_from_json(const nlohmann::json& j) {
    Tree t;
    for (const auto& n : j) {
        if (!n.is_array() || n.size() != 6) throw DataError("malformed tree node");
        t.nodes.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(), n[4].get<double>(),
                           n[5].get<double>()});
    }
    if (!t.well_formed()) throw DataError("tree structure is not a well-formed binary tree");
    return t;
}

double split_gain(double grad_left, double hess_left, double grad_right, double hess_right, double reg_lambda,
                  double gamma) noexcept {
    const double g = grad_left + grad_right;
    const double h = hess_left + hess_right;
    return 0.5 * (grad_left * grad_left / (hess_left + reg_lambda) + grad_right * grad_right / (hess_right + reg_lambda) -
                  g * g / (h + reg_lambda)) -
           gamma;
}

double leaf_weight(double grad_sum, double hess_sum, double reg_lambda) noexcept {
    const double denom = hess_sum + reg_lambda;
    return denom > 0.0 ? -grad_sum / denom : 0.0;
}

double midpoint_threshold(double lo, double hi) noexcept {
    const double m = 0.5 * lo + 0.5 * hi;
    return m > lo ? m : hi;
}

namespace {

using SortedLists = std::vector<std::vector<std::size_t>>;

SortedLists presort(const Matrix& x, std::span<const std::size_t> rows) {
    SortedLists lists(x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
        auto& l = lists[f];
        l.assign(rows.begin(), rows.end());
        std::stable_sort(l.begin(), l.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
    }
    return lists;
}

std::optional<SplitCandidate> best_split_presorted(const Matrix& x, std::span<const double> grad,
                                                   std::span<const double> hess, const SortedLists& lists,
                                                   double grad_sum, double hess_sum, double reg_lambda, double gamma) {
    std::optional<SplitCandidate> best;
    for (std::size_t f = 0; f < lists.size(); ++f) {
        const auto& l = lists[f];
        double gl = 0.0;
        double hl = 0.0;
        for (std::size_t k = 0; k + 1 < l.size(); ++k) {
            gl += grad[l[k]];
            hl += hess[l[k]];
            const double v = x(l[k], f);
            const double next = x(l[k + 1], f);
            if (!(v < next)) continue;
            const double gain = split_gain(gl, hl, grad_sum - gl, hess_sum - hl, reg_lambda, gamma);
            if (gain > 0.0 && (!best || gain > best->gain)) best = SplitCandidate{f, midpoint_threshold(v, next), gain};
        }
    }
    return best;
}

class RegressionGrower {
public:
    RegressionGrower(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                     const RegressionTreeParams& params)
        : x_(x), grad_(grad), hess_(hess), params_(params), goes_left_(x.rows(), 0) {}

    int grow(const SortedLists& lists, std::size_t depth) {
        const auto& rows = lists.front();
        double g = 0.0;
        double h = 0.0;
        for (auto r : rows) {
            g += grad_[r];
            h += hess_[r];
        }
        const int index = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back(TreeNode{});
        tree_.nodes.back().value = params_.shrinkage * leaf_weight(g, h, params_.reg_lambda);
        if (depth >= params_.max_depth || rows.size() < 2) return index;

        auto split = best_split_presorted(x_, grad_, hess_, lists, g, h, params_.reg_lambda, params_.gamma);
        if (!split) return index;

        for (auto r : rows) goes_left_[r] = x_(r, split->feature) < split->threshold ? 1 : 0;
        SortedLists left(lists.size());
        SortedLists right(lists.size());
        for (std::size_t f = 0; f < lists.size(); ++f) {
            for (auto r : lists[f]) (goes_left_[r] ? left[f] : right[f]).push_back(r);
        }
        const int l = grow(left, depth + 1);
        const int rgt = grow(right, depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(index)];
        node.feature = static_cast<int>(split->feature);
        node.threshold = split->threshold;
        node.gain = split->gain;
        node.left = l;
        node.right = rgt;
        node.value = 0.0;
        return index;
    }

    Tree take() { return std::move(tree_); }

private:
    const Matrix& x_;
    std::span<const double> grad_;
    std::span<const double> hess_;
    RegressionTreeParams params_;
    std::vector<char> goes_left_;
    Tree tree_;
};

} // namespace

std::optional<SplitCandidate> find_best_split(const Matrix& x, std::span<const double> grad,
                                              std::span<const double> hess, std::span<const std::size_t> rows,
                                              double reg_lambda, double gamma) {
    double g = 0.0;
    double h = 0.0;
    for (auto r : rows) {
        g += grad[r];
        h += hess[r];
    }
    return best_split_presorted(x, grad, hess, presort(x, rows), g, h, reg_lambda, gamma);
}

Tree grow_regression_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                          std::span<const std::size_t> rows, const RegressionTreeParams& params) {
    if (grad.size() != x.rows() || hess.size() != x.rows()) throw DataError("gradient length does not match rows");
    if (x.cols() == 0) {
        double g = 0.0;
        double h = 0.0;
        for (auto r : rows) {
            g += grad[r];
            h += hess[r];
        }
        Tree leaf;
        leaf.nodes.push_back(TreeNode{});
        leaf.nodes.back().value = params.shrinkage * leaf_weight(g, h, params.reg_lambda);
        return leaf;
    }
    RegressionGrower grower(x, grad, hess, params);
    grower.grow(presort(x, rows), 0);
    return grower.take();
}

// ---------------------------------------------------------------------------

namespace {

class ClassificationGrower {
public:
    ClassificationGrower(const Matrix& x, std::span<const int> y, const ClassificationTreeParams& params, Rng& rng)
        : x_(x), y_(y), params_(params), rng_(rng) {}

    int grow(std::vector<std::size_t> rows, std::size_t depth) {
        std::size_t pos = 0;
        for (auto r : rows) pos += static_cast<std::size_t>(y_[r]);
        const std::size_t n = rows.size();
        const int index = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back(TreeNode{});
        tree_.nodes.back().value = 2 * pos >= n ? 1.0 : 0.0;

        const bool pure = pos == 0 || pos == n;
        const bool depth_capped = params_.max_depth != 0 && depth >= params_.max_depth;
        if (pure || depth_capped || n < std::max<std::size_t>(params_.min_samples_split, 2)) return index;

        const std::size_t d = x_.cols();
        const std::size_t wanted = params_.max_features == 0 ? d : std::min(params_.max_features, d);
        std::vector<std::size_t> order(d);
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (wanted < d) order = permutation(d, rng_);

        // Children maximize sum over sides of (pos^2 + neg^2) / n_side, which
        // is the weighted Gini decrease up to a constant.
        const auto side_score = [](double p, double m) { return (p * p + (m - p) * (m - p)) / m; };
        const double parent = side_score(static_cast<double>(pos), static_cast<double>(n));
        double best_score = parent + 1e-12;
        std::optional<std::pair<std::size_t, double>> best;

        std::vector<std::size_t> sorted = rows;
        std::size_t examined = 0;
        for (std::size_t f : order) {
            if (examined >= wanted) break;
            std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
            if (!(x_(sorted.front(), f) < x_(sorted.back(), f))) continue;
            ++examined;
            double pl = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                pl += y_[sorted[k]];
                const double v = x_(sorted[k], f);
                const double next = x_(sorted[k + 1], f);
                if (!(v < next)) continue;
                const double nl = static_cast<double>(k + 1);
                const double score = side_score(pl, nl) + side_score(static_cast<double>(pos) - pl, static_cast<double>(n) - nl);
                if (score > best_score) {
                    best_score = score;
                    best = std::make_pair(f, midpoint_threshold(v, next));
                }
            }
        }
        if (!best) return index;

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (auto r : rows) (x_(r, best->first) < best->second ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const int l = grow(std::move(left), depth + 1);
        const int rgt = grow(std::move(right), depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(index)];
        node.feature = static_cast<int>(best->first);
        node.threshold = best->second;
        node.gain = (best_score - parent) / static_cast<double>(n);
        node.left = l;
        node.right = rgt;
        node.value = 0.0;
        return index;
    }

    Tree take() { return std::move(tree_); }

private:
    const Matrix& x_;
    std::span<const int> y_;
    ClassificationTreeParams params_;
    Rng& rng_;
    Tree tree_;
};

} // namespace

Tree grow_classification_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                              const ClassificationTreeParams& params, Rng& rng) {
    if (y.size() != x.rows()) throw DataError("label length does not match rows");
    if (rows.empty()) throw DataError("cannot grow a tree on zero rows");
    ClassificationGrower grower(x, y, params, rng);
    grower.grow(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
    return grower.take();
}

} // namespace icumort
