#include "icumort/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "icumort/error.hpp"
#include "icumort/random.hpp"

namespace icumort {

DropResult drop_high_nan_columns(const Dataset& ds, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("NaN threshold must lie in [0, 1]");
    const double limit = threshold * static_cast<double>(ds.n_rows());
    std::vector<std::string> keep;
    std::vector<std::string> dropped;
    for (const auto& c : ds.columns()) {
        if (static_cast<double>(c.missing_count) <= limit) keep.push_back(c.name);
        else dropped.push_back(c.name);
    }
    return {select_columns(ds, keep), std::move(dropped)};
}

double median_of_observed(std::span<const double> values) {
    std::vector<double> v;
    v.reserve(values.size());
    for (double x : values) {
        if (!is_missing(x)) v.push_back(x);
    }
    if (v.empty()) return kMissing;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    if (v.size() % 2 == 1) return v[m];
    return 0.5 * (v[m - 1] + v[m]);
}

ImputerParams fit_median(const Dataset& ds) {
    ImputerParams p;
    for (std::size_t c = 0; c < ds.n_cols(); ++c) {
        const auto& meta = ds.column(c);
        if (meta.kind == ColumnKind::identifier) continue;
        const auto col = ds.values().column(c);
        double med = median_of_observed(col);
        if (is_missing(med)) {
            throw DataError("column '" + meta.name + "' has no observed values to impute from");
        }
        p.names.push_back(meta.name);
        p.medians.push_back(med);
    }
    return p;
}

Dataset apply_median(const Dataset& ds, const ImputerParams& params) {
    Matrix values = ds.values();
    for (std::size_t c = 0; c < ds.n_cols(); ++c) {
        if (ds.column(c).kind == ColumnKind::identifier) continue;
        const auto& name = ds.column(c).name;
        auto it = std::find(params.names.begin(), params.names.end(), name);
        if (it == params.names.end()) throw DataError("no fitted median for column '" + name + "'");
        const double med = params.medians[static_cast<std::size_t>(it - params.names.begin())];
        for (std::size_t r = 0; r < values.rows(); ++r) {
            if (is_missing(values(r, c))) values(r, c) = med;
        }
    }
    return Dataset(ds.columns(), std::move(values), ds.maybe_labels(), ds.maybe_groups(), ds.label_name(),
                   ds.group_name());
}

Dataset impute_median(const Dataset& ds) { return apply_median(ds, fit_median(ds)); }

ScalerParams fit_scale_min_max(const Dataset& ds) {
    if (ds.has_missing()) throw DataError("min-max scaling requires imputed data");
    ScalerParams p;
    for (std::size_t c = 0; c < ds.n_cols(); ++c) {
        if (ds.column(c).kind == ColumnKind::identifier) continue;
        const auto& name = ds.column(c).name;
        ColumnRange range{name, 0.0, 0.0};
        if (ds.n_rows() > 0) {
            range.min = range.max = ds.at(0, c);
            for (std::size_t r = 1; r < ds.n_rows(); ++r) {
                range.min = std::min(range.min, ds.at(r, c));
                range.max = std::max(range.max, ds.at(r, c));
            }
        }
        if (range.min == range.max) p.constant_columns.push_back(name);
        p.columns.push_back(std::move(range));
    }
    return p;
}

Dataset apply_scale_min_max(const Dataset& ds, const ScalerParams& params) {
    if (ds.has_missing()) throw DataError("min-max scaling requires imputed data");
    Matrix values = ds.values();
    for (std::size_t c = 0; c < ds.n_cols(); ++c) {
        if (ds.column(c).kind == ColumnKind::identifier) continue;
        const auto& name = ds.column(c).name;
        auto it = std::find_if(params.columns.begin(), params.columns.end(),
                               [&](const ColumnRange& r) { return r.name == name; });
        if (it == params.columns.end()) throw DataError("column '" + name + "' was not fitted by the scaler");
        const double lo = it->min;
        const double span = it->max - it->min;
        for (std::size_t r = 0; r < values.rows(); ++r) {
            values(r, c) = span > 0.0 ? 2.0 * (values(r, c) - lo) / span - 1.0 : 0.0;
        }
    }
    return Dataset(ds.columns(), std::move(values), ds.maybe_labels(), ds.maybe_groups(), ds.label_name(),
                   ds.group_name());
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& ratios) {
    double sum = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0)) throw ConfigError("split ratios must be positive");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
    if (n < 3) throw DataError("split needs at least 3 rows");
    // The small epsilon keeps products such as 100 * 0.15 from flooring to 14.
    const auto part = [n](double r) {
        return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9));
    };
    const std::size_t val = part(ratios[1]);
    const std::size_t test = part(ratios[2]);
    if (val == 0 || test == 0 || val + test >= n) {
        throw DataError("split ratios leave an empty part for n=" + std::to_string(n));
    }
    return {n - val - test, val, test};
}

SplitResult split(const Dataset& ds, const SplitSpec& spec) {
    const std::size_t n = ds.n_rows();
    const auto sizes = split_sizes(n, spec.ratios);
    Rng rng(spec.seed);
    std::array<std::vector<std::size_t>, 3> parts;

    if (!spec.stratified) {
        const auto perm = permutation(n, rng);
        parts[1].assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(sizes[1]));
        parts[2].assign(perm.begin() + static_cast<std::ptrdiff_t>(sizes[1]),
                        perm.begin() + static_cast<std::ptrdiff_t>(sizes[1] + sizes[2]));
        parts[0].assign(perm.begin() + static_cast<std::ptrdiff_t>(sizes[1] + sizes[2]), perm.end());
    } else {
        const auto labels = ds.labels();
        for (int cls = 0; cls <= 1; ++cls) {
            std::vector<std::size_t> members;
            for (std::size_t r = 0; r < n; ++r) {
                if (labels[r] == cls) members.push_back(r);
            }
            const auto perm = permutation(members.size(), rng);
            const auto m = static_cast<double>(members.size());
            const auto nv = static_cast<std::size_t>(std::floor(m * spec.ratios[1] + 1e-9));
            const auto nt = static_cast<std::size_t>(std::floor(m * spec.ratios[2] + 1e-9));
            for (std::size_t i = 0; i < perm.size(); ++i) {
                const std::size_t r = members[perm[i]];
                if (i < nv) parts[1].push_back(r);
                else if (i < nv + nt) parts[2].push_back(r);
                else parts[0].push_back(r);
            }
        }
        if (parts[1].empty() || parts[2].empty() || parts[0].empty()) {
            throw DataError("stratified split leaves an empty part");
        }
    }
    for (auto& p : parts) std::sort(p.begin(), p.end());
    return {ds.take_rows(parts[0]), ds.take_rows(parts[1]), ds.take_rows(parts[2]), std::move(parts)};
}

nlohmann::json to_json(const ImputerParams& p) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < p.names.size(); ++i) j[p.names[i]] = p.medians[i];
    return {{"kind", "median_imputer"}, {"medians", std::move(j)}, {"order", p.names}};
}

ImputerParams imputer_from_json(const nlohmann::json& j) {
    ImputerParams p;
    for (const auto& name : j.at("order")) {
        p.names.push_back(name.get<std::string>());
        p.medians.push_back(j.at("medians").at(p.names.back()).get<double>());
    }
    return p;
}

nlohmann::json to_json(const ScalerParams& p) {
    nlohmann::json cols = nlohmann::json::object();
    nlohmann::json order = nlohmann::json::array();
    for (const auto& c : p.columns) {
        cols[c.name] = {{"min", c.min}, {"max", c.max}};
        order.push_back(c.name);
    }
    return {{"kind", "min_max_scaler"},
            {"columns", std::move(cols)},
            {"order", std::move(order)},
            {"constant_columns", p.constant_columns}};
}

ScalerParams scaler_from_json(const nlohmann::json& j) {
    ScalerParams p;
    for (const auto& name : j.at("order")) {
        const auto& c = j.at("columns").at(name.get<std::string>());
        ColumnRange r{name.get<std::string>(), c.at("min").get<double>(), c.at("max").get<double>()};
        if (r.min > r.max) throw DataError("scaler column '" + r.name + "' has min > max");
        p.columns.push_back(std::move(r));
    }
    if (j.contains("constant_columns")) p.constant_columns = j.at("constant_columns").get<std::vector<std::string>>();
    return p;
}

} // namespace icumort
