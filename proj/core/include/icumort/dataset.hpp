#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "icumort/matrix.hpp"

namespace icumort {

/// Cell value used for a missing observation.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return std::isnan(v); }

enum class ColumnKind { numeric, encoded_categorical, identifier };

std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view s);

struct ColumnMeta {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::size_t missing_count = 0;

    friend bool operator==(const ColumnMeta&, const ColumnMeta&) = default;
};

/// Tabular cohort: n_rows x n_cols values with NaN as the missing marker,
/// optional binary labels (1 = death) and an optional day index per row.
///
/// Immutable after construction; every transformation returns a new Dataset.
/// `missing_count` of each column is recomputed from the values on
/// construction, so it cannot drift from the data.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<ColumnMeta> columns, Matrix values,
            std::optional<std::vector<int>> labels = std::nullopt,
            std::optional<std::vector<int>> groups = std::nullopt,
            std::string label_name = "label", std::string group_name = "day");

    [[nodiscard]] std::size_t n_rows() const noexcept { return values_.rows(); }
    [[nodiscard]] std::size_t n_cols() const noexcept { return columns_.size(); }

    const std::vector<ColumnMeta>& columns() const noexcept { return columns_; }
    const ColumnMeta& column(std::size_t c) const { return columns_.at(c); }
    std::vector<std::string> column_names() const;
    /// Names of the columns whose kind is not `identifier`.
    std::vector<std::string> feature_names() const;
    std::optional<std::size_t> find_column(std::string_view name) const;
    std::size_t column_index(std::string_view name) const;

    const Matrix& values() const noexcept { return values_; }
    double at(std::size_t r, std::size_t c) const { return values_(r, c); }
    std::span<const double> row(std::size_t r) const { return values_.row(r); }

    bool has_labels() const noexcept { return labels_.has_value(); }
    bool has_groups() const noexcept { return groups_.has_value(); }
    /// Throws DataError when the dataset is unlabeled.
    std::span<const int> labels() const;
    std::span<const int> groups() const;
    const std::optional<std::vector<int>>& maybe_labels() const noexcept { return labels_; }
    const std::optional<std::vector<int>>& maybe_groups() const noexcept { return groups_; }

    const std::string& label_name() const noexcept { return label_name_; }
    const std::string& group_name() const noexcept { return group_name_; }

    bool has_missing() const noexcept;

    /// Subset of rows in the given order, labels and groups carried along.
    Dataset take_rows(std::span<const std::size_t> rows) const;
    /// Same data with different column kinds.
    Dataset with_kinds(std::span<const ColumnKind> kinds) const;
    /// Same columns, rows of `other` appended below. Schemas must match.
    Dataset concat_rows(const Dataset& other) const;

    friend bool operator==(const Dataset& a, const Dataset& b);

private:
    std::vector<ColumnMeta> columns_;
    Matrix values_;
    std::optional<std::vector<int>> labels_;
    std::optional<std::vector<int>> groups_;
    std::string label_name_ = "label";
    std::string group_name_ = "day";
};

struct CsvReadOptions {
    std::string label_column = "label";
    std::optional<std::string> group_column;
    /// Columns forced to the identifier kind in addition to the `*_id` heuristic.
    std::vector<std::string> identifier_columns;
};

/// Reads a comma-separated file with a mandatory header. Empty or
/// non-numeric cells become missing. A label column that is entirely empty
/// yields an unlabeled dataset.
Dataset load_csv(const std::filesystem::path& path, const CsvReadOptions& options = {});
Dataset parse_csv(std::string_view text, const CsvReadOptions& options = {});

/// Writes features, then the label column, then the group column. Missing
/// cells are written empty; doubles use shortest round-trip formatting.
void write_csv(const Dataset& ds, const std::filesystem::path& path);
std::string format_csv(const Dataset& ds);

/// Column metadata sidecar: names, kinds, missing counts.
nlohmann::json metadata_json(const Dataset& ds);

double missing_fraction(const Dataset& ds, std::size_t col);

/// Column subset in the requested order. Throws DataError on unknown names.
Dataset select_columns(const Dataset& ds, std::span<const std::string> names);

/// Non-identifier columns as a dense matrix.
Matrix feature_matrix(const Dataset& ds);

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

} // namespace icumort
