#include "icumort/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "icumort/error.hpp"

namespace icumort {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DataError("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                        std::to_string(rows_ * cols_));
    }
}

std::vector<double> Matrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = data_[r * cols_ + c];
    return out;
}

Matrix Matrix::take_rows(std::span<const std::size_t> rows) const {
    Matrix out(rows.size(), cols_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Matrix Matrix::take_cols(std::span<const std::size_t> cols) const {
    Matrix out(rows_, cols.size());
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t j = 0; j < cols.size(); ++j) out(r, j) = (*this)(r, cols[j]);
    }
    return out;
}

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw DataError("appended row has wrong width");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

bool operator==(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
    for (std::size_t i = 0; i < a.data_.size(); ++i) {
        const double x = a.data_[i];
        const double y = b.data_[i];
        if (std::isnan(x) || std::isnan(y)) {
            if (std::isnan(x) != std::isnan(y)) return false;
        } else if (std::memcmp(&x, &y, sizeof(double)) != 0) {
            return false;
        }
    }
    return true;
}

std::string_view to_string(ColumnKind kind) {
    switch (kind) {
    case ColumnKind::numeric:
        return "numeric";
    case ColumnKind::encoded_categorical:
        return "encoded_categorical";
    case ColumnKind::identifier:
        return "identifier";
    }
    return "numeric";
}

ColumnKind column_kind_from_string(std::string_view s) {
    if (s == "numeric") return ColumnKind::numeric;
    if (s == "encoded_categorical") return ColumnKind::encoded_categorical;
    if (s == "identifier") return ColumnKind::identifier;
    throw DataError("unknown column kind '" + std::string(s) + "'");
}

Dataset::Dataset(std::vector<ColumnMeta> columns, Matrix values, std::optional<std::vector<int>> labels,
                 std::optional<std::vector<int>> groups, std::string label_name, std::string group_name)
    : columns_(std::move(columns)),
      values_(std::move(values)),
      labels_(std::move(labels)),
      groups_(std::move(groups)),
      label_name_(std::move(label_name)),
      group_name_(std::move(group_name)) {
    if (values_.cols() != columns_.size() && !(values_.rows() == 0 && values_.empty())) {
        throw DataError("value matrix width " + std::to_string(values_.cols()) + " does not match " +
                        std::to_string(columns_.size()) + " columns");
    }
    if (values_.empty() && values_.cols() != columns_.size()) {
        values_ = Matrix(values_.rows(), columns_.size());
    }
    std::unordered_set<std::string> seen;
    for (const auto& c : columns_) {
        if (!seen.insert(c.name).second) throw DataError("duplicate column name '" + c.name + "'");
    }
    const std::size_t n = values_.rows();
    if (labels_) {
        if (labels_->size() != n) throw DataError("label vector length does not match row count");
        for (int y : *labels_) {
            if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
        }
    }
    if (groups_) {
        if (groups_->size() != n) throw DataError("group vector length does not match row count");
        for (int g : *groups_) {
            if (g < 0) throw DataError("group indices must be non-negative");
        }
    }
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        std::size_t missing = 0;
        for (std::size_t r = 0; r < n; ++r) missing += is_missing(values_(r, c)) ? 1 : 0;
        columns_[c].missing_count = missing;
    }
}

std::vector<std::string> Dataset::column_names() const {
    std::vector<std::string> names;
    names.reserve(columns_.size());
    for (const auto& c : columns_) names.push_back(c.name);
    return names;
}

std::vector<std::string> Dataset::feature_names() const {
    std::vector<std::string> names;
    for (const auto& c : columns_) {
        if (c.kind != ColumnKind::identifier) names.push_back(c.name);
    }
    return names;
}

std::optional<std::size_t> Dataset::find_column(std::string_view name) const {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        if (columns_[c].name == name) return c;
    }
    return std::nullopt;
}

std::size_t Dataset::column_index(std::string_view name) const {
    if (auto c = find_column(name)) return *c;
    throw DataError("unknown column '" + std::string(name) + "'");
}

std::span<const int> Dataset::labels() const {
    if (!labels_) throw DataError("dataset has no labels");
    return *labels_;
}

std::span<const int> Dataset::groups() const {
    if (!groups_) throw DataError("dataset has no group column");
    return *groups_;
}

bool Dataset::has_missing() const noexcept {
    return std::any_of(columns_.begin(), columns_.end(),
                       [](const ColumnMeta& c) { return c.missing_count > 0; });
}

Dataset Dataset::take_rows(std::span<const std::size_t> rows) const {
    std::optional<std::vector<int>> labels;
    std::optional<std::vector<int>> groups;
    if (labels_) {
        labels.emplace();
        labels->reserve(rows.size());
        for (auto r : rows) labels->push_back((*labels_)[r]);
    }
    if (groups_) {
        groups.emplace();
        groups->reserve(rows.size());
        for (auto r : rows) groups->push_back((*groups_)[r]);
    }
    return Dataset(columns_, values_.take_rows(rows), std::move(labels), std::move(groups), label_name_,
                   group_name_);
}

Dataset Dataset::with_kinds(std::span<const ColumnKind> kinds) const {
    if (kinds.size() != columns_.size()) throw DataError("kind list length does not match columns");
    auto cols = columns_;
    for (std::size_t c = 0; c < cols.size(); ++c) cols[c].kind = kinds[c];
    return Dataset(std::move(cols), values_, labels_, groups_, label_name_, group_name_);
}

Dataset Dataset::concat_rows(const Dataset& other) const {
    if (other.column_names() != column_names()) throw DataError("cannot concatenate datasets with different columns");
    if (other.has_labels() != has_labels() || other.has_groups() != has_groups()) {
        throw DataError("cannot concatenate datasets with different label/group presence");
    }
    std::vector<double> data(values_.values());
    data.insert(data.end(), other.values_.values().begin(), other.values_.values().end());
    std::optional<std::vector<int>> labels;
    std::optional<std::vector<int>> groups;
    if (labels_) {
        labels = *labels_;
        labels->insert(labels->end(), other.labels_->begin(), other.labels_->end());
    }
    if (groups_) {
        groups = *groups_;
        groups->insert(groups->end(), other.groups_->begin(), other.groups_->end());
    }
    return Dataset(columns_, Matrix(n_rows() + other.n_rows(), n_cols(), std::move(data)), std::move(labels),
                   std::move(groups), label_name_, group_name_);
}

bool operator==(const Dataset& a, const Dataset& b) {
    return a.columns_ == b.columns_ && a.values_ == b.values_ && a.labels_ == b.labels_ &&
           a.groups_ == b.groups_ && a.label_name_ == b.label_name_ && a.group_name_ == b.group_name_;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (quoted) throw DataError("unterminated quote on line " + std::to_string(line_no));
    fields.push_back(std::move(cur));
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_cell(std::string_view s) {
    s = trim(s);
    if (s.empty()) return kMissing;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return kMissing;
    return v;
}

bool looks_like_identifier(std::string_view name) {
    if (name == "id") return true;
    return name.size() > 3 && name.substr(name.size() - 3) == "_id";
}

std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

} // namespace

std::string format_double(double v) {
    if (is_missing(v)) return {};
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

Dataset parse_csv(std::string_view text, const CsvReadOptions& options) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw DataError("CSV has no header row");

    // Strip a UTF-8 byte-order mark.
    std::string_view header_line = lines.front();
    if (header_line.size() >= 3 && header_line.substr(0, 3) == "\xEF\xBB\xBF") header_line.remove_prefix(3);
    auto header = split_csv_line(header_line, 1);
    for (auto& h : header) h = std::string(trim(h));

    std::unordered_set<std::string> seen;
    for (const auto& h : header) {
        if (!seen.insert(h).second) throw DataError("duplicate column name '" + h + "' in CSV header");
    }

    std::optional<std::size_t> label_idx;
    std::optional<std::size_t> group_idx;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == options.label_column) label_idx = i;
        if (options.group_column && header[i] == *options.group_column) group_idx = i;
    }
    if (!label_idx) throw DataError("label column '" + options.label_column + "' not found in CSV header");
    if (options.group_column && !group_idx) {
        throw DataError("group column '" + *options.group_column + "' not found in CSV header");
    }

    std::vector<std::size_t> feature_idx;
    std::vector<ColumnMeta> columns;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i == *label_idx || (group_idx && i == *group_idx)) continue;
        feature_idx.push_back(i);
        ColumnMeta meta;
        meta.name = header[i];
        const bool forced = std::find(options.identifier_columns.begin(), options.identifier_columns.end(),
                                      header[i]) != options.identifier_columns.end();
        meta.kind = (forced || looks_like_identifier(header[i])) ? ColumnKind::identifier : ColumnKind::numeric;
        columns.push_back(std::move(meta));
    }

    const std::size_t n = lines.size() - 1;
    std::vector<double> values;
    values.reserve(n * feature_idx.size());
    std::vector<int> labels;
    std::vector<int> groups;
    std::size_t empty_labels = 0;
    for (std::size_t r = 0; r < n; ++r) {
        auto fields = split_csv_line(lines[r + 1], r + 2);
        if (fields.size() != header.size()) {
            throw DataError("line " + std::to_string(r + 2) + " has " + std::to_string(fields.size()) +
                            " fields, header has " + std::to_string(header.size()));
        }
        for (auto i : feature_idx) values.push_back(parse_cell(fields[i]));

        auto lab = trim(fields[*label_idx]);
        if (lab.empty()) {
            ++empty_labels;
            labels.push_back(0);
        } else {
            double v = parse_cell(lab);
            if (!(v == 0.0 || v == 1.0)) {
                throw DataError("label value '" + std::string(lab) + "' on line " + std::to_string(r + 2) +
                                " is not 0 or 1");
            }
            labels.push_back(static_cast<int>(v));
        }
        if (group_idx) {
            auto g = trim(fields[*group_idx]);
            double v = parse_cell(g);
            if (is_missing(v) || v < 0 || v != std::floor(v)) {
                throw DataError("group value '" + std::string(g) + "' on line " + std::to_string(r + 2) +
                                " is not a non-negative integer");
            }
            groups.push_back(static_cast<int>(v));
        }
    }
    if (empty_labels > 0 && empty_labels != n) {
        throw DataError("label column has " + std::to_string(empty_labels) + " empty cells out of " +
                        std::to_string(n));
    }

    std::optional<std::vector<int>> maybe_labels;
    if (empty_labels == 0) maybe_labels = std::move(labels);
    std::optional<std::vector<int>> maybe_groups;
    if (group_idx) maybe_groups = std::move(groups);

    // Small-cardinality integer columns are tagged as encoded categoricals.
    Matrix m(n, feature_idx.size(), std::move(values));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c].kind == ColumnKind::identifier || n == 0) continue;
        std::vector<double> distinct;
        bool integral = true;
        for (std::size_t r = 0; r < n && integral; ++r) {
            double v = m(r, c);
            if (is_missing(v)) continue;
            if (v != std::floor(v)) integral = false;
            else if (std::find(distinct.begin(), distinct.end(), v) == distinct.end()) distinct.push_back(v);
            if (distinct.size() > 10) integral = false;
        }
        if (integral && !distinct.empty() && distinct.size() <= 10) columns[c].kind = ColumnKind::encoded_categorical;
    }

    return Dataset(std::move(columns), std::move(m), std::move(maybe_labels), std::move(maybe_groups),
                   options.label_column, options.group_column.value_or("day"));
}

Dataset load_csv(const std::filesystem::path& path, const CsvReadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open CSV file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), options);
}

std::string format_csv(const Dataset& ds) {
    std::string out;
    bool first = true;
    for (const auto& c : ds.columns()) {
        if (!first) out.push_back(',');
        out += quote_field(c.name);
        first = false;
    }
    if (ds.has_labels()) {
        if (!first) out.push_back(',');
        out += quote_field(ds.label_name());
        first = false;
    }
    if (ds.has_groups()) {
        if (!first) out.push_back(',');
        out += quote_field(ds.group_name());
    }
    out.push_back('\n');
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        first = true;
        for (std::size_t c = 0; c < ds.n_cols(); ++c) {
            if (!first) out.push_back(',');
            out += format_double(ds.at(r, c));
            first = false;
        }
        if (ds.has_labels()) {
            if (!first) out.push_back(',');
            out += std::to_string(ds.labels()[r]);
            first = false;
        }
        if (ds.has_groups()) {
            if (!first) out.push_back(',');
            out += std::to_string(ds.groups()[r]);
        }
        out.push_back('\n');
    }
    return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write CSV file '" + path.string() + "'");
    out << format_csv(ds);
}

nlohmann::json metadata_json(const Dataset& ds) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : ds.columns()) {
        cols.push_back({{"name", c.name}, {"kind", std::string(to_string(c.kind))}, {"missing_count", c.missing_count}});
    }
    nlohmann::json j{{"n_rows", ds.n_rows()}, {"columns", std::move(cols)}};
    j["label"] = ds.has_labels() ? nlohmann::json(ds.label_name()) : nlohmann::json(nullptr);
    j["group"] = ds.has_groups() ? nlohmann::json(ds.group_name()) : nlohmann::json(nullptr);
    return j;
}

double missing_fraction(const Dataset& ds, std::size_t col) {
    if (col >= ds.n_cols()) throw DataError("column index " + std::to_string(col) + " out of range");
    if (ds.n_rows() == 0) return 0.0;
    return static_cast<double>(ds.column(col).missing_count) / static_cast<double>(ds.n_rows());
}

Dataset select_columns(const Dataset& ds, std::span<const std::string> names) {
    std::vector<std::size_t> idx;
    idx.reserve(names.size());
    std::vector<ColumnMeta> cols;
    for (const auto& name : names) {
        auto c = ds.column_index(name);
        idx.push_back(c);
        cols.push_back(ds.column(c));
    }
    return Dataset(std::move(cols), ds.values().take_cols(idx), ds.maybe_labels(), ds.maybe_groups(),
                   ds.label_name(), ds.group_name());
}

Matrix feature_matrix(const Dataset& ds) {
    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < ds.n_cols(); ++c) {
        if (ds.column(c).kind != ColumnKind::identifier) idx.push_back(c);
    }
    if (idx.size() == ds.n_cols()) return ds.values();
    return ds.values().take_cols(idx);
}

} // namespace icumort
