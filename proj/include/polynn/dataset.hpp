#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace polynn {

enum class ColumnKind { Numeric, Categorical, ResponseNumeric, ResponseClass };

[[nodiscard]] std::string_view to_string(ColumnKind kind);
[[nodiscard]] ColumnKind parse_column_kind(std::string_view text);

[[nodiscard]] inline bool is_response(ColumnKind k)
{
    return k == ColumnKind::ResponseNumeric || k == ColumnKind::ResponseClass;
}
[[nodiscard]] inline bool has_levels(ColumnKind k)
{
    return k == ColumnKind::Categorical || k == ColumnKind::ResponseClass;
}

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    // Sorted lexicographically; empty means "take from data".
    std::vector<std::string> levels;
};

// Column typing for a table. A schema normally carries exactly one response
// column; feature-only schemas (for prediction inputs) are built through
// without_response().
class Schema {
public:
    Schema() = default;
    explicit Schema(std::vector<ColumnSpec> columns);

    [[nodiscard]] const std::vector<ColumnSpec>& columns() const { return columns_; }
    [[nodiscard]] std::size_t size() const { return columns_.size(); }
    [[nodiscard]] const ColumnSpec& operator[](std::size_t i) const { return columns_[i]; }

    [[nodiscard]] bool has_response() const { return response_.has_value(); }
    [[nodiscard]] std::size_t response_index() const;
    [[nodiscard]] const ColumnSpec& response() const { return columns_[response_index()]; }
    [[nodiscard]] bool is_classification() const;

    [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const;
    // Number of feature (non-response) columns, p.
    [[nodiscard]] std::size_t feature_count() const;

    [[nodiscard]] Schema without_response() const;
    // Copy with every level list cleared, so levels are re-read from data.
    [[nodiscard]] Schema without_levels() const;

private:
    std::vector<ColumnSpec> columns_;
    std::optional<std::size_t> response_;
};

// Sidecar format, one column per line ('#' starts a comment):
//
//     <name> = numeric
//     <name> = categorical
//     <name> = categorical: lvlA|lvlB|lvlC
//     <name> = response_numeric
//     <name> = response_class[: lvl|...]
//
// Column order in the sidecar is irrelevant; CSV header order wins.
[[nodiscard]] Schema parse_schema(std::istream& in);
[[nodiscard]] Schema read_schema_file(const std::string& path);
void write_schema(std::ostream& out, const Schema& schema);

// Column storage. Numeric columns use `values`; categorical and class
// columns use `codes`, which index into the schema's level list.
struct Column {
    std::vector<double> values;
    std::vector<std::uint32_t> codes;
};

class Dataset {
public:
    Dataset(Schema schema, std::vector<Column> columns);

    [[nodiscard]] const Schema& schema() const { return schema_; }
    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t feature_count() const { return schema_.feature_count(); }
    [[nodiscard]] const Column& column(std::size_t i) const { return columns_[i]; }

    // Numeric response values, or class codes as doubles.
    [[nodiscard]] Eigen::VectorXd response_values() const;
    [[nodiscard]] std::vector<std::size_t> response_classes() const;
    [[nodiscard]] std::size_t class_count() const;

    [[nodiscard]] Dataset subset(std::span<const std::size_t> rows) const;

    // Text of a categorical cell.
    [[nodiscard]] const std::string& level(std::size_t col, std::size_t row) const;

private:
    Schema schema_;
    std::vector<Column> columns_;
    std::size_t rows_ = 0;
};

struct LoadOptions {
    // Response column name; defaults to the last header column.
    std::optional<std::string> response;
    // Numeric columns with at most this many distinct values (and at least one
    // repeated value) are typed categorical. 0 disables the rule.
    std::size_t categorical_threshold = 12;
    // Treat an inferred response as class labels even when numeric.
    bool classification = false;
    bool require_response = true;
    bool allow_empty = false;
    char delimiter = ',';
};

struct LoadResult {
    Dataset data;
    std::size_t dropped_rows = 0;
    std::vector<std::string> warnings;
};

[[nodiscard]] LoadResult load_csv(const std::string& path,
                                  const std::optional<Schema>& schema = std::nullopt,
                                  const LoadOptions& options = {});
[[nodiscard]] LoadResult read_csv(std::istream& in,
                                  const std::optional<Schema>& schema = std::nullopt,
                                  const LoadOptions& options = {});

struct DummyGroup {
    std::size_t source_column = 0;              // schema index
    std::vector<std::size_t> design_columns;    // k-1 columns for k levels
};

struct DummyGroups {
    std::vector<DummyGroup> groups;
    std::vector<std::size_t> numeric_indices;

    // Group id owning a design column, or nullopt for numeric columns.
    [[nodiscard]] std::optional<std::size_t> group_of(std::size_t design_col) const;
    [[nodiscard]] bool is_dummy(std::size_t design_col) const { return group_of(design_col).has_value(); }
    [[nodiscard]] std::size_t width() const;
};

struct Design {
    Eigen::MatrixXd x;
    DummyGroups groups;
    std::vector<std::string> names;
    std::vector<std::string> warnings;
    std::size_t unseen_levels = 0;
};

// Numerics in schema order, then one k-1 dummy block per categorical column.
[[nodiscard]] Design encode_design(const Dataset& ds);
// Encodes against a reference schema (the one a model was trained on).
// Levels missing from the reference map to its reference level.
[[nodiscard]] Design encode_design(const Dataset& ds, const Schema& reference);

// Holdout size: min(10000, n) when n > 20000, otherwise floor(n / 5).
[[nodiscard]] std::size_t holdout_size(std::size_t n);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

[[nodiscard]] SplitIndices split_indices(std::size_t n, std::size_t test_size, std::uint64_t seed);

struct Split {
    Dataset train;
    Dataset test;
    SplitIndices indices;
};

[[nodiscard]] Split split(const Dataset& ds, std::uint64_t seed);

}  // namespace polynn
