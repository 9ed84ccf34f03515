#include "polynn/dataset.hpp"

#include "polynn/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace polynn {

std::string_view to_string(ColumnKind kind)
{
    switch (kind) {
    case ColumnKind::Numeric: return "numeric";
    case ColumnKind::Categorical: return "categorical";
    case ColumnKind::ResponseNumeric: return "response_numeric";
    case ColumnKind::ResponseClass: return "response_class";
    }
    return "?";
}

ColumnKind parse_column_kind(std::string_view text)
{
    if (text == "numeric") return ColumnKind::Numeric;
    if (text == "categorical") return ColumnKind::Categorical;
    if (text == "response_numeric") return ColumnKind::ResponseNumeric;
    if (text == "response_class") return ColumnKind::ResponseClass;
    throw Error(ErrorCode::Data, "unknown column kind '" + std::string(text) + "'");
}

// --- Schema -----------------------------------------------------------------

Schema::Schema(std::vector<ColumnSpec> columns) : columns_(std::move(columns))
{
    std::set<std::string> seen;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        auto& c = columns_[i];
        if (!seen.insert(c.name).second) throw Error(ErrorCode::Data, "duplicate column '" + c.name + "'");
        if (is_response(c.kind)) {
            if (response_) throw Error(ErrorCode::Data, "schema has more than one response column");
            response_ = i;
        }
        std::sort(c.levels.begin(), c.levels.end());
        c.levels.erase(std::unique(c.levels.begin(), c.levels.end()), c.levels.end());
    }
    if (!response_) throw Error(ErrorCode::Data, "schema has no response column");
}

std::size_t Schema::response_index() const
{
    if (!response_) throw Error(ErrorCode::Data, "schema has no response column");
    return *response_;
}

bool Schema::is_classification() const
{
    return response_ && columns_[*response_].kind == ColumnKind::ResponseClass;
}

std::optional<std::size_t> Schema::find(std::string_view name) const
{
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name) return i;
    return std::nullopt;
}

std::size_t Schema::feature_count() const { return columns_.size() - (response_ ? 1 : 0); }

Schema Schema::without_response() const
{
    Schema s;
    for (const auto& c : columns_)
        if (!is_response(c.kind)) s.columns_.push_back(c);
    return s;
}

Schema Schema::without_levels() const
{
    Schema s = *this;
    for (auto& c : s.columns_) c.levels.clear();
    return s;
}

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_on(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

Schema parse_schema(std::istream& in)
{
    std::vector<ColumnSpec> cols;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::Data, "schema line " + std::to_string(lineno) + ": expected '<name> = <kind>'");
        ColumnSpec spec;
        spec.name = trim(std::string_view(line).substr(0, eq));
        std::string rhs = trim(std::string_view(line).substr(eq + 1));
        if (const auto colon = rhs.find(':'); colon != std::string::npos) {
            for (auto& lvl : split_on(std::string_view(rhs).substr(colon + 1), '|'))
                if (!lvl.empty()) spec.levels.push_back(std::move(lvl));
            rhs = trim(std::string_view(rhs).substr(0, colon));
        }
        spec.kind = parse_column_kind(rhs);
        if (!spec.levels.empty() && !has_levels(spec.kind))
            throw Error(ErrorCode::Data, "schema line " + std::to_string(lineno) + ": levels on a numeric column");
        cols.push_back(std::move(spec));
    }
    return Schema(std::move(cols));
}

Schema read_schema_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open schema file '" + path + "'");
    return parse_schema(in);
}

void write_schema(std::ostream& out, const Schema& schema)
{
    for (const auto& c : schema.columns()) {
        out << c.name << " = " << to_string(c.kind);
        for (std::size_t i = 0; i < c.levels.size(); ++i) out << (i == 0 ? ": " : "|") << c.levels[i];
        out << '\n';
    }
}

// --- Dataset ----------------------------------------------------------------

Dataset::Dataset(Schema schema, std::vector<Column> columns) : schema_(std::move(schema)), columns_(std::move(columns))
{
    if (columns_.size() != schema_.size()) throw Error(ErrorCode::Data, "column count does not match schema");
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        const auto& spec = schema_[i];
        const auto& col = columns_[i];
        const std::size_t len = has_levels(spec.kind) ? col.codes.size() : col.values.size();
        if (i == 0) rows_ = len;
        if (len != rows_) throw Error(ErrorCode::Data, "ragged column '" + spec.name + "'");
        if (has_levels(spec.kind)) {
            if (spec.levels.empty() && rows_ > 0)
                throw Error(ErrorCode::Data, "categorical column '" + spec.name + "' has no levels");
            for (auto code : col.codes)
                if (code >= spec.levels.size()) throw Error(ErrorCode::Data, "level code out of range in '" + spec.name + "'");
        }
    }
}

Eigen::VectorXd Dataset::response_values() const
{
    const auto r = schema_.response_index();
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows_));
    for (std::size_t i = 0; i < rows_; ++i)
        y(static_cast<Eigen::Index>(i)) = schema_.is_classification() ? static_cast<double>(columns_[r].codes[i])
                                                                       : columns_[r].values[i];
    return y;
}

std::vector<std::size_t> Dataset::response_classes() const
{
    if (!schema_.is_classification()) throw Error(ErrorCode::Data, "response is not a class column");
    const auto& codes = columns_[schema_.response_index()].codes;
    return {codes.begin(), codes.end()};
}

std::size_t Dataset::class_count() const
{
    return schema_.is_classification() ? schema_.response().levels.size() : 0;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const
{
    std::vector<Column> cols(columns_.size());
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        const bool coded = has_levels(schema_[c].kind);
        for (auto r : rows) {
            if (r >= rows_) throw Error(ErrorCode::Data, "row index out of range");
            if (coded)
                cols[c].codes.push_back(columns_[c].codes[r]);
            else
                cols[c].values.push_back(columns_[c].values[r]);
        }
    }
    return Dataset(schema_, std::move(cols));
}

const std::string& Dataset::level(std::size_t col, std::size_t row) const
{
    return schema_[col].levels.at(columns_[col].codes.at(row));
}

// --- CSV ingestion ----------------------------------------------------------

namespace {

std::vector<std::string> parse_record(const std::string& line, char delim)
{
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == delim) {
            fields.push_back(trim(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA" || cell == "?"; }

std::optional<double> parse_number(const std::string& cell)
{
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return v;
}

}  // namespace

LoadResult read_csv(std::istream& in, const std::optional<Schema>& schema, const LoadOptions& options)
{
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Data, "empty input: no header row");
    const auto header = parse_record(line, options.delimiter);
    const std::size_t width = header.size();

    std::vector<std::vector<std::string>> rows;
    std::size_t dropped = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto rec = parse_record(line, options.delimiter);
        if (rec.size() != width || std::any_of(rec.begin(), rec.end(), is_missing)) {
            ++dropped;
            continue;
        }
        rows.push_back(std::move(rec));
    }

    std::vector<std::string> warnings;
    if (dropped > 0) warnings.push_back(std::to_string(dropped) + (dropped == 1 ? " row" : " rows") + " dropped");
    if (rows.empty() && !options.allow_empty) throw Error(ErrorCode::Data, "no usable rows");

    // Resolve column typing.
    std::vector<ColumnSpec> specs(width);
    std::vector<bool> keep(width, true);
    if (schema) {
        for (std::size_t c = 0; c < width; ++c) {
            const auto idx = schema->find(header[c]);
            if (!idx) {
                keep[c] = false;
                continue;
            }
            specs[c] = (*schema)[*idx];
        }
        for (const auto& spec : schema->columns()) {
            if (std::find(header.begin(), header.end(), spec.name) != header.end()) continue;
            if (is_response(spec.kind) && !options.require_response) continue;
            throw Error(ErrorCode::Data, "column '" + spec.name + "' missing from data");
        }
    } else {
        const std::string response_name = options.response.value_or(header.empty() ? std::string() : header.back());
        if (std::find(header.begin(), header.end(), response_name) == header.end()) {
            if (options.require_response) throw Error(ErrorCode::Data, "response column '" + response_name + "' absent");
        }
        for (std::size_t c = 0; c < width; ++c) {
            specs[c].name = header[c];
            bool all_numeric = true;
            std::set<std::string> distinct;
            for (const auto& r : rows) {
                if (all_numeric && !parse_number(r[c])) all_numeric = false;
                if (distinct.size() <= options.categorical_threshold + 1) distinct.insert(r[c]);
            }
            const bool is_resp = header[c] == response_name;
            if (is_resp) {
                specs[c].kind = (!all_numeric || options.classification) ? ColumnKind::ResponseClass
                                                                           : ColumnKind::ResponseNumeric;
            } else {
                const bool few = options.categorical_threshold > 0 && distinct.size() <= options.categorical_threshold &&
                                 distinct.size() < rows.size();
                specs[c].kind = (!all_numeric || few) ? ColumnKind::Categorical : ColumnKind::Numeric;
            }
        }
    }

    // Collect levels and fill columns.
    std::vector<ColumnSpec> kept_specs;
    std::vector<Column> columns;
    for (std::size_t c = 0; c < width; ++c) {
        if (!keep[c]) continue;
        ColumnSpec spec = specs[c];
        Column col;
        if (has_levels(spec.kind)) {
            const bool fixed = !spec.levels.empty();
            if (!fixed) {
                std::set<std::string> lv;
                for (const auto& r : rows) lv.insert(r[c]);
                spec.levels.assign(lv.begin(), lv.end());
            }
            std::unordered_map<std::string, std::uint32_t> index;
            for (std::size_t i = 0; i < spec.levels.size(); ++i) index.emplace(spec.levels[i], static_cast<std::uint32_t>(i));
            col.codes.reserve(rows.size());
            for (const auto& r : rows) {
                const auto it = index.find(r[c]);
                if (it == index.end())
                    throw Error(ErrorCode::Data, "value '" + r[c] + "' not among declared levels of '" + spec.name + "'");
                col.codes.push_back(it->second);
            }
        } else {
            col.values.reserve(rows.size());
            for (const auto& r : rows) {
                const auto v = parse_number(r[c]);
                if (!v) throw Error(ErrorCode::Data, "non-numeric value '" + r[c] + "' in numeric column '" + spec.name + "'");
                col.values.push_back(*v);
            }
        }
        kept_specs.push_back(std::move(spec));
        columns.push_back(std::move(col));
    }

    const bool any_response =
        std::any_of(kept_specs.begin(), kept_specs.end(), [](const ColumnSpec& s) { return is_response(s.kind); });
    Schema built;
    if (any_response) {
        built = Schema(std::move(kept_specs));
    } else {
        // Feature-only input; attach a placeholder response to satisfy the
        // constructor, then strip it.
        kept_specs.push_back({"__response__", ColumnKind::ResponseNumeric, {}});
        built = Schema(std::move(kept_specs)).without_response();
    }
    return LoadResult{Dataset(std::move(built), std::move(columns)), dropped, std::move(warnings)};
}

LoadResult load_csv(const std::string& path, const std::optional<Schema>& schema, const LoadOptions& options)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
    return read_csv(in, schema, options);
}

// --- Design encoding --------------------------------------------------------

std::optional<std::size_t> DummyGroups::group_of(std::size_t design_col) const
{
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& cols = groups[g].design_columns;
        if (std::find(cols.begin(), cols.end(), design_col) != cols.end()) return g;
    }
    return std::nullopt;
}

std::size_t DummyGroups::width() const
{
    std::size_t w = numeric_indices.size();
    for (const auto& g : groups) w += g.design_columns.size();
    return w;
}

namespace {

Design encode_impl(const Dataset& ds, const Schema& ref)
{
    const auto& schema = ds.schema();
    Design out;
    std::size_t width = 0;
    std::vector<std::pair<std::size_t, std::size_t>> numeric_cols;  // (ref idx, data idx)
    std::vector<std::pair<std::size_t, std::size_t>> cat_cols;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const auto& spec = ref[i];
        if (is_response(spec.kind)) continue;
        const auto di = schema.find(spec.name);
        if (!di) throw Error(ErrorCode::Data, "column '" + spec.name + "' missing from data");
        if (has_levels(spec.kind) != has_levels(schema[*di].kind))
            throw Error(ErrorCode::Data, "column '" + spec.name + "' has a different type than at training time");
        if (spec.kind == ColumnKind::Numeric) {
            numeric_cols.emplace_back(i, *di);
            ++width;
        } else {
            cat_cols.emplace_back(i, *di);
            if (spec.levels.size() <= 1)
                out.warnings.push_back("categorical column '" + spec.name + "' has a single level; no dummies emitted");
            else
                width += spec.levels.size() - 1;
        }
    }

    const auto n = static_cast<Eigen::Index>(ds.rows());
    out.x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(width));
    std::size_t col = 0;
    for (auto [ri, di] : numeric_cols) {
        const auto& v = ds.column(di).values;
        for (Eigen::Index r = 0; r < n; ++r) out.x(r, static_cast<Eigen::Index>(col)) = v[static_cast<std::size_t>(r)];
        out.groups.numeric_indices.push_back(col);
        out.names.push_back(ref[ri].name);
        ++col;
    }
    for (auto [ri, di] : cat_cols) {
        const auto& ref_levels = ref[ri].levels;
        if (ref_levels.size() <= 1) continue;
        DummyGroup group;
        group.source_column = ri;
        for (std::size_t k = 1; k < ref_levels.size(); ++k) {
            group.design_columns.push_back(col + k - 1);
            out.names.push_back(ref[ri].name + "=" + ref_levels[k]);
        }
        // Data level code -> reference level index (0 = reference / unseen).
        const auto& data_levels = schema[di].levels;
        std::vector<std::size_t> remap(data_levels.size(), 0);
        std::vector<bool> unseen(data_levels.size(), false);
        for (std::size_t k = 0; k < data_levels.size(); ++k) {
            const auto it = std::lower_bound(ref_levels.begin(), ref_levels.end(), data_levels[k]);
            if (it != ref_levels.end() && *it == data_levels[k])
                remap[k] = static_cast<std::size_t>(it - ref_levels.begin());
            else
                unseen[k] = true;
        }
        const auto& codes = ds.column(di).codes;
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto code = codes[static_cast<std::size_t>(r)];
            if (unseen[code]) {
                ++out.unseen_levels;
                continue;
            }
            if (remap[code] > 0) out.x(r, static_cast<Eigen::Index>(col + remap[code] - 1)) = 1.0;
        }
        out.groups.groups.push_back(std::move(group));
        col += ref_levels.size() - 1;
    }
    if (out.unseen_levels > 0)
        out.warnings.push_back(std::to_string(out.unseen_levels) +
                               " cell(s) with unseen categorical levels mapped to the reference level");
    return out;
}

}  // namespace

Design encode_design(const Dataset& ds) { return encode_impl(ds, ds.schema()); }

Design encode_design(const Dataset& ds, const Schema& reference) { return encode_impl(ds, reference); }

// --- Splitting --------------------------------------------------------------

std::size_t holdout_size(std::size_t n)
{
    if (n > 20000) return std::min<std::size_t>(10000, n);
    return n / 5;
}

SplitIndices split_indices(std::size_t n, std::size_t test_size, std::uint64_t seed)
{
    if (test_size > n) throw Error(ErrorCode::Data, "holdout larger than dataset");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first test_size slots become the holdout.
    for (std::size_t i = 0; i < test_size; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(perm[i], perm[j]);
    }
    SplitIndices out;
    out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(test_size));
    out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(test_size), perm.end());
    std::sort(out.test.begin(), out.test.end());
    std::sort(out.train.begin(), out.train.end());
    return out;
}

Split split(const Dataset& ds, std::uint64_t seed)
{
    if (ds.rows() < 2) throw Error(ErrorCode::Data, "need at least 2 rows to split");
    auto idx = split_indices(ds.rows(), holdout_size(ds.rows()), seed);
    auto train = ds.subset(idx.train);
    auto test = ds.subset(idx.test);
    return Split{std::move(train), std::move(test), std::move(idx)};
}

}  // namespace polynn
