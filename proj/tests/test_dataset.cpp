#include "doctest.h"

#include "polynn/dataset.hpp"
#include "polynn/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace polynn;

namespace {

LoadResult parse(const std::string& text, const LoadOptions& opts = {})
{
    std::istringstream in(text);
    return read_csv(in, std::nullopt, opts);
}

Dataset numeric_rows(std::size_t n)
{
    std::ostringstream s;
    s << "u,y\n";
    for (std::size_t i = 0; i < n; ++i) s << i * 0.5 << ',' << i << '\n';
    return parse(s.str()).data;
}

}  // namespace

TEST_CASE("three numeric rows parse to n=3, p=2")
{
    const auto r = parse("u,v,y\n1,2,3\n4,5,6\n7,8.5,-1\n");
    CHECK(r.data.rows() == 3);
    CHECK(r.data.feature_count() == 2);
    CHECK(r.dropped_rows == 0);
    CHECK(r.data.schema().response().name == "y");
    CHECK(r.data.column(1).values[2] == doctest::Approx(8.5));
}

TEST_CASE("non-numeric column becomes categorical with sorted levels")
{
    const auto r = parse("u,g,y\n1,b,3\n2,a,4\n3,b,5\n");
    const auto& spec = r.data.schema()[1];
    CHECK(spec.kind == ColumnKind::Categorical);
    CHECK(spec.levels == std::vector<std::string>{"a", "b"});
    CHECK(r.data.level(1, 0) == "b");
}

TEST_CASE("row with a missing cell is dropped and reported")
{
    std::string text = "u,v,y\n";
    for (int i = 0; i < 10; ++i) text += std::to_string(i) + "," + (i == 4 ? "" : std::to_string(i * 3 % 7)) + ",1." + std::to_string(i) + "\n";
    const auto r = parse(text);
    CHECK(r.data.rows() == 9);
    CHECK(r.dropped_rows == 1);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0] == "1 row dropped");
}

TEST_CASE("NA and ? count as missing")
{
    const auto r = parse("u,y\n1,2\nNA,3\n4,?\n5,6\n");
    CHECK(r.data.rows() == 2);
    CHECK(r.dropped_rows == 2);
}

TEST_CASE("quoted fields with embedded delimiter")
{
    const auto r = parse("name,y\n\"a,b\",1\nc,2\n\"a,b\",3\n");
    CHECK(r.data.schema()[0].levels == std::vector<std::string>{"a,b", "c"});
}

TEST_CASE("empty file without allow_empty is a data error")
{
    CHECK_THROWS_AS(parse("u,y\n"), Error);
    LoadOptions opts;
    opts.allow_empty = true;
    CHECK(parse("u,y\n", opts).data.rows() == 0);
}

TEST_CASE("schema sidecar round trip")
{
    std::istringstream in("# comment\ny = response_class: no|yes\ng = categorical: z|a\nu = numeric\n");
    const Schema s = parse_schema(in);
    CHECK(s.is_classification());
    CHECK(s[1].levels == std::vector<std::string>{"a", "z"});
    std::ostringstream out;
    write_schema(out, s);
    std::istringstream again(out.str());
    const Schema t = parse_schema(again);
    REQUIRE(t.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(t[i].name == s[i].name);
        CHECK(t[i].kind == s[i].kind);
        CHECK(t[i].levels == s[i].levels);
    }
}

TEST_CASE("schema needs exactly one response")
{
    CHECK_THROWS_AS(Schema({{"a", ColumnKind::Numeric, {}}, {"b", ColumnKind::Numeric, {}}}), Error);
    CHECK_THROWS_AS(Schema({{"a", ColumnKind::ResponseNumeric, {}}, {"b", ColumnKind::ResponseNumeric, {}}}), Error);
}

TEST_CASE("1 numeric + 3-level categorical encodes to 3 columns")
{
    const auto r = parse("u,g,y\n1,x,1\n2,y,2\n3,z,3\n4,x,4\n");
    const auto d = encode_design(r.data);
    CHECK(d.x.cols() == 3);
    REQUIRE(d.groups.groups.size() == 1);
    CHECK(d.groups.groups[0].design_columns == std::vector<std::size_t>{1, 2});
    CHECK(d.names == std::vector<std::string>{"u", "g=y", "g=z"});
    CHECK(d.x(1, 1) == 1.0);
    CHECK(d.x(2, 2) == 1.0);
    CHECK(d.x.row(0).tail(2).sum() == 0.0);
}

TEST_CASE("all-numeric encoding is the raw matrix")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::ostringstream s;
    s << "a,b,c,d,e,y\n";
    std::vector<std::vector<double>> raw(20, std::vector<double>(5));
    for (auto& row : raw) {
        for (auto& v : row) v = g(rng);
        for (auto v : row) s << v << ',';
        s << g(rng) << '\n';
    }
    s.precision(17);
    const auto r = parse(s.str());
    const auto d = encode_design(r.data);
    CHECK(d.groups.groups.empty());
    REQUIRE(d.x.cols() == 5);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 5; ++j) CHECK(d.x(i, j) == r.data.column(j).values[i]);
}

TEST_CASE("single-level categorical emits no columns and warns")
{
    const auto r = parse("u,g,y\n1,x,1\n2,x,2\n3,x,3\n");
    const auto d = encode_design(r.data);
    CHECK(d.x.cols() == 1);
    CHECK(d.warnings.size() == 1);
}

TEST_CASE("dummy group row sums are at most 1 and zero on the reference level")
{
    std::mt19937_64 rng(11);
    std::ostringstream s;
    s << "g,h,y\n";
    const char* lv = "pqrst";
    for (int i = 0; i < 200; ++i) s << lv[rng() % 5] << ',' << lv[rng() % 3] << ',' << i << '\n';
    const auto r = parse(s.str());
    const auto d = encode_design(r.data);
    for (const auto& grp : d.groups.groups) {
        const auto& ref = r.data.schema()[grp.source_column].levels.front();
        for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
            double sum = 0.0;
            for (auto c : grp.design_columns) sum += d.x(i, static_cast<Eigen::Index>(c));
            CHECK(sum <= 1.0);
            if (r.data.level(grp.source_column, static_cast<std::size_t>(i)) == ref) CHECK(sum == 0.0);
            else CHECK(sum == 1.0);
        }
    }
}

TEST_CASE("unseen level maps to reference and is counted")
{
    const auto train = parse("u,g,y\n1,a,1\n2,b,2\n3,c,3\n4,a,1\n").data;
    LoadOptions opts;
    opts.require_response = false;
    std::istringstream in("u,g\n1,b\n2,q\n");
    const auto test = read_csv(in, train.schema().without_levels(), opts).data;
    const auto d = encode_design(test, train.schema());
    CHECK(d.unseen_levels == 1);
    CHECK(d.x(0, 1) == 1.0);
    CHECK(d.x.row(1).tail(2).sum() == 0.0);
}

TEST_CASE("holdout size rule")
{
    CHECK(holdout_size(50000) == 10000);
    CHECK(holdout_size(20001) == 10000);
    CHECK(holdout_size(20000) == 4000);
    CHECK(holdout_size(1000) == 200);
    CHECK(holdout_size(4) == 0);
    CHECK(holdout_size(5000) == 1000);
}

TEST_CASE("split sizes and determinism")
{
    const auto a = split_indices(50000, holdout_size(50000), 7);
    CHECK(a.test.size() == 10000);
    CHECK(a.train.size() == 40000);
    const auto ds = numeric_rows(1000);
    const auto s1 = split(ds, 42);
    const auto s2 = split(ds, 42);
    CHECK(s1.test.rows() == 200);
    CHECK(s1.train.rows() == 800);
    CHECK(s1.indices.test == s2.indices.test);
    CHECK(s1.indices.train == s2.indices.train);
    CHECK(split(ds, 43).indices.test != s1.indices.test);
}

TEST_CASE("split partitions the rows")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto p = split_indices(237, 47, seed);
        std::vector<std::size_t> all = p.train;
        all.insert(all.end(), p.test.begin(), p.test.end());
        std::sort(all.begin(), all.end());
        std::vector<std::size_t> expect(237);
        std::iota(expect.begin(), expect.end(), 0);
        CHECK(all == expect);
    }
}

TEST_CASE("numeric column with few repeated values is categorical; all-distinct stays numeric")
{
    const auto r = parse("k,u,y\n1,0.5,1\n2,1.5,2\n1,2.5,3\n2,3.5,4\n1,4.5,5\n");
    CHECK(r.data.schema()[0].kind == ColumnKind::Categorical);
    CHECK(r.data.schema()[1].kind == ColumnKind::Numeric);
    LoadOptions opts;
    opts.categorical_threshold = 0;
    CHECK(parse("k,u,y\n1,0.5,1\n2,1.5,2\n1,2.5,3\n", opts).data.schema()[0].kind == ColumnKind::Numeric);
}
