#include "doctest.h"

#include "polynn/error.hpp"
#include "polynn/polyterms.hpp"

#include <functional>
#include <random>
#include <set>
#include <sstream>

using namespace polynn;

namespace {

// Brute force: every exponent vector with 1 <= sum <= d, filtered by the
// dummy and interaction rules, turned into a Monomial.
std::set<Monomial> brute_force(std::size_t m, const DummyGroups& groups, unsigned d, unsigned cap)
{
    std::set<Monomial> out;
    std::vector<unsigned> e(m, 0);
    std::function<void(std::size_t, unsigned)> rec = [&](std::size_t col, unsigned left) {
        if (col == m) {
            unsigned deg = 0, distinct = 0;
            std::vector<Monomial::Factor> f;
            for (std::size_t j = 0; j < m; ++j) {
                deg += e[j];
                if (e[j] > 0) {
                    ++distinct;
                    f.emplace_back(j, e[j]);
                }
            }
            if (deg == 0) return;
            if (distinct >= 2 && deg > cap) return;
            for (std::size_t j = 0; j < m; ++j)
                if (groups.is_dummy(j) && e[j] > 1) return;
            for (const auto& g : groups.groups) {
                unsigned used = 0;
                for (auto c : g.design_columns) used += e[c] > 0;
                if (used > 1) return;
            }
            out.insert(Monomial(f));
            return;
        }
        for (unsigned k = 0; k <= left; ++k) {
            e[col] = k;
            rec(col + 1, left - k);
        }
        e[col] = 0;
    };
    rec(0, d);
    return out;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k)
{
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

DummyGroups one_group(std::vector<std::size_t> cols, std::vector<std::size_t> numerics)
{
    DummyGroups g;
    g.groups.push_back({1, std::move(cols)});
    g.numeric_indices = std::move(numerics);
    return g;
}

DummyGroups numeric_only(std::size_t m)
{
    DummyGroups g;
    for (std::size_t j = 0; j < m; ++j) g.numeric_indices.push_back(j);
    return g;
}

Monomial mono(std::vector<Monomial::Factor> f) { return Monomial(std::move(f)); }

}  // namespace

TEST_CASE("two numerics, degree 2: u, v, u^2, uv, v^2")
{
    const auto ts = enumerate_terms(2, numeric_only(2), PolySpec(2));
    const std::vector<Monomial> expect{mono({{0, 1}}), mono({{1, 1}}), mono({{0, 2}}), mono({{0, 1}, {1, 1}}), mono({{1, 2}})};
    CHECK(ts.terms() == expect);
}

TEST_CASE("single numeric, degree 1")
{
    const auto ts = enumerate_terms(1, numeric_only(1), PolySpec(1));
    REQUIRE(ts.size() == 1);
    CHECK(ts[0] == mono({{0, 1}}));
}

TEST_CASE("one 3-level categorical at degree 2 keeps only the two dummies")
{
    const auto ts = enumerate_terms(2, one_group({0, 1}, {}), PolySpec(2));
    const std::vector<Monomial> expect{mono({{0, 1}}), mono({{1, 1}})};
    CHECK(ts.terms() == expect);
}

TEST_CASE("numeric plus dummy with interaction cap 2 at degree 3")
{
    const auto ts = enumerate_terms(2, one_group({1}, {0}), PolySpec(3, 2));
    const std::set<Monomial> got(ts.terms().begin(), ts.terms().end());
    const std::set<Monomial> expect{mono({{0, 1}}), mono({{1, 1}}), mono({{0, 2}}), mono({{0, 1}, {1, 1}}), mono({{0, 3}})};
    CHECK(got == expect);
    CHECK(ts.size() == 5);
}

TEST_CASE("all-numeric count equals C(p+d,d)-1 and matches brute force")
{
    for (std::size_t p = 1; p <= 6; ++p)
        for (unsigned d = 1; d <= 4; ++d) {
            CAPTURE(p);
            CAPTURE(d);
            const auto ts = enumerate_terms(p, numeric_only(p), PolySpec(d));
            CHECK(ts.size() == binomial(p + d, d) - 1);
            const std::set<Monomial> got(ts.terms().begin(), ts.terms().end());
            CHECK(got.size() == ts.size());
            CHECK(got == brute_force(p, numeric_only(p), d, d));
            CHECK(count_terms_bound(p, d).value >= ts.size());
        }
}

TEST_CASE("mixed designs match brute force for every cap")
{
    DummyGroups g;
    g.numeric_indices = {0, 1};
    g.groups.push_back({2, {2, 3, 4}});
    g.groups.push_back({3, {5}});
    for (unsigned d = 1; d <= 4; ++d)
        for (unsigned cap = 1; cap <= d; ++cap) {
            const auto ts = enumerate_terms(6, g, PolySpec(d, cap));
            const std::set<Monomial> got(ts.terms().begin(), ts.terms().end());
            CHECK(got == brute_force(6, g, d, cap));
        }
}

TEST_CASE("terms come in graded order")
{
    const auto ts = enumerate_terms(3, numeric_only(3), PolySpec(3));
    for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i - 1].degree() <= ts[i].degree());
}

TEST_CASE("degree d terms are a prefix of degree d+1 terms")
{
    DummyGroups g = one_group({2, 3}, {0, 1});
    for (unsigned d = 1; d < 4; ++d) {
        const auto a = enumerate_terms(4, g, PolySpec(d, std::min(d, 2u)));
        const auto b = enumerate_terms(4, g, PolySpec(d + 1, std::min(d, 2u)));
        REQUIRE(a.size() <= b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
}

TEST_CASE("term bound recurrence")
{
    CHECK(count_terms_bound(3, 2).value == 12);
    CHECK(enumerate_terms(3, numeric_only(3), PolySpec(2)).size() == 9);
    CHECK(count_terms_bound(1, 1).value == 1);
    CHECK(count_terms_bound(90, 2).value == 8190);
    const auto big = count_terms_bound(1u << 20, 8);
    CHECK(big.saturated);
}

TEST_CASE("expand computes the monomials")
{
    Eigen::MatrixXd x(2, 2);
    x << 2, 3, 0, 0;
    const TermSet ts(2, numeric_only(2), PolySpec(2),
                     {mono({{0, 1}}), mono({{1, 1}}), mono({{0, 1}, {1, 1}}), mono({{0, 2}})});
    const auto e = expand(x, ts);
    CHECK(e(0, 0) == 2);
    CHECK(e(0, 1) == 3);
    CHECK(e(0, 2) == 6);
    CHECK(e(0, 3) == 4);
    CHECK(e.row(1).isZero());
}

TEST_CASE("expand passes dummies through")
{
    Eigen::MatrixXd x(1, 2);
    x << 1, 0;
    const auto ts = enumerate_terms(2, one_group({0, 1}, {}), PolySpec(2));
    const auto e = expand(x, ts);
    CHECK(e(0, 0) == 1);
    CHECK(e(0, 1) == 0);
}

TEST_CASE("dummy rules never create duplicate columns")
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    const std::size_t n = 60;
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 5);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = g(rng);
        x(i, 1) = g(rng);
        const auto lvl = rng() % 4;  // 3 dummies + reference
        if (lvl > 0) x(i, 1 + lvl) = 1.0;
    }
    const auto ts = enumerate_terms(5, one_group({2, 3, 4}, {0, 1}), PolySpec(3));
    const auto e = expand(x, ts);
    for (Eigen::Index a = 0; a < e.cols(); ++a)
        for (Eigen::Index b = a + 1; b < e.cols(); ++b) CHECK_FALSE(e.col(a).isApprox(e.col(b), 0.0));
}

TEST_CASE("expand refuses to exceed the memory budget")
{
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(100, 3);
    const auto ts = enumerate_terms(3, numeric_only(3), PolySpec(3));
    ExpandOptions opts;
    opts.max_cells = 100;
    try {
        (void)expand(x, ts, opts);
        FAIL("expected a memory-budget error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MemoryBudget);
    }
}

TEST_CASE("drop_random_columns")
{
    const auto full = enumerate_terms(3, numeric_only(3), PolySpec(2));  // 3 linear + 6 quadratic
    const auto same = drop_random_columns(full, 1.0, 1);
    CHECK(same.terms() == full.terms());

    std::vector<Monomial> ten = full.terms();
    ten.push_back(mono({{0, 3}}));
    const auto ts10 = full.with_terms(ten);
    const auto half = drop_random_columns(ts10, 0.5, 9);
    CHECK(half.size() == 5);
    for (std::size_t i = 0; i < 3; ++i) CHECK(half[i] == ts10[i]);
    CHECK(drop_random_columns(ts10, 0.5, 9).terms() == half.terms());

    std::size_t pos = 0;
    for (const auto& t : half.terms()) {
        while (pos < ts10.size() && !(ts10[pos] == t)) ++pos;
        CHECK(pos < ts10.size());
    }
    CHECK(drop_random_columns(ts10, 0.1, 2).size() == 3);
}

TEST_CASE("monomial text and termset round trip")
{
    const auto m = mono({{0, 2}, {3, 1}});
    CHECK(m.str() == "0^2 3^1");
    CHECK(parse_monomial(m.str()) == m);
    CHECK(m.label({"a", "b", "c", "d"}) == "a^2*d");

    const auto ts = enumerate_terms(4, one_group({2, 3}, {0, 1}), PolySpec(3, 2));
    std::stringstream buf;
    write_termset(buf, ts);
    const auto back = read_termset(buf);
    CHECK(back.terms() == ts.terms());
    CHECK(back.spec() == ts.spec());
    CHECK(back.width() == ts.width());
    REQUIRE(back.groups().groups.size() == 1);
    CHECK(back.groups().groups[0].design_columns == ts.groups().groups[0].design_columns);
}

TEST_CASE("invalid specs and term sets are rejected")
{
    CHECK_THROWS_AS(PolySpec(2, 3), Error);
    CHECK_THROWS_AS(PolySpec(0, 0), Error);
    CHECK_THROWS_AS(TermSet(1, numeric_only(1), PolySpec(1), {mono({{0, 1}}), mono({{0, 1}})}), Error);
    CHECK_THROWS_AS(TermSet(1, numeric_only(1), PolySpec(1), {mono({{4, 1}})}), Error);
}
