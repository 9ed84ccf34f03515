#include "doctest.h"

#include "polynn/equivalence.hpp"
#include "polynn/error.hpp"
#include "polynn/pipeline.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace polynn;

namespace {

SymbolicPoly random_poly(std::size_t vars, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-2, 2);
    SymbolicPoly p(vars);
    const int terms = 1 + static_cast<int>(rng() % 5);
    for (int t = 0; t < terms; ++t) {
        SymbolicPoly::Exponents e(vars);
        for (auto& k : e) k = static_cast<unsigned>(rng() % 3);
        p.add_term(e, u(rng));
    }
    p.prune();
    return p;
}

bool same(const SymbolicPoly& a, const SymbolicPoly& b, double tol = 1e-10)
{
    const auto d = poly_add(a, poly_scale(b, -1.0));
    for (const auto& [e, c] : d.terms())
        if (std::abs(c) > tol) return false;
    return true;
}

Layer dense(Eigen::MatrixXd w, Eigen::VectorXd b, Activation a)
{
    Layer L;
    L.width = static_cast<std::size_t>(w.rows());
    L.weights = std::move(w);
    L.bias = std::move(b);
    L.activation = a;
    return L;
}

}  // namespace

TEST_CASE("binomial square")
{
    const auto u = SymbolicPoly::variable(2, 0);
    const auto v = SymbolicPoly::variable(2, 1);
    const auto s = poly_pow(poly_add(u, v), 2);
    CHECK(s.size() == 3);
    CHECK(s.coefficient({2, 0}) == 1.0);
    CHECK(s.coefficient({1, 1}) == 2.0);
    CHECK(s.coefficient({0, 2}) == 1.0);
}

TEST_CASE("power zero and product with zero")
{
    std::mt19937_64 rng(1);
    const auto p = random_poly(2, rng);
    const auto one = poly_pow(p, 0);
    CHECK(one.size() == 1);
    CHECK(one.constant_term() == 1.0);
    CHECK(poly_mul(p, SymbolicPoly(2)).is_zero());
    CHECK(SymbolicPoly(2).degree() == 0);
}

TEST_CASE("ring laws on random polynomials")
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_poly(3, rng), b = random_poly(3, rng), c = random_poly(3, rng);
        CHECK(same(poly_add(a, b), poly_add(b, a)));
        CHECK(same(poly_mul(a, b), poly_mul(b, a)));
        CHECK(same(poly_add(poly_add(a, b), c), poly_add(a, poly_add(b, c))));
        CHECK(same(poly_mul(poly_mul(a, b), c), poly_mul(a, poly_mul(b, c))));
        CHECK(same(poly_mul(a, poly_add(b, c)), poly_add(poly_mul(a, b), poly_mul(a, c))));
        CHECK(same(poly_pow(a, 3), poly_mul(a, poly_mul(a, a))));
    }
}

TEST_CASE("evaluation agrees with the definition")
{
    SymbolicPoly p(2);
    p.add_term({0, 0}, 1.5);
    p.add_term({2, 1}, -2.0);
    const double pt[2] = {3.0, 0.5};
    CHECK(p.evaluate(pt) == doctest::Approx(1.5 - 2.0 * 9.0 * 0.5));
    CHECK(p.degree() == 3);
    CHECK(p.str({"u", "v"}) == "1.5 - 2*u^2*v");
}

TEST_CASE("single square unit is x^2")
{
    const MLP net(1, {dense(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1), Activation::Square)});
    const auto ex = extract_polynomial(net);
    REQUIRE(ex.outputs().size() == 1);
    const auto& p = ex.outputs()[0];
    CHECK(p.size() == 1);
    CHECK(p.coefficient({2}) == 1.0);
    CHECK(p.degree() == 2);
}

TEST_CASE("generic square nets reach degree 2^L and match the forward pass")
{
    for (std::size_t layers = 1; layers <= 3; ++layers) {
        int full_degree = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            EquivDemoConfig c;
            c.inputs = 1 + seed % 3;
            c.layers = layers;
            c.width = 2 + seed % 4;
            c.outputs = 1 + seed % 2;
            c.seed = seed;
            const auto net = random_polynomial_net(c);
            const auto ex = extract_polynomial(net);
            const auto degrees = degree_growth_report(ex.layers);
            REQUIRE(degrees.size() == layers);
            bool full = true;
            for (std::size_t k = 0; k < layers; ++k) {
                CHECK(degrees[k] <= (1u << (k + 1)));
                full = full && degrees[k] == (1u << (k + 1));
            }
            full_degree += full;
            CHECK(equivalence_check(net, ex.outputs(), 100, seed) <= 1e-8);
        }
        CHECK(full_degree >= 9);
    }
}

TEST_CASE("identity net is affine")
{
    EquivDemoConfig c;
    c.inputs = 3;
    c.layers = 3;
    c.activation = Activation::Identity;
    c.seed = 4;
    const auto r = run_equiv_demo(c);
    CHECK(r.degrees == std::vector<unsigned>{1, 1, 1});
    CHECK(r.max_deviation <= 1e-12);
}

TEST_CASE("forward at the origin equals the constant terms")
{
    EquivDemoConfig c;
    c.inputs = 2;
    c.layers = 2;
    c.outputs = 3;
    c.seed = 5;
    const auto net = random_polynomial_net(c);
    const auto ex = extract_polynomial(net);
    const auto f = net.forward(Eigen::MatrixXd::Zero(1, 2));
    for (std::size_t o = 0; o < 3; ++o)
        CHECK(f(0, static_cast<Eigen::Index>(o)) == doctest::Approx(ex.outputs()[o].constant_term()).epsilon(1e-12));
}

TEST_CASE("zero weights collapse the degree")
{
    EquivDemoConfig c;
    c.layers = 3;
    c.seed = 6;
    auto net = random_polynomial_net(c);
    net.layers()[1].weights.setZero();
    const auto degrees = degree_growth_report(extract_polynomial(net).layers);
    CHECK(degrees == std::vector<unsigned>{2, 0, 0});
}

TEST_CASE("demo defaults: degrees 2 and 4")
{
    const auto r = run_equiv_demo(EquivDemoConfig{});
    CHECK(r.degrees == std::vector<unsigned>{2, 4});
    CHECK(r.max_deviation <= 1e-8);
    EquivDemoConfig three;
    three.layers = 3;
    CHECK(run_equiv_demo(three).degrees == std::vector<unsigned>{2, 4, 8});
}

TEST_CASE("dropout layers are skipped")
{
    EquivDemoConfig c;
    c.seed = 7;
    const auto base = random_polynomial_net(c);
    std::vector<Layer> layers = base.layers();
    Layer drop;
    drop.kind = LayerKind::Dropout;
    drop.dropout_rate = 0.3;
    layers.insert(layers.begin() + 1, drop);
    const MLP with_drop(base.input_width(), layers);
    const auto a = extract_polynomial(base).outputs();
    const auto b = extract_polynomial(with_drop).outputs();
    CHECK(same(a[0], b[0], 0.0));
}

TEST_CASE("unsupported activations and budget overflow")
{
    const MLP relu(2, {dense(Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Zero(2), Activation::Relu)});
    try {
        (void)extract_polynomial(relu);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Unsupported);
    }
    EquivDemoConfig c;
    c.inputs = 3;
    c.layers = 3;
    c.width = 5;
    ExtractionOptions tiny;
    tiny.max_coefficients = 50;
    try {
        (void)extract_polynomial(random_polynomial_net(c), tiny);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MemoryBudget);
    }
}

TEST_CASE("polynomial text output")
{
    SymbolicPoly p(2);
    p.add_term({0, 0}, 0.5);
    p.add_term({1, 2}, -3.0);
    std::ostringstream out;
    write_polynomial(out, p);
    CHECK(out.str() == "polynomial v1\nvars 2\n0.5 1\n-3 0^1 1^2\nend\n");
}

TEST_CASE("small genuine coefficients survive, cancellation residue does not")
{
    const auto u = SymbolicPoly::variable(1, 0);
    const auto p = poly_pow(poly_add(poly_scale(u, 0.03), SymbolicPoly::constant(1, 1.0)), 8);
    CHECK(p.degree() == 8);
    CHECK(p.coefficient({8}) == doctest::Approx(std::pow(0.03, 8)).epsilon(1e-12));

    const auto a = poly_add(u, SymbolicPoly::constant(1, 0.1));
    const auto b = poly_add(u, SymbolicPoly::constant(1, -0.1));
    const auto diff = poly_add(poly_mul(a, b), poly_scale(poly_add(poly_mul(u, u), SymbolicPoly::constant(1, -0.01)), -1.0));
    CHECK(diff.is_zero());
}
