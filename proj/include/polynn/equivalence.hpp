#pragma once

#include "polynn/mlp.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace polynn {

// Multivariate polynomial over a fixed number of input variables, stored as
// exponent-vector -> coefficient. After every operation a coefficient is
// dropped when it is exactly zero or when cancellation left it below
// kPruneTol times the summed magnitude of its contributions.
class SymbolicPoly {
public:
    using Exponents = std::vector<unsigned>;
    static constexpr double kPruneTol = 1e-12;

    explicit SymbolicPoly(std::size_t vars = 0) : vars_(vars) {}

    [[nodiscard]] static SymbolicPoly constant(std::size_t vars, double c);
    [[nodiscard]] static SymbolicPoly variable(std::size_t vars, std::size_t index);

    [[nodiscard]] std::size_t vars() const { return vars_; }
    [[nodiscard]] const std::map<Exponents, double>& terms() const { return terms_; }
    [[nodiscard]] std::size_t size() const { return terms_.size(); }
    [[nodiscard]] bool is_zero() const { return terms_.empty(); }

    // Max total degree; 0 for constants and for the zero polynomial.
    [[nodiscard]] unsigned degree() const;
    [[nodiscard]] double constant_term() const;
    [[nodiscard]] double coefficient(const Exponents& e) const;
    [[nodiscard]] double evaluate(std::span<const double> point) const;

    void add_term(const Exponents& e, double c);
    void prune();  // drops exact zeros

    // Human-readable, e.g. "1.5 + 2*u^2 - 0.25*u*v".
    [[nodiscard]] std::string str(const std::vector<std::string>& names = {}) const;

private:
    std::size_t vars_ = 0;
    std::map<Exponents, double> terms_;
};

[[nodiscard]] SymbolicPoly poly_add(const SymbolicPoly& a, const SymbolicPoly& b);
[[nodiscard]] SymbolicPoly poly_scale(const SymbolicPoly& a, double s);
[[nodiscard]] SymbolicPoly poly_mul(const SymbolicPoly& a, const SymbolicPoly& b);
[[nodiscard]] SymbolicPoly poly_pow(const SymbolicPoly& a, unsigned k);

struct ExtractionOptions {
    std::size_t max_coefficients = 1'000'000;  // summed over all units of a layer
};

struct Extraction {
    // Post-activation polynomials of every dense layer, in order; the last
    // entry holds the network outputs.
    std::vector<std::vector<SymbolicPoly>> layers;

    [[nodiscard]] const std::vector<SymbolicPoly>& outputs() const { return layers.back(); }
};

// Exact polynomial computed by a network whose activations are all square or
// identity (dropout layers act as identity at inference).
[[nodiscard]] Extraction extract_polynomial(const MLP& net, const ExtractionOptions& options = {});

// Max over outputs of max_i |forward - poly| / max_i |forward| at n_points
// uniform points in [-1, 1]^p.
[[nodiscard]] double equivalence_check(const MLP& net, const std::vector<SymbolicPoly>& outputs,
                                       std::size_t n_points, std::uint64_t seed);

// Max total degree after each layer.
[[nodiscard]] std::vector<unsigned> degree_growth_report(const std::vector<std::vector<SymbolicPoly>>& layers);

// Term-set text format extended with a leading coefficient; the constant
// term is written with factor list "1":
//
//     polynomial v1
//     vars <p>
//     <coef> <col>^<exp> ...
//     end
void write_polynomial(std::ostream& out, const SymbolicPoly& poly);

}  // namespace polynn
