#pragma once

#include "polynn/dataset.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace polynn {

// Product of design columns raised to positive powers. Factors are kept
// sorted by column index.
class Monomial {
public:
    using Factor = std::pair<std::size_t, unsigned>;  // (column, exponent)

    Monomial() = default;
    explicit Monomial(std::vector<Factor> factors);

    [[nodiscard]] const std::vector<Factor>& factors() const { return factors_; }
    [[nodiscard]] unsigned degree() const;
    [[nodiscard]] std::size_t distinct_columns() const { return factors_.size(); }
    [[nodiscard]] unsigned exponent_of(std::size_t column) const;

    // Rendered as space-separated `col^exp` factors, e.g. "0^2 3^1".
    [[nodiscard]] std::string str() const;
    [[nodiscard]] std::string label(const std::vector<std::string>& names) const;

    friend bool operator==(const Monomial&, const Monomial&) = default;
    friend auto operator<=>(const Monomial&, const Monomial&) = default;

private:
    std::vector<Factor> factors_;
};

[[nodiscard]] Monomial parse_monomial(const std::string& text);

struct PolySpec {
    unsigned degree = 1;
    // Monomials touching two or more columns are capped at this total degree.
    unsigned max_interact_degree = 1;

    PolySpec() = default;
    PolySpec(unsigned d, unsigned cap);
    explicit PolySpec(unsigned d) : PolySpec(d, d) {}

    friend bool operator==(const PolySpec&, const PolySpec&) = default;
};

class TermSet {
public:
    TermSet() = default;
    TermSet(std::size_t width, DummyGroups groups, PolySpec spec, std::vector<Monomial> terms);

    [[nodiscard]] std::size_t width() const { return width_; }
    [[nodiscard]] const DummyGroups& groups() const { return groups_; }
    [[nodiscard]] const PolySpec& spec() const { return spec_; }
    [[nodiscard]] const std::vector<Monomial>& terms() const { return terms_; }
    [[nodiscard]] std::size_t size() const { return terms_.size(); }
    [[nodiscard]] const Monomial& operator[](std::size_t i) const { return terms_[i]; }

    [[nodiscard]] TermSet with_terms(std::vector<Monomial> terms) const;

private:
    std::size_t width_ = 0;
    DummyGroups groups_;
    PolySpec spec_;
    std::vector<Monomial> terms_;
};

// Every admissible monomial of degree 1..spec.degree in graded lexicographic
// order. Dummy columns never carry an exponent above 1 and two dummies from
// the same categorical source never multiply (both products are degenerate).
[[nodiscard]] TermSet enumerate_terms(std::size_t width, const DummyGroups& groups, const PolySpec& spec);

struct TermBound {
    std::uint64_t value = 0;
    bool saturated = false;
};

// Upper bound on the all-numeric column count: B(1) = p, B(d+1) = (p+1) B(d).
[[nodiscard]] TermBound count_terms_bound(std::uint64_t p, unsigned d);

struct ExpandOptions {
    std::uint64_t max_cells = 200'000'000;
};

[[nodiscard]] Eigen::MatrixXd expand(const Eigen::MatrixXd& design, const TermSet& terms,
                                     const ExpandOptions& options = {});

// Keeps ceil(keep_fraction * |terms|) monomials (never fewer than the linear
// ones). Linear terms always survive; higher-degree survivors are drawn
// uniformly. Original order is preserved.
[[nodiscard]] TermSet drop_random_columns(const TermSet& terms, double keep_fraction, std::uint64_t seed);

// Text container:
//
//     termset v1
//     width <m>
//     spec <degree> <max_interact_degree>
//     group <col> <col> ...        one line per dummy group
//     term <col>^<exp> ...         one line per monomial, in order
//     end
void write_termset(std::ostream& out, const TermSet& terms);
[[nodiscard]] TermSet read_termset(std::istream& in);

}  // namespace polynn
