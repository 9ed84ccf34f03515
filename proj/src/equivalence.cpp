#include "polynn/equivalence.hpp"

#include "polynn/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <cstdio>
#include <ostream>
#include <random>

namespace polynn {

namespace {

// Running sum and summed magnitude per monomial, so cancellation can be told
// apart from a genuinely small coefficient.
struct Accumulator {
    std::map<SymbolicPoly::Exponents, std::pair<double, double>> terms;

    void add(const SymbolicPoly::Exponents& e, double c)
    {
        auto& [sum, mag] = terms[e];
        sum += c;
        mag += std::abs(c);
    }

    SymbolicPoly finish(std::size_t vars) const
    {
        SymbolicPoly out(vars);
        for (const auto& [e, sm] : terms)
            if (sm.first != 0.0 && std::abs(sm.first) > SymbolicPoly::kPruneTol * sm.second) out.add_term(e, sm.first);
        return out;
    }
};

}  // namespace

SymbolicPoly SymbolicPoly::constant(std::size_t vars, double c)
{
    SymbolicPoly p(vars);
    p.add_term(Exponents(vars, 0), c);
    p.prune();
    return p;
}

SymbolicPoly SymbolicPoly::variable(std::size_t vars, std::size_t index)
{
    if (index >= vars) throw Error(ErrorCode::Usage, "variable index out of range");
    SymbolicPoly p(vars);
    Exponents e(vars, 0);
    e[index] = 1;
    p.add_term(e, 1.0);
    return p;
}

unsigned SymbolicPoly::degree() const
{
    unsigned d = 0;
    for (const auto& [e, c] : terms_) {
        unsigned s = 0;
        for (auto k : e) s += k;
        d = std::max(d, s);
    }
    return d;
}

double SymbolicPoly::coefficient(const Exponents& e) const
{
    const auto it = terms_.find(e);
    return it == terms_.end() ? 0.0 : it->second;
}

double SymbolicPoly::constant_term() const { return coefficient(Exponents(vars_, 0)); }

double SymbolicPoly::evaluate(std::span<const double> point) const
{
    if (point.size() != vars_) throw Error(ErrorCode::Data, "evaluation point has the wrong dimension");
    double sum = 0.0;
    for (const auto& [e, c] : terms_) {
        double t = c;
        for (std::size_t i = 0; i < vars_; ++i)
            for (unsigned k = 0; k < e[i]; ++k) t *= point[i];
        sum += t;
    }
    return sum;
}

void SymbolicPoly::add_term(const Exponents& e, double c)
{
    if (e.size() != vars_) throw Error(ErrorCode::Data, "exponent vector has the wrong dimension");
    terms_[e] += c;
}

void SymbolicPoly::prune()
{
    std::erase_if(terms_, [](const auto& kv) { return kv.second == 0.0; });
}

std::string SymbolicPoly::str(const std::vector<std::string>& names) const
{
    if (terms_.empty()) return "0";
    std::string s;
    char buf[40];
    // Graded order reads better than the map's lexicographic order.
    std::vector<std::pair<const Exponents*, double>> items;
    for (const auto& [e, c] : terms_) items.emplace_back(&e, c);
    auto deg = [](const Exponents& e) {
        unsigned d = 0;
        for (auto k : e) d += k;
        return d;
    };
    std::stable_sort(items.begin(), items.end(), [&](const auto& a, const auto& b) {
        const auto da = deg(*a.first), db = deg(*b.first);
        return da != db ? da < db : *a.first > *b.first;
    });
    for (const auto& [e, c] : items) {
        const bool first = s.empty();
        std::snprintf(buf, sizeof buf, "%.6g", first ? c : std::abs(c));
        if (!first) s += c < 0 ? " - " : " + ";
        std::string factors;
        for (std::size_t i = 0; i < vars_; ++i) {
            if ((*e)[i] == 0) continue;
            factors += '*';
            factors += i < names.size() ? names[i] : "x" + std::to_string(i + 1);
            if ((*e)[i] > 1) factors += '^' + std::to_string((*e)[i]);
        }
        s += buf + factors;
    }
    return s;
}

SymbolicPoly poly_add(const SymbolicPoly& a, const SymbolicPoly& b)
{
    if (a.vars() != b.vars()) throw Error(ErrorCode::Data, "polynomials over different variable counts");
    Accumulator acc;
    for (const auto& [e, c] : a.terms()) acc.add(e, c);
    for (const auto& [e, c] : b.terms()) acc.add(e, c);
    return acc.finish(a.vars());
}

SymbolicPoly poly_scale(const SymbolicPoly& a, double s)
{
    SymbolicPoly out(a.vars());
    if (s == 0.0) return out;
    for (const auto& [e, c] : a.terms()) out.add_term(e, c * s);
    out.prune();
    return out;
}

SymbolicPoly poly_mul(const SymbolicPoly& a, const SymbolicPoly& b)
{
    if (a.vars() != b.vars()) throw Error(ErrorCode::Data, "polynomials over different variable counts");
    Accumulator acc;
    SymbolicPoly::Exponents e(a.vars());
    for (const auto& [ea, ca] : a.terms())
        for (const auto& [eb, cb] : b.terms()) {
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
            acc.add(e, ca * cb);
        }
    return acc.finish(a.vars());
}

SymbolicPoly poly_pow(const SymbolicPoly& a, unsigned k)
{
    SymbolicPoly result = SymbolicPoly::constant(a.vars(), 1.0);
    SymbolicPoly base = a;
    while (k > 0) {
        if (k & 1u) result = poly_mul(result, base);
        k >>= 1u;
        if (k > 0) base = poly_mul(base, base);
    }
    return result;
}

Extraction extract_polynomial(const MLP& net, const ExtractionOptions& options)
{
    const std::size_t p = net.input_width();
    std::vector<SymbolicPoly> current;
    for (std::size_t i = 0; i < p; ++i) current.push_back(SymbolicPoly::variable(p, i));

    Extraction out;
    for (const auto& L : net.layers()) {
        if (L.kind == LayerKind::Dropout) continue;
        if (L.softmax) throw Error(ErrorCode::Unsupported, "softmax output has no polynomial form");
        if (L.activation != Activation::Square && L.activation != Activation::Identity)
            throw Error(ErrorCode::Unsupported, "layer " + L.label + " uses non-polynomial activation '" +
                                                    std::string(to_string(L.activation)) + "'");
        std::vector<SymbolicPoly> next;
        std::size_t total = 0;
        for (Eigen::Index u = 0; u < L.weights.rows(); ++u) {
            SymbolicPoly pre = SymbolicPoly::constant(p, L.bias(u));
            for (Eigen::Index j = 0; j < L.weights.cols(); ++j) {
                const double w = L.weights(u, j);
                if (w != 0.0) pre = poly_add(pre, poly_scale(current[static_cast<std::size_t>(j)], w));
            }
            if (L.activation == Activation::Square) pre = poly_mul(pre, pre);
            total += pre.size();
            if (total > options.max_coefficients)
                throw Error(ErrorCode::MemoryBudget, "extracted polynomial exceeds the coefficient budget of " +
                                                         std::to_string(options.max_coefficients));
            next.push_back(std::move(pre));
        }
        out.layers.push_back(next);
        current = std::move(next);
    }
    return out;
}

double equivalence_check(const MLP& net, const std::vector<SymbolicPoly>& outputs, std::size_t n_points,
                         std::uint64_t seed)
{
    const std::size_t p = net.input_width();
    if (outputs.size() != net.output_width()) throw Error(ErrorCode::Data, "polynomial count does not match outputs");
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n_points), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;

    const Eigen::MatrixXd f = net.forward(x);
    double worst = 0.0;
    std::vector<double> point(p);
    for (Eigen::Index o = 0; o < f.cols(); ++o) {
        double scale = f.col(o).cwiseAbs().maxCoeff();
        double dev = 0.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < p; ++j) point[j] = x(i, static_cast<Eigen::Index>(j));
            dev = std::max(dev, std::abs(f(i, o) - outputs[static_cast<std::size_t>(o)].evaluate(point)));
        }
        if (scale > 0.0) dev /= scale;
        worst = std::max(worst, dev);
    }
    return worst;
}

std::vector<unsigned> degree_growth_report(const std::vector<std::vector<SymbolicPoly>>& layers)
{
    std::vector<unsigned> out;
    for (const auto& layer : layers) {
        unsigned d = 0;
        for (const auto& poly : layer) d = std::max(d, poly.degree());
        out.push_back(d);
    }
    return out;
}

void write_polynomial(std::ostream& out, const SymbolicPoly& poly)
{
    char buf[32];
    out << "polynomial v1\nvars " << poly.vars() << '\n';
    for (const auto& [e, c] : poly.terms()) {
        std::snprintf(buf, sizeof buf, "%.17g", c);
        out << buf;
        bool any = false;
        for (std::size_t i = 0; i < e.size(); ++i)
            if (e[i] > 0) {
                out << ' ' << i << '^' << e[i];
                any = true;
            }
        if (!any) out << " 1";
        out << '\n';
    }
    out << "end\n";
}

}  // namespace polynn
