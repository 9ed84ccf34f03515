#include "polynn/polyterms.hpp"

#include "polynn/error.hpp"
#include "polynn/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace polynn {

// --- Monomial ---------------------------------------------------------------

Monomial::Monomial(std::vector<Factor> factors) : factors_(std::move(factors))
{
    std::sort(factors_.begin(), factors_.end());
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        if (factors_[i].second == 0) throw Error(ErrorCode::Data, "monomial exponent must be positive");
        if (i > 0 && factors_[i].first == factors_[i - 1].first)
            throw Error(ErrorCode::Data, "monomial repeats a column");
    }
}

unsigned Monomial::degree() const
{
    unsigned d = 0;
    for (const auto& f : factors_) d += f.second;
    return d;
}

unsigned Monomial::exponent_of(std::size_t column) const
{
    for (const auto& [c, e] : factors_)
        if (c == column) return e;
    return 0;
}

std::string Monomial::str() const
{
    std::string s;
    for (const auto& [c, e] : factors_) {
        if (!s.empty()) s += ' ';
        s += std::to_string(c) + '^' + std::to_string(e);
    }
    return s;
}

std::string Monomial::label(const std::vector<std::string>& names) const
{
    std::string s;
    for (const auto& [c, e] : factors_) {
        if (!s.empty()) s += '*';
        s += c < names.size() ? names[c] : "x" + std::to_string(c);
        if (e > 1) s += '^' + std::to_string(e);
    }
    return s;
}

Monomial parse_monomial(const std::string& text)
{
    std::istringstream in(text);
    std::vector<Monomial::Factor> factors;
    std::string tok;
    while (in >> tok) {
        const auto caret = tok.find('^');
        if (caret == std::string::npos) throw Error(ErrorCode::ModelFormat, "bad monomial factor '" + tok + "'");
        try {
            factors.emplace_back(std::stoul(tok.substr(0, caret)), static_cast<unsigned>(std::stoul(tok.substr(caret + 1))));
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::ModelFormat, "bad monomial factor '" + tok + "'");
        }
    }
    if (factors.empty()) throw Error(ErrorCode::ModelFormat, "empty monomial");
    return Monomial(std::move(factors));
}

PolySpec::PolySpec(unsigned d, unsigned cap) : degree(d), max_interact_degree(cap)
{
    if (d < 1) throw Error(ErrorCode::Usage, "polynomial degree must be >= 1");
    if (cap < 1 || cap > d) throw Error(ErrorCode::Usage, "interaction degree must be in [1, degree]");
}

// --- TermSet ----------------------------------------------------------------

TermSet::TermSet(std::size_t width, DummyGroups groups, PolySpec spec, std::vector<Monomial> terms)
    : width_(width), groups_(std::move(groups)), spec_(spec), terms_(std::move(terms))
{
    auto sorted = terms_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw Error(ErrorCode::Data, "term set contains duplicate monomials");
    for (const auto& t : terms_)
        for (const auto& f : t.factors())
            if (f.first >= width_) throw Error(ErrorCode::Data, "monomial references column beyond design width");
}

TermSet TermSet::with_terms(std::vector<Monomial> terms) const
{
    return TermSet(width_, groups_, spec_, std::move(terms));
}

namespace {

struct Enumerator {
    std::size_t width;
    const PolySpec& spec;
    std::vector<std::ptrdiff_t> group;  // -1 for numeric
    std::vector<bool> group_used;
    std::vector<Monomial::Factor> current;
    std::vector<Monomial> out;

    void run(std::size_t start, unsigned remaining, unsigned total)
    {
        for (std::size_t c = start; c < width; ++c) {
            const auto g = group[c];
            if (g >= 0 && group_used[static_cast<std::size_t>(g)]) continue;
            const unsigned max_exp = g >= 0 ? 1u : remaining;
            for (unsigned e = std::min(max_exp, remaining); e >= 1; --e) {
                // Interaction cap: mixed monomials are limited to the cap degree.
                if (e < total && total > spec.max_interact_degree) continue;
                current.emplace_back(c, e);
                if (g >= 0) group_used[static_cast<std::size_t>(g)] = true;
                if (remaining == e)
                    out.emplace_back(current);
                else
                    run(c + 1, remaining - e, total);
                if (g >= 0) group_used[static_cast<std::size_t>(g)] = false;
                current.pop_back();
            }
        }
    }
};

}  // namespace

TermSet enumerate_terms(std::size_t width, const DummyGroups& groups, const PolySpec& spec)
{
    if (width < 1) throw Error(ErrorCode::Data, "design width must be >= 1");
    Enumerator en{width, spec, std::vector<std::ptrdiff_t>(width, -1), std::vector<bool>(groups.groups.size(), false), {}, {}};
    for (std::size_t g = 0; g < groups.groups.size(); ++g)
        for (auto c : groups.groups[g].design_columns) {
            if (c >= width) throw Error(ErrorCode::Data, "dummy group references column beyond design width");
            en.group[c] = static_cast<std::ptrdiff_t>(g);
        }
    for (unsigned k = 1; k <= spec.degree; ++k) en.run(0, k, k);
    return TermSet(width, groups, spec, std::move(en.out));
}

TermBound count_terms_bound(std::uint64_t p, unsigned d)
{
    if (p < 1 || d < 1) throw Error(ErrorCode::Usage, "count_terms_bound needs p >= 1 and d >= 1");
    TermBound b{p, false};
    for (unsigned k = 1; k < d; ++k) {
        std::uint64_t next = 0;
        if (__builtin_mul_overflow(b.value, p + 1, &next) || p + 1 == 0) {
            return TermBound{UINT64_MAX, true};
        }
        b.value = next;
    }
    return b;
}

Eigen::MatrixXd expand(const Eigen::MatrixXd& design, const TermSet& terms, const ExpandOptions& options)
{
    if (static_cast<std::size_t>(design.cols()) != terms.width())
        throw Error(ErrorCode::Data, "design width " + std::to_string(design.cols()) + " does not match term set width " +
                                         std::to_string(terms.width()));
    const auto n = static_cast<std::uint64_t>(design.rows());
    const auto l = static_cast<std::uint64_t>(terms.size());
    if (l > 0 && n > options.max_cells / l)
        throw Error(ErrorCode::MemoryBudget,
                    "polynomial matrix of " + std::to_string(n) + " x " + std::to_string(l) +
                        " exceeds the cell budget of " + std::to_string(options.max_cells) +
                        "; reduce dimension with PCA, lower the degree, or drop random columns");

    Eigen::MatrixXd out(design.rows(), static_cast<Eigen::Index>(l));
    parallel_for(terms.size(), [&](std::size_t j) {
        auto col = out.col(static_cast<Eigen::Index>(j));
        col.setOnes();
        for (const auto& [c, e] : terms[j].factors()) {
            const auto src = design.col(static_cast<Eigen::Index>(c));
            for (unsigned k = 0; k < e; ++k) col.array() *= src.array();
        }
    });
    return out;
}

TermSet drop_random_columns(const TermSet& terms, double keep_fraction, std::uint64_t seed)
{
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw Error(ErrorCode::Usage, "keep fraction must be in (0, 1]");
    const std::size_t total = terms.size();
    // Guard against products like 0.3 * 10 landing just above an integer.
    const auto target = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(total) - 1e-9));

    std::vector<std::size_t> higher;
    std::size_t linear = 0;
    for (std::size_t i = 0; i < total; ++i) {
        if (terms[i].degree() == 1)
            ++linear;
        else
            higher.push_back(i);
    }
    const std::size_t extra = target > linear ? std::min(target - linear, higher.size()) : 0;

    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < extra; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (higher.size() - i));
        std::swap(higher[i], higher[j]);
    }
    std::vector<bool> keep(total, false);
    for (std::size_t i = 0; i < total; ++i) keep[i] = terms[i].degree() == 1;
    for (std::size_t i = 0; i < extra; ++i) keep[higher[i]] = true;

    std::vector<Monomial> kept;
    for (std::size_t i = 0; i < total; ++i)
        if (keep[i]) kept.push_back(terms[i]);
    return terms.with_terms(std::move(kept));
}

// --- Text container ---------------------------------------------------------

void write_termset(std::ostream& out, const TermSet& terms)
{
    out << "termset v1\n";
    out << "width " << terms.width() << '\n';
    out << "spec " << terms.spec().degree << ' ' << terms.spec().max_interact_degree << '\n';
    for (const auto& g : terms.groups().groups) {
        out << "group " << g.source_column << ':';
        for (auto c : g.design_columns) out << ' ' << c;
        out << '\n';
    }
    for (const auto& t : terms.terms()) out << "term " << t.str() << '\n';
    out << "end\n";
}

TermSet read_termset(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != "termset v1") throw Error(ErrorCode::ModelFormat, "expected 'termset v1' header");
    std::size_t width = 0;
    PolySpec spec;
    DummyGroups groups;
    std::vector<Monomial> terms;
    bool ended = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "width") {
            ls >> width;
        } else if (key == "spec") {
            unsigned d = 0, cap = 0;
            ls >> d >> cap;
            spec = PolySpec(d, cap);
        } else if (key == "group") {
            DummyGroup g;
            char colon = 0;
            ls >> g.source_column >> colon;
            std::size_t c = 0;
            while (ls >> c) g.design_columns.push_back(c);
            groups.groups.push_back(std::move(g));
        } else if (key == "term") {
            std::string rest;
            std::getline(ls, rest);
            terms.push_back(parse_monomial(rest));
        } else if (key == "end") {
            ended = true;
            break;
        } else if (!key.empty()) {
            throw Error(ErrorCode::ModelFormat, "unexpected termset line '" + line + "'");
        }
        if (ls.fail() && key != "group") throw Error(ErrorCode::ModelFormat, "malformed termset line '" + line + "'");
    }
    if (!ended) throw Error(ErrorCode::ModelFormat, "termset missing 'end'");
    for (std::size_t c = 0; c < width; ++c)
        if (!groups.group_of(c)) groups.numeric_indices.push_back(c);
    return TermSet(width, std::move(groups), spec, std::move(terms));
}

}  // namespace polynn
