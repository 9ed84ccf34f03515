#include "polynn/fitcore.hpp"

#include "polynn/error.hpp"
#include "polynn/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace polynn {

void check_finite(const Eigen::MatrixXd& x, const char* what)
{
    if (!x.allFinite()) throw Error(ErrorCode::Numerical, std::string(what) + " contains non-finite values");
}

// --- OLS -----------------------------------------------------------------------

OlsFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
{
    if (x.rows() < 1) throw Error(ErrorCode::Data, "OLS needs at least one row");
    if (x.rows() != y.size()) throw Error(ErrorCode::Data, "OLS row count mismatch");
    check_finite(x, "design");
    check_finite(y, "response");

    const Eigen::Index n = x.rows();
    const Eigen::Index l = x.cols();
    const Eigen::RowVectorXd xbar = x.colwise().mean();
    const double ybar = y.mean();
    const Eigen::MatrixXd xc = x.rowwise() - xbar;
    const Eigen::VectorXd yc = y.array() - ybar;

    OlsFit fit;
    fit.coefficients = Eigen::VectorXd::Zero(l);
    fit.std_errors = Eigen::VectorXd::Constant(l, std::numeric_limits<double>::quiet_NaN());

    Eigen::Index rank = 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
    Eigen::MatrixXd rinv;  // inverse of the leading rank x rank block of R
    if (l > 0) {
        qr.compute(xc);
        rank = qr.rank();
        const Eigen::VectorXd qty = qr.householderQ().adjoint() * yc;
        const auto r11 = qr.matrixQR().topLeftCorner(rank, rank).triangularView<Eigen::Upper>();
        const Eigen::VectorXd z = r11.solve(qty.head(rank));
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index i = 0; i < rank; ++i) fit.coefficients(perm(i)) = z(i);
        for (Eigen::Index i = rank; i < l; ++i) fit.aliased.push_back(static_cast<std::size_t>(perm(i)));
        std::sort(fit.aliased.begin(), fit.aliased.end());
        rinv = r11.solve(Eigen::MatrixXd::Identity(rank, rank));
    }
    fit.rank = static_cast<std::size_t>(rank);
    fit.intercept = ybar - xbar.dot(fit.coefficients);
    fit.fitted = (x * fit.coefficients).array() + fit.intercept;
    fit.rss = (y - fit.fitted).squaredNorm();
    fit.tss = yc.squaredNorm();

    const Eigen::Index dof = n - rank - 1;
    if (dof > 0) {
        const double sigma2 = fit.rss / static_cast<double>(dof);
        Eigen::VectorXd xbar_perm(rank);
        if (rank > 0) {
            const auto& perm = qr.colsPermutation().indices();
            // cov(beta_perm) = sigma2 * Rinv Rinv^T
            const Eigen::MatrixXd cov = rinv * rinv.transpose();
            for (Eigen::Index i = 0; i < rank; ++i) {
                fit.std_errors(perm(i)) = std::sqrt(sigma2 * cov(i, i));
                xbar_perm(i) = xbar(perm(i));
            }
            fit.intercept_se = std::sqrt(sigma2 / static_cast<double>(n) + sigma2 * xbar_perm.dot(cov * xbar_perm));
        } else {
            fit.intercept_se = std::sqrt(sigma2 / static_cast<double>(n));
        }
    } else {
        fit.intercept_se = std::numeric_limits<double>::quiet_NaN();
    }
    return fit;
}

// --- Standardization --------------------------------------------------------------

Standardization Standardization::identity(Eigen::Index width)
{
    return {Eigen::VectorXd::Zero(width), Eigen::VectorXd::Ones(width)};
}

Standardization Standardization::of(const Eigen::MatrixXd& x)
{
    Standardization s;
    s.means = x.colwise().mean().transpose();
    s.scales.resize(x.cols());
    const double denom = x.rows() > 1 ? static_cast<double>(x.rows() - 1) : 1.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double sd = std::sqrt((x.col(j).array() - s.means(j)).square().sum() / denom);
        s.scales(j) = sd > 0.0 && std::isfinite(sd) ? sd : 1.0;
    }
    return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& x) const
{
    return (x.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
}

// --- Ridge ----------------------------------------------------------------------

LinearFit fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::Usage, "ridge lambda must be a positive number");
    if (x.rows() != y.size()) throw Error(ErrorCode::Data, "ridge row count mismatch");
    check_finite(x, "design");
    check_finite(y, "response");

    const auto st = Standardization::of(x);
    const Eigen::MatrixXd z = st.apply(x);
    const double ybar = y.mean();
    const Eigen::VectorXd yc = y.array() - ybar;

    Eigen::MatrixXd gram = z.transpose() * z;
    gram.diagonal().array() += lambda;
    const Eigen::VectorXd beta_std = gram.ldlt().solve(z.transpose() * yc);

    LinearFit fit;
    fit.coefficients = beta_std.array() / st.scales.array();
    fit.intercept = ybar - st.means.dot(fit.coefficients);
    return fit;
}

// --- Logistic ---------------------------------------------------------------------

namespace {

double sigmoid(double t) { return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

// Mean negative log-likelihood; log(1 + e^t) evaluated stably.
double neg_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& target)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double t = eta(i);
        const double softplus = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
        s += softplus - target(i) * t;
    }
    return s / static_cast<double>(eta.size());
}

// Binary IRLS on [1, z]; returns the stacked (intercept, slopes) vector.
Eigen::VectorXd irls_binary(const Eigen::MatrixXd& za, const Eigen::VectorXd& target, const LogisticOptions& opt,
                            ClassFitInfo& info)
{
    const Eigen::Index k = za.cols();
    const double n = static_cast<double>(za.rows());
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(za.rows());
    double loss = neg_loglik(eta, target);

    for (info.iterations = 0; info.iterations < opt.max_iter; ++info.iterations) {
        const Eigen::VectorXd mu = eta.unaryExpr([](double t) { return sigmoid(t); });
        const Eigen::VectorXd grad = za.transpose() * (mu - target) / n;
        if (grad.lpNorm<Eigen::Infinity>() <= opt.tol) {
            info.converged = true;
            break;
        }
        const Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).sqrt();
        const Eigen::MatrixXd zw = za.array().colwise() * w.array();
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(k, k);
        hess.selfadjointView<Eigen::Lower>().rankUpdate(zw.transpose(), 1.0 / n);
        hess = hess.selfadjointView<Eigen::Lower>();
        // Tiny jitter keeps the Newton system solvable once weights vanish.
        hess.diagonal().array() += 1e-10 * std::max(1.0, hess.diagonal().maxCoeff());
        const Eigen::VectorXd step = hess.ldlt().solve(grad);

        double t = 1.0;
        Eigen::VectorXd next;
        Eigen::VectorXd next_eta;
        double next_loss = loss;
        for (int halvings = 0; halvings < 30; ++halvings, t *= 0.5) {
            next = beta - t * step;
            next_eta = za * next;
            next_loss = neg_loglik(next_eta, target);
            if (std::isfinite(next_loss) && next_loss <= loss) break;
        }
        if (!(next_loss <= loss)) {
            info.converged = true;  // no descent possible at working precision
            break;
        }
        beta = std::move(next);
        eta = std::move(next_eta);
        loss = next_loss;

        const double norm = beta.norm();
        if (norm > opt.max_coef_norm) {
            beta *= opt.max_coef_norm / norm;
            info.separated = true;
            break;
        }
    }
    if (!info.separated) {
        // Every row on the correct side of the fitted hyperplane means complete separation.
        bool all = true;
        for (Eigen::Index i = 0; i < eta.size() && all; ++i) all = (target(i) > 0.5) ? eta(i) > 0 : eta(i) < 0;
        info.separated = all;
    }
    return beta;
}

}  // namespace

Eigen::MatrixXd LogisticFit::scores(const Eigen::MatrixXd& x) const
{
    const Eigen::MatrixXd z = standardization.apply(x);
    Eigen::MatrixXd eta = z * coefficients;
    eta.rowwise() += intercepts.transpose();
    return eta.unaryExpr([](double t) { return sigmoid(t); });
}

LogisticFit fit_logistic_ova(const Eigen::MatrixXd& x, const std::vector<std::size_t>& labels, std::size_t classes,
                             const LogisticOptions& options)
{
    if (classes < 2) throw Error(ErrorCode::Data, "classification needs at least 2 classes");
    if (static_cast<std::size_t>(x.rows()) != labels.size()) throw Error(ErrorCode::Data, "label count mismatch");
    check_finite(x, "design");
    std::vector<std::size_t> counts(classes, 0);
    for (auto c : labels) {
        if (c >= classes) throw Error(ErrorCode::Data, "label out of range");
        ++counts[c];
    }
    for (std::size_t c = 0; c < classes; ++c)
        if (counts[c] == 0) throw Error(ErrorCode::Data, "class " + std::to_string(c) + " has no training cases");

    LogisticFit fit;
    fit.standardization = Standardization::of(x);
    Eigen::MatrixXd za(x.rows(), x.cols() + 1);
    za.col(0).setOnes();
    za.rightCols(x.cols()) = fit.standardization.apply(x);

    fit.intercepts.resize(static_cast<Eigen::Index>(classes));
    fit.coefficients.resize(x.cols(), static_cast<Eigen::Index>(classes));
    fit.info.resize(classes);
    parallel_for(classes, [&](std::size_t c) {
        Eigen::VectorXd target(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) target(i) = labels[static_cast<std::size_t>(i)] == c ? 1.0 : 0.0;
        const Eigen::VectorXd beta = irls_binary(za, target, options, fit.info[c]);
        fit.intercepts(static_cast<Eigen::Index>(c)) = beta(0);
        fit.coefficients.col(static_cast<Eigen::Index>(c)) = beta.tail(x.cols());
    });
    for (std::size_t c = 0; c < classes; ++c) {
        if (fit.info[c].separated)
            fit.warnings.push_back("class " + std::to_string(c) +
                                   ": perfect separation; coefficients are not identified");
        else if (!fit.info[c].converged)
            fit.warnings.push_back("class " + std::to_string(c) + ": IRLS reached max_iter without converging");
    }
    return fit;
}

std::vector<std::size_t> argmax_rows(const Eigen::MatrixXd& scores)
{
    std::vector<std::size_t> out(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        scores.row(i).maxCoeff(&best);
        out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    }
    return out;
}

// --- Metrics ----------------------------------------------------------------------

namespace {
void check_lengths(Eigen::Index a, Eigen::Index b)
{
    if (a != b || a < 1) throw Error(ErrorCode::Data, "metric inputs must have equal nonzero length");
}
}  // namespace

double mean_abs_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& actual)
{
    check_lengths(pred.size(), actual.size());
    return (pred - actual).cwiseAbs().mean();
}

double pcc(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& actual)
{
    check_lengths(static_cast<Eigen::Index>(pred.size()), static_cast<Eigen::Index>(actual.size()));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == actual[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double correlation(const Eigen::VectorXd& pred, const Eigen::VectorXd& actual)
{
    check_lengths(pred.size(), actual.size());
    const Eigen::VectorXd a = pred.array() - pred.mean();
    const Eigen::VectorXd b = actual.array() - actual.mean();
    const double denom = std::sqrt(a.squaredNorm() * b.squaredNorm());
    if (!(denom > 0.0)) throw Error(ErrorCode::Numerical, "correlation undefined for zero-variance input");
    return a.dot(b) / denom;
}

double r_squared(const Eigen::VectorXd& pred, const Eigen::VectorXd& actual)
{
    check_lengths(pred.size(), actual.size());
    const double tss = (actual.array() - actual.mean()).square().sum();
    const double rss = (actual - pred).squaredNorm();
    return tss > 0.0 ? 1.0 - rss / tss : (rss == 0.0 ? 1.0 : 0.0);
}

// --- PolyModel ----------------------------------------------------------------------

std::string_view to_string(FitMethod m)
{
    switch (m) {
    case FitMethod::Ols: return "ols";
    case FitMethod::Ridge: return "ridge";
    case FitMethod::Logistic: return "logistic";
    }
    return "?";
}

FitMethod parse_fit_method(std::string_view text)
{
    if (text == "ols") return FitMethod::Ols;
    if (text == "ridge") return FitMethod::Ridge;
    if (text == "logistic") return FitMethod::Logistic;
    throw Error(ErrorCode::Usage, "unknown fit method '" + std::string(text) + "'");
}

std::size_t PolyModel::design_width() const
{
    return pca ? static_cast<std::size_t>(pca->means.size()) : terms.width();
}

Eigen::MatrixXd PolyModel::raw_coefficients() const
{
    return coefficients.array().colwise() / standardization.scales.array();
}

Eigen::VectorXd PolyModel::raw_intercepts() const
{
    const Eigen::MatrixXd raw = raw_coefficients();
    return intercepts - (standardization.means.transpose() * raw).transpose();
}

Prediction predict(const PolyModel& model, const Eigen::MatrixXd& design)
{
    if (static_cast<std::size_t>(design.cols()) != model.design_width())
        throw Error(ErrorCode::Data, "design width " + std::to_string(design.cols()) + " does not match model width " +
                                         std::to_string(model.design_width()));
    const Eigen::MatrixXd reduced = model.pca ? pca_transform(*model.pca, design) : design;
    const Eigen::MatrixXd z = model.standardization.apply(expand(reduced, model.terms));
    Eigen::MatrixXd eta = z * model.coefficients;
    eta.rowwise() += model.intercepts.transpose();

    Prediction out;
    if (model.is_classifier()) {
        out.scores = eta.unaryExpr([](double t) { return sigmoid(t); });
        out.classes = argmax_rows(out.scores);
    } else {
        out.values = eta.col(0);
    }
    return out;
}

FitOutput fit_on_terms(const Eigen::MatrixXd& expanded, const TermSet& terms, const Eigen::VectorXd& response,
                       const FitOptions& options, std::size_t classes)
{
    if (static_cast<std::size_t>(expanded.cols()) != terms.size())
        throw Error(ErrorCode::Data, "expanded matrix does not match term set");
    FitOutput out;
    auto& m = out.model;
    m.terms = terms;
    m.method = options.method;
    m.lambda = options.lambda;
    const auto l = expanded.cols();

    switch (options.method) {
    case FitMethod::Ols: {
        auto fit = fit_ols(expanded, response);
        m.standardization = Standardization::identity(l);
        m.intercepts = Eigen::VectorXd::Constant(1, fit.intercept);
        m.coefficients = fit.coefficients;
        out.aliased = fit.aliased;
        if (!fit.aliased.empty())
            out.warnings.push_back(std::to_string(fit.aliased.size()) + " aliased term(s) given zero coefficients");
        break;
    }
    case FitMethod::Ridge: {
        auto fit = fit_ridge(expanded, response, options.lambda);
        m.standardization = Standardization::of(expanded);
        m.coefficients = fit.coefficients.array() * m.standardization.scales.array();
        m.intercepts = Eigen::VectorXd::Constant(1, fit.intercept + m.standardization.means.dot(fit.coefficients));
        break;
    }
    case FitMethod::Logistic: {
        std::vector<std::size_t> labels(static_cast<std::size_t>(response.size()));
        for (Eigen::Index i = 0; i < response.size(); ++i) labels[static_cast<std::size_t>(i)] = static_cast<std::size_t>(response(i));
        auto fit = fit_logistic_ova(expanded, labels, classes, options.logistic);
        m.standardization = fit.standardization;
        m.intercepts = fit.intercepts;
        m.coefficients = fit.coefficients;
        out.warnings.insert(out.warnings.end(), fit.warnings.begin(), fit.warnings.end());
        break;
    }
    }

    Eigen::MatrixXd eta = m.standardization.apply(expanded) * m.coefficients;
    eta.rowwise() += m.intercepts.transpose();
    if (m.is_classifier()) {
        out.fitted.scores = eta.unaryExpr([](double t) { return sigmoid(t); });
        out.fitted.classes = argmax_rows(out.fitted.scores);
    } else {
        out.fitted.values = eta.col(0);
    }
    return out;
}

FitOutput fit_poly_model(const Design& design, const Eigen::VectorXd& response, const Schema& schema,
                         const FitOptions& options)
{
    if (design.x.rows() != response.size()) throw Error(ErrorCode::Data, "design and response row counts differ");
    if (options.method == FitMethod::Logistic && !schema.is_classification())
        throw Error(ErrorCode::Usage, "logistic fit requires a class response");
    if (options.method != FitMethod::Logistic && schema.is_classification())
        throw Error(ErrorCode::Usage, "class response requires the logistic method");

    std::optional<PCABasis> basis;
    Eigen::MatrixXd reduced;
    DummyGroups groups;
    if (options.pca_fraction) {
        basis = pca_fit(design.x, *options.pca_fraction);
        reduced = pca_transform(*basis, design.x);
        for (Eigen::Index j = 0; j < reduced.cols(); ++j) groups.numeric_indices.push_back(static_cast<std::size_t>(j));
    } else {
        reduced = design.x;
        groups = design.groups;
    }
    if (reduced.cols() < 1) throw Error(ErrorCode::Data, "design has no columns");

    TermSet terms = enumerate_terms(static_cast<std::size_t>(reduced.cols()), groups, options.spec);
    if (options.keep_fraction) terms = drop_random_columns(terms, *options.keep_fraction, options.seed);
    const Eigen::MatrixXd expanded = expand(reduced, terms, options.expand);

    const std::size_t classes = schema.is_classification() ? schema.response().levels.size() : 0;
    FitOutput out = fit_on_terms(expanded, terms, response, options, classes);
    out.model.schema = schema;
    out.model.design_names = design.names;
    out.model.pca = std::move(basis);
    if (schema.is_classification()) out.model.class_levels = schema.response().levels;
    out.warnings.insert(out.warnings.begin(), design.warnings.begin(), design.warnings.end());
    return out;
}

}  // namespace polynn
