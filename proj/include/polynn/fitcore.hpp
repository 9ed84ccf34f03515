#pragma once

#include "polynn/dataset.hpp"
#include "polynn/polyterms.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace polynn {

// --- Least squares ------------------------------------------------------------

struct OlsFit {
    double intercept = 0.0;
    Eigen::VectorXd coefficients;
    // Columns dropped by the pivoted QR rank decision; their coefficients are 0.
    std::vector<std::size_t> aliased;
    std::size_t rank = 0;  // excludes the intercept
    Eigen::VectorXd fitted;
    double rss = 0.0;
    double tss = 0.0;
    // Classical standard errors; NaN when the residual has no degrees of freedom
    // and for aliased columns.
    double intercept_se = 0.0;
    Eigen::VectorXd std_errors;

    [[nodiscard]] double r_squared() const { return tss > 0.0 ? 1.0 - rss / tss : 1.0; }
};

// Least squares with an unpenalized intercept, solved by column-pivoted
// Householder QR on the centered design.
[[nodiscard]] OlsFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct Standardization {
    Eigen::VectorXd means;
    Eigen::VectorXd scales;  // always > 0; constant columns get scale 1

    [[nodiscard]] static Standardization identity(Eigen::Index width);
    [[nodiscard]] static Standardization of(const Eigen::MatrixXd& x);
    [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct LinearFit {
    double intercept = 0.0;
    Eigen::VectorXd coefficients;  // raw (unstandardized) scale
};

// Ridge on internally z-scored columns; the intercept is not penalized and the
// returned coefficients are mapped back to the raw column scale.
[[nodiscard]] LinearFit fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);

// --- One-vs-all logistic --------------------------------------------------------

struct LogisticOptions {
    int max_iter = 100;
    double tol = 1e-8;  // on the max-norm of the mean log-likelihood gradient
    // Separation guard: coefficient vectors (standardized scale) are clipped to
    // this Euclidean norm.
    double max_coef_norm = 1e3;
};

struct ClassFitInfo {
    int iterations = 0;
    bool converged = false;
    bool separated = false;
};

struct LogisticFit {
    Eigen::VectorXd intercepts;    // q, standardized scale
    Eigen::MatrixXd coefficients;  // l x q, standardized scale
    Standardization standardization;
    std::vector<ClassFitInfo> info;
    std::vector<std::string> warnings;

    // Class probabilities of each one-vs-all model, n x q.
    [[nodiscard]] Eigen::MatrixXd scores(const Eigen::MatrixXd& x) const;
};

// One binary IRLS fit per class; classes are fit independently (in parallel
// when threads are available) and the result does not depend on scheduling.
[[nodiscard]] LogisticFit fit_logistic_ova(const Eigen::MatrixXd& x, const std::vector<std::size_t>& labels,
                                           std::size_t classes, const LogisticOptions& options = {});

[[nodiscard]] std::vector<std::size_t> argmax_rows(const Eigen::MatrixXd& scores);

// --- PCA ---------------------------------------------------------------------

struct PCABasis {
    Eigen::MatrixXd components;  // m x r, orthonormal columns
    Eigen::VectorXd means;       // m
    Eigen::VectorXd variances;   // r retained eigenvalues, descending
    double retained_fraction = 0.0;
};

[[nodiscard]] PCABasis pca_fit(const Eigen::MatrixXd& x, double var_fraction = 0.90);
[[nodiscard]] Eigen::MatrixXd pca_transform(const PCABasis& basis, const Eigen::MatrixXd& x);
[[nodiscard]] Eigen::MatrixXd pca_inverse(const PCABasis& basis, const Eigen::MatrixXd& scores);

// --- Metrics -------------------------------------------------------------------

// Mean absolute prediction error in response units (sometimes labelled MAPE;
// it is not a percentage).
[[nodiscard]] double mean_abs_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& actual);
[[nodiscard]] double pcc(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& actual);
[[nodiscard]] double correlation(const Eigen::VectorXd& pred, const Eigen::VectorXd& actual);
[[nodiscard]] double r_squared(const Eigen::VectorXd& pred, const Eigen::VectorXd& actual);

// --- Polynomial model ------------------------------------------------------------

enum class FitMethod { Ols, Ridge, Logistic };

[[nodiscard]] std::string_view to_string(FitMethod m);
[[nodiscard]] FitMethod parse_fit_method(std::string_view text);

struct PolyModel {
    Schema schema;                 // training schema (levels fixed)
    std::vector<std::string> design_names;
    std::optional<PCABasis> pca;   // applied to the encoded design before expansion
    TermSet terms;
    FitMethod method = FitMethod::Ols;
    double lambda = 0.0;
    Standardization standardization;  // of the expanded columns
    Eigen::VectorXd intercepts;       // 1 (regression) or q
    Eigen::MatrixXd coefficients;     // |terms| x (1 or q), standardized scale
    std::vector<std::string> class_levels;

    [[nodiscard]] bool is_classifier() const { return method == FitMethod::Logistic; }
    [[nodiscard]] std::size_t design_width() const;
    // Coefficients mapped back to the raw expanded-column scale.
    [[nodiscard]] Eigen::MatrixXd raw_coefficients() const;
    [[nodiscard]] Eigen::VectorXd raw_intercepts() const;
};

struct Prediction {
    Eigen::VectorXd values;            // regression predictions
    std::vector<std::size_t> classes;  // classification argmax ids
    Eigen::MatrixXd scores;            // classification scores, n x q
};

// Applies PCA (if any), expansion, standardization and coefficients.
[[nodiscard]] Prediction predict(const PolyModel& model, const Eigen::MatrixXd& design);

struct FitOptions {
    PolySpec spec{1};
    FitMethod method = FitMethod::Ols;
    double lambda = 0.0;
    std::optional<double> pca_fraction;
    std::optional<double> keep_fraction;
    std::uint64_t seed = 0;
    LogisticOptions logistic;
    ExpandOptions expand;
};

struct FitOutput {
    PolyModel model;
    Prediction fitted;
    std::vector<std::size_t> aliased;  // term indices (OLS only)
    std::vector<std::string> warnings;
};

// Expands an encoded design and fits the requested model. For logistic fits
// `response` holds class codes 0..q-1 and class_levels names them.
[[nodiscard]] FitOutput fit_poly_model(const Design& design, const Eigen::VectorXd& response, const Schema& schema,
                                       const FitOptions& options);

// Fit on an explicit term set; `expanded` must be expand(design, terms).
[[nodiscard]] FitOutput fit_on_terms(const Eigen::MatrixXd& expanded, const TermSet& terms,
                                     const Eigen::VectorXd& response, const FitOptions& options,
                                     std::size_t classes = 0);

void check_finite(const Eigen::MatrixXd& x, const char* what);

}  // namespace polynn
