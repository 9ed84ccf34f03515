#include "polynn/error.hpp"
#include "polynn/fitcore.hpp"

#include <Eigen/Eigenvalues>

namespace polynn {

PCABasis pca_fit(const Eigen::MatrixXd& x, double var_fraction)
{
    if (x.rows() < 2) throw Error(ErrorCode::Data, "PCA needs at least 2 rows");
    if (!(var_fraction > 0.0 && var_fraction <= 1.0)) throw Error(ErrorCode::Usage, "PCA variance fraction must be in (0, 1]");
    check_finite(x, "PCA input");

    PCABasis basis;
    basis.means = x.colwise().mean().transpose();
    const Eigen::MatrixXd xc = x.rowwise() - basis.means.transpose();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(x.cols(), x.cols());
    cov.selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose(), 1.0 / static_cast<double>(x.rows() - 1));
    cov = cov.selfadjointView<Eigen::Lower>();

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw Error(ErrorCode::Numerical, "PCA eigendecomposition failed");
    // Eigen returns ascending eigenvalues.
    const Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
    const double total = values.sum();
    if (!(total > 0.0)) throw Error(ErrorCode::Data, "PCA input has zero total variance");

    Eigen::Index r = 0;
    double cum = 0.0;
    while (r < values.size()) {
        cum += values(r++);
        if (cum / total >= var_fraction - 1e-12) break;
    }
    basis.components = eig.eigenvectors().rowwise().reverse().leftCols(r);
    basis.variances = values.head(r);
    basis.retained_fraction = cum / total;
    return basis;
}

Eigen::MatrixXd pca_transform(const PCABasis& basis, const Eigen::MatrixXd& x)
{
    if (x.cols() != basis.means.size()) throw Error(ErrorCode::Data, "PCA input width mismatch");
    return (x.rowwise() - basis.means.transpose()) * basis.components;
}

Eigen::MatrixXd pca_inverse(const PCABasis& basis, const Eigen::MatrixXd& scores)
{
    if (scores.cols() != basis.components.cols()) throw Error(ErrorCode::Data, "PCA score width mismatch");
    return (scores * basis.components.transpose()).rowwise() + basis.means.transpose();
}

}  // namespace polynn
