#include "pals/metrics.hpp"

#include "pals/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pals {

namespace {

// Doubly centered pairwise Euclidean distance matrix of the rows.
Eigen::MatrixXd centered_distances(const Eigen::Ref<const Eigen::MatrixXd>& U) {
    const Eigen::Index n = U.rows();
    const Eigen::VectorXd sq = U.rowwise().squaredNorm();
    Eigen::MatrixXd dist = sq.replicate(1, n) + sq.transpose().replicate(n, 1) - 2.0 * (U * U.transpose());
    dist = dist.cwiseMax(0.0).cwiseSqrt();
    const Eigen::VectorXd row_mean = dist.rowwise().mean();
    const double grand_mean = row_mean.mean();
    dist.colwise() -= row_mean;
    dist.rowwise() -= row_mean.transpose();
    dist.array() += grand_mean;
    return dist;
}

} // namespace

double dcor2(const Eigen::Ref<const Eigen::MatrixXd>& U, const Eigen::Ref<const Eigen::MatrixXd>& V) {
    if (U.rows() != V.rows()) throw std::invalid_argument("dcor2: row counts differ");
    if (U.rows() < 2) throw std::invalid_argument("dcor2: need at least 2 rows");
    const double n2 = static_cast<double>(U.rows()) * static_cast<double>(U.rows());
    const Eigen::MatrixXd a = centered_distances(U);
    const Eigen::MatrixXd b = centered_distances(V);
    const double dvar_u = a.cwiseProduct(a).sum() / n2;
    const double dvar_v = b.cwiseProduct(b).sum() / n2;
    if (dvar_u < 1e-14 || dvar_v < 1e-14) return 0.0;
    const double dcov = a.cwiseProduct(b).sum() / n2;
    return std::clamp(dcov / std::sqrt(dvar_u * dvar_v), 0.0, 1.0);
}

namespace {

Eigen::MatrixXd projection_matrix(const Eigen::Ref<const Eigen::MatrixXd>& B, const char* which) {
    if (B.cols() < 1 || B.rows() < B.cols()) throw std::invalid_argument("delta: basis must be tall with >= 1 column");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
    if (qr.rank() < B.cols())
        throw std::invalid_argument(std::string("delta: ") + which + " basis is rank deficient (rank " +
                                    std::to_string(qr.rank()) + " < " + std::to_string(B.cols()) + " columns)");
    const Eigen::MatrixXd q =
        qr.householderQ() * Eigen::MatrixXd::Identity(B.rows(), B.cols());
    return q * q.transpose();
}

} // namespace

double delta(const Eigen::Ref<const Eigen::MatrixXd>& B_true, const Eigen::Ref<const Eigen::MatrixXd>& B_hat) {
    if (B_true.rows() != B_hat.rows()) throw std::invalid_argument("delta: bases live in different dimensions");
    return (projection_matrix(B_true, "first") - projection_matrix(B_hat, "second")).norm();
}

double upsilon(const Eigen::Ref<const Eigen::MatrixXd>& phi_true, const Eigen::Ref<const Eigen::MatrixXd>& phi_hat) {
    return dcor2(phi_true, phi_hat);
}

} // namespace pals
