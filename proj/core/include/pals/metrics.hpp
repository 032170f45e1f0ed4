#ifndef PALS_METRICS_HPP
#define PALS_METRICS_HPP

#include <Eigen/Dense>

namespace pals {

// Squared sample distance correlation between the rows of U and V, in [0,1].
// Biased (divide-by-n^2) estimator of Szekely-Rizzo-Bakirov; returns 0 when
// either distance variance is below 1e-14.
double dcor2(const Eigen::Ref<const Eigen::MatrixXd>& U, const Eigen::Ref<const Eigen::MatrixXd>& V);

// Frobenius distance between the orthogonal projections onto the column
// spans of two full-column-rank bases. Invariant to the choice of basis
// within each span; ranges over [0, sqrt(2d)] for equal dimensions d.
double delta(const Eigen::Ref<const Eigen::MatrixXd>& B_true, const Eigen::Ref<const Eigen::MatrixXd>& B_hat);

// Accuracy of estimated nonlinear sufficient predictors: dcor2 of the true
// and estimated predictor values.
double upsilon(const Eigen::Ref<const Eigen::MatrixXd>& phi_true, const Eigen::Ref<const Eigen::MatrixXd>& phi_hat);

} // namespace pals

#endif
