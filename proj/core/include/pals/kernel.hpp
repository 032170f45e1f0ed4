#ifndef PALS_KERNEL_HPP
#define PALS_KERNEL_HPP

#include "pals/dataset.hpp"
#include "pals/expectile.hpp"
#include "pals/pals.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace pals {

using KernelFn = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

// Gaussian kernel matrix: exp(-r * |x_i - x_j|^2). Symmetric with unit
// diagonal and entries in (0,1].
Eigen::MatrixXd gaussian_kernel_matrix(const Eigen::MatrixXd& X, double r);

// Default kernel scale: the reciprocal square root of the Monte Carlo mean
// distance between independent standard normal vectors in dimension p,
// computed with a fixed internal seed.
double default_bandwidth(int p, int mc_pairs = 10000);

// Spectral feature basis built from the doubly centered kernel matrix; the
// j-th feature is psi_j(x) = sum_l kernel(x, anchor_l) * weights(l, j).
struct KernelBasis {
    double r = 0.0; // 0 when a custom kernel was supplied
    int m = 0;
    Eigen::MatrixXd anchors; // n x p training points
    Eigen::MatrixXd weights; // n x m orthonormal eigenvector columns
    Eigen::VectorXd eigenvalues;
    KernelFn kernel;
    bool reduced = false; // requested m exceeded the numerical rank

    // psi(x) for one point.
    Eigen::VectorXd features_at(const Eigen::VectorXd& x) const;
    // Row i holds psi(X_new.row(i)); shares the code path with features_at.
    Eigen::MatrixXd feature_matrix(const Eigen::MatrixXd& X_new) const;
};

KernelBasis build_basis(const Eigen::MatrixXd& X, double r, int m);
// Seam for non-Gaussian kernels (tests substitute a linear kernel here).
KernelBasis build_basis(const Eigen::MatrixXd& X, KernelFn kernel, int m);

// Feature-space estimate: leading eigenvectors of the accumulated
// outer-product matrix of per-level feature coefficients.
struct NonlinearEstimate {
    Eigen::MatrixXd gamma_basis; // m x d, orthonormal
    KernelBasis kernel_basis;
    Eigen::VectorXd feature_mean; // training feature column means
    CandidateMatrix candidate;    // m x m accumulated matrix and spectrum
    std::vector<ExpectileFit> fits;
    Standardizer feature_standardizer;
    bool all_converged = true;

    // Estimated sufficient predictors at new points, one row per point.
    Eigen::MatrixXd predict(const Eigen::MatrixXd& X_new) const;
};

struct KernelFitOptions {
    SolveOptions solver;
    int jobs = 1;
    std::optional<double> bandwidth;
    std::optional<int> basis_size; // default floor(n/2)
};

NonlinearEstimate fit_kernel_pals(const Dataset& data, const LevelGrid& grid, double lambda, int d,
                                  const KernelFitOptions& options = {});
// Variant taking a prebuilt basis (shared across lambdas, or a custom kernel).
NonlinearEstimate fit_kernel_pals(const Dataset& data, const LevelGrid& grid, double lambda, int d,
                                  const KernelBasis& basis, const FitOptions& options = {});

struct KernelLambdaSelection {
    double lambda = 0.0;
    NonlinearEstimate estimate;
    std::vector<std::pair<double, double>> scores;
};

// Mirror of dc_select_lambda with estimated predictor values in place of
// linear sufficient predictors.
KernelLambdaSelection dc_select_lambda_kernel(const Dataset& data, const LevelGrid& grid, std::vector<double> lambdas,
                                              int d, const KernelFitOptions& options = {});

} // namespace pals

#endif
