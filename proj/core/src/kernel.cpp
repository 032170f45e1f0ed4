#include "pals/kernel.hpp"

#include "pals/errors.hpp"
#include "pals/metrics.hpp"
#include "pals/parallel.hpp"
#include "pals/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pals {

Eigen::MatrixXd gaussian_kernel_matrix(const Eigen::MatrixXd& X, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("gaussian kernel: r must be positive");
    const Eigen::Index n = X.rows();
    const Eigen::VectorXd sq = X.rowwise().squaredNorm();
    Eigen::MatrixXd k = sq.replicate(1, n) + sq.transpose().replicate(n, 1) - 2.0 * (X * X.transpose());
    k = (-r * k.cwiseMax(0.0)).array().exp();
    // Exact symmetry and unit diagonal regardless of rounding above.
    k = 0.5 * (k + k.transpose()).eval();
    k.diagonal().setOnes();
    return k;
}

double default_bandwidth(int p, int mc_pairs) {
    if (p < 1) throw std::invalid_argument("default_bandwidth: p must be positive");
    if (mc_pairs < 1000) throw std::invalid_argument("default_bandwidth: need at least 1000 Monte Carlo pairs");
    Rng rng(0x5ba1a9ce5ba11u); // fixed so the default is reproducible
    double total = 0.0;
    Eigen::VectorXd diff(p);
    for (int i = 0; i < mc_pairs; ++i) {
        for (int j = 0; j < p; ++j) diff(j) = rng.normal() - rng.normal();
        total += diff.norm();
    }
    return 1.0 / std::sqrt(total / static_cast<double>(mc_pairs));
}

namespace {

KernelBasis build_basis_impl(const Eigen::MatrixXd& X, KernelFn kernel, double r, int m) {
    const Eigen::Index n = X.rows();
    if (m < 1 || m > n) throw std::invalid_argument("build_basis: m must lie in [1, n]");

    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel(X.row(i).transpose(), X.row(j).transpose());
            k(i, j) = v;
            k(j, i) = v;
        }

    // Double centering: Q K Q with Q = I - J/n.
    const Eigen::VectorXd row_mean = k.rowwise().mean();
    const double grand_mean = row_mean.mean();
    k.colwise() -= row_mean;
    k.rowwise() -= row_mean.transpose();
    k.array() += grand_mean;
    k = 0.5 * (k + k.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
    if (eig.info() != Eigen::Success) throw NumericalError("build_basis: kernel eigendecomposition failed");

    KernelBasis basis;
    basis.r = r;
    basis.anchors = X;
    basis.kernel = std::move(kernel);

    const double largest = std::max(eig.eigenvalues().maxCoeff(), 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (eig.eigenvalues()(i) > 1e-12 * std::max(largest, 1e-300)) ++rank;
    basis.m = m;
    if (m > rank && rank > 0) {
        basis.m = rank;
        basis.reduced = true;
    }

    basis.weights.resize(n, basis.m);
    basis.eigenvalues.resize(basis.m);
    for (int j = 0; j < basis.m; ++j) {
        basis.eigenvalues(j) = eig.eigenvalues()(n - 1 - j);
        Eigen::VectorXd w = eig.eigenvectors().col(n - 1 - j);
        Eigen::Index arg = 0;
        w.cwiseAbs().maxCoeff(&arg);
        if (w(arg) < 0.0) w = -w;
        basis.weights.col(j) = w;
    }
    return basis;
}

} // namespace

KernelBasis build_basis(const Eigen::MatrixXd& X, double r, int m) {
    if (!(r > 0.0)) throw std::invalid_argument("build_basis: r must be positive");
    KernelFn kernel = [r](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        return std::exp(-r * (x - y).squaredNorm());
    };
    return build_basis_impl(X, std::move(kernel), r, m);
}

KernelBasis build_basis(const Eigen::MatrixXd& X, KernelFn kernel, int m) {
    return build_basis_impl(X, std::move(kernel), 0.0, m);
}

Eigen::MatrixXd KernelBasis::feature_matrix(const Eigen::MatrixXd& X_new) const {
    const Eigen::Index rows = X_new.rows();
    const Eigen::Index n = anchors.rows();
    Eigen::MatrixXd cross(rows, n);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index l = 0; l < n; ++l) cross(i, l) = kernel(X_new.row(i).transpose(), anchors.row(l).transpose());
    return cross * weights;
}

Eigen::VectorXd KernelBasis::features_at(const Eigen::VectorXd& x) const {
    return feature_matrix(x.transpose()).row(0).transpose();
}

Eigen::MatrixXd NonlinearEstimate::predict(const Eigen::MatrixXd& X_new) const {
    const Eigen::MatrixXd psi = kernel_basis.feature_matrix(X_new);
    return (psi.rowwise() - feature_mean.transpose()) * gamma_basis;
}

NonlinearEstimate fit_kernel_pals(const Dataset& data, const LevelGrid& grid, double lambda, int d,
                                  const KernelBasis& basis, const FitOptions& options) {
    if (d < 1 || d > basis.m) throw std::invalid_argument("fit_kernel_pals: d must lie in [1, m]");
    if (!(lambda > 0.0)) throw std::invalid_argument("fit_kernel_pals: lambda must be positive");

    NonlinearEstimate estimate;
    estimate.kernel_basis = basis;

    // The feature-space objective has the shape of the linear one with
    // psi(X) in place of X, so the same standardize/solve/back-map path
    // applies with the feature covariance (divisor n) as the penalty matrix.
    const Eigen::MatrixXd psi = basis.feature_matrix(data.X);
    Dataset features(psi, data.Y);
    auto [standardizer, Z] = standardize(features);
    estimate.feature_standardizer = std::move(standardizer);
    estimate.feature_mean = estimate.feature_standardizer.mean;

    const std::size_t K = grid.size();
    estimate.fits.resize(K);
    parallel_for(K, options.jobs, [&](std::size_t k) {
        ExpectileFit fit = solve_primal(Z, data.Y, grid.taus[k], lambda, options.solver);
        fit.beta = estimate.feature_standardizer.coef_to_original(fit.theta); // gamma
        estimate.fits[k] = std::move(fit);
    });

    Eigen::MatrixXd accumulated = Eigen::MatrixXd::Zero(basis.m, basis.m);
    for (const ExpectileFit& fit : estimate.fits) {
        accumulated.noalias() += fit.beta * fit.beta.transpose();
        estimate.all_converged = estimate.all_converged && fit.converged;
    }
    const EigenPairs full = eigen_top_d(accumulated, basis.m);
    estimate.candidate.lambda_matrix = std::move(accumulated);
    estimate.candidate.eigenvalues = full.values;
    estimate.candidate.eigenvectors = full.vectors;
    estimate.gamma_basis = full.vectors.leftCols(d);
    return estimate;
}

NonlinearEstimate fit_kernel_pals(const Dataset& data, const LevelGrid& grid, double lambda, int d,
                                  const KernelFitOptions& options) {
    const int n = static_cast<int>(data.n());
    int m = options.basis_size.value_or(n / 2);
    m = std::min(m, n);
    const double r = options.bandwidth.value_or(default_bandwidth(static_cast<int>(data.p())));
    const KernelBasis basis = build_basis(data.X, r, m);
    FitOptions fit_options;
    fit_options.solver = options.solver;
    fit_options.jobs = options.jobs;
    return fit_kernel_pals(data, grid, lambda, d, basis, fit_options);
}

KernelLambdaSelection dc_select_lambda_kernel(const Dataset& data, const LevelGrid& grid, std::vector<double> lambdas,
                                              int d, const KernelFitOptions& options) {
    if (lambdas.empty()) throw std::invalid_argument("dc_select_lambda_kernel: empty lambda list");
    std::sort(lambdas.begin(), lambdas.end());

    // The basis does not depend on lambda; build it once.
    const int n = static_cast<int>(data.n());
    int m = options.basis_size.value_or(n / 2);
    m = std::min(m, n);
    const double r = options.bandwidth.value_or(default_bandwidth(static_cast<int>(data.p())));
    const KernelBasis basis = build_basis(data.X, r, m);
    FitOptions fit_options;
    fit_options.solver = options.solver;
    fit_options.jobs = options.jobs;

    KernelLambdaSelection selection;
    bool have_best = false;
    double best_score = 0.0;
    std::ostringstream errors;
    for (const double lambda : lambdas) {
        try {
            NonlinearEstimate estimate = fit_kernel_pals(data, grid, lambda, d, basis, fit_options);
            const double score = dcor2(data.Y, estimate.predict(data.X));
            selection.scores.emplace_back(lambda, score);
            if (!have_best || score > best_score) {
                have_best = true;
                best_score = score;
                selection.lambda = lambda;
                selection.estimate = std::move(estimate);
            }
        } catch (const std::exception& e) {
            errors << " lambda=" << lambda << ": " << e.what() << ";";
        }
    }
    if (!have_best) throw NumericalError("dc_select_lambda_kernel: every candidate failed --" + errors.str());
    return selection;
}

} // namespace pals
