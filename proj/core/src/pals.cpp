#include "pals/pals.hpp"

#include "pals/errors.hpp"
#include "pals/metrics.hpp"
#include "pals/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pals {

LevelGrid::LevelGrid(const std::vector<double>& levels) {
    if (levels.empty()) throw std::invalid_argument("level grid must not be empty");
    taus.reserve(levels.size());
    double prev = 0.0;
    for (const double tau : levels) {
        if (tau <= prev) throw std::invalid_argument("expectile levels must be strictly increasing in (0,1)");
        taus.emplace_back(tau);
        prev = tau;
    }
}

LevelGrid LevelGrid::deciles() {
    std::vector<double> levels;
    for (int k = 1; k <= 9; ++k) levels.push_back(k / 10.0);
    return LevelGrid(levels);
}

std::vector<double> default_lambda_grid() { return {0.1, 1.0, 10.0, 100.0}; }

namespace {

void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
}

// Full spectrum, descending, sign-normalized.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> eigen_full(const Eigen::MatrixXd& M) {
    const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8)
        throw std::invalid_argument("eigendecomposition: matrix is not symmetric (max asymmetry " +
                                    std::to_string(asym) + ")");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (M + M.transpose()));
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    const Eigen::Index p = M.rows();
    Eigen::VectorXd values(p);
    Eigen::MatrixXd vectors(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        values(j) = eig.eigenvalues()(p - 1 - j);
        vectors.col(j) = eig.eigenvectors().col(p - 1 - j);
        normalize_sign(vectors.col(j));
    }
    return {std::move(values), std::move(vectors)};
}

} // namespace

EigenPairs eigen_top_d(const Eigen::MatrixXd& M, int d) {
    if (M.rows() != M.cols()) throw std::invalid_argument("eigen_top_d: matrix must be square");
    if (d < 1 || d > M.rows()) throw std::invalid_argument("eigen_top_d: d out of range");
    auto [values, vectors] = eigen_full(M);
    EigenPairs out;
    out.values = values.head(d);
    out.vectors = vectors.leftCols(d);
    if (d < M.rows()) {
        const double scale = std::max(1.0, std::abs(values(0)));
        out.tie_at_cut = values(d - 1) - values(d) <= 1e-8 * scale;
    }
    return out;
}

PalsResult fit_pals(const Dataset& data, const LevelGrid& grid, double lambda, int d, const FitOptions& options) {
    if (d < 1 || d > data.p()) throw std::invalid_argument("fit_pals: d must lie in [1, p]");
    if (!(lambda > 0.0)) throw std::invalid_argument("fit_pals: lambda must be positive");

    PalsResult result;
    auto [standardizer, Z] = standardize(data);
    result.standardizer = std::move(standardizer);

    const std::size_t K = grid.size();
    result.fits.resize(K);
    parallel_for(K, options.jobs, [&](std::size_t k) {
        ExpectileFit fit = solve_primal(Z, data.Y, grid.taus[k], lambda, options.solver);
        fit.beta = result.standardizer.coef_to_original(fit.theta);
        result.fits[k] = std::move(fit);
    });

    const Eigen::Index p = data.p();
    Eigen::MatrixXd accumulated = Eigen::MatrixXd::Zero(p, p);
    bool all_converged = true;
    for (const ExpectileFit& fit : result.fits) {
        accumulated.noalias() += fit.beta * fit.beta.transpose();
        all_converged = all_converged && fit.converged;
    }

    auto [values, vectors] = [&] {
        const EigenPairs top = eigen_top_d(accumulated, static_cast<int>(p));
        return std::pair{top.values, top.vectors};
    }();
    result.candidate.lambda_matrix = std::move(accumulated);
    result.candidate.eigenvalues = values;
    result.candidate.eigenvectors = vectors;

    result.subspace.basis = vectors.leftCols(d);
    result.subspace.d = d;
    result.subspace.all_converged = all_converged;
    if (d < p) {
        const double scale = std::max(1.0, std::abs(values(0)));
        result.subspace.eigen_tie = values(d - 1) - values(d) <= 1e-8 * scale;
    }
    return result;
}

LambdaSelection dc_select_lambda(const Dataset& data, const LevelGrid& grid, std::vector<double> lambdas, int d,
                                 const FitOptions& options) {
    if (lambdas.empty()) throw std::invalid_argument("dc_select_lambda: empty lambda list");
    std::sort(lambdas.begin(), lambdas.end()); // ties resolve to the smallest lambda

    LambdaSelection selection;
    bool have_best = false;
    double best_score = 0.0;
    std::ostringstream errors;
    for (const double lambda : lambdas) {
        try {
            PalsResult fit = fit_pals(data, grid, lambda, d, options);
            const Eigen::MatrixXd predictors = data.X * fit.subspace.basis;
            const double score = dcor2(data.Y, predictors);
            selection.scores.emplace_back(lambda, score);
            if (!have_best || score > best_score) {
                have_best = true;
                best_score = score;
                selection.lambda = lambda;
                selection.result = std::move(fit);
            }
        } catch (const std::exception& e) {
            errors << " lambda=" << lambda << ": " << e.what() << ";";
        }
    }
    if (!have_best)
        throw NumericalError("dc_select_lambda: every candidate failed --" + errors.str());
    return selection;
}

} // namespace pals
