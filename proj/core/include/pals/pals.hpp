#ifndef PALS_PALS_HPP
#define PALS_PALS_HPP

#include "pals/dataset.hpp"
#include "pals/expectile.hpp"

#include <Eigen/Dense>

#include <vector>

namespace pals {

// Strictly increasing expectile levels inside (0,1).
struct LevelGrid {
    std::vector<ExpectileLevel> taus;

    explicit LevelGrid(const std::vector<double>& levels);

    // tau_k = k/10 for k = 1..9.
    static LevelGrid deciles();

    std::size_t size() const { return taus.size(); }
};

struct EigenPairs {
    Eigen::VectorXd values;  // descending
    Eigen::MatrixXd vectors; // orthonormal columns, sign-normalized
    bool tie_at_cut = false; // values(d-1) and values(d) indistinguishable
};

// Top-d eigenpairs of a symmetric matrix, eigenvalues descending, each
// vector's largest-magnitude component made positive. Inputs further than
// 1e-8 from symmetric are rejected.
EigenPairs eigen_top_d(const Eigen::MatrixXd& M, int d);

// Accumulated outer-product matrix over expectile levels with its spectrum.
struct CandidateMatrix {
    Eigen::MatrixXd lambda_matrix;
    Eigen::VectorXd eigenvalues;  // all, descending
    Eigen::MatrixXd eigenvectors; // all, columns
};

struct SubspaceEstimate {
    Eigen::MatrixXd basis; // p x d, orthonormal columns
    int d = 0;
    bool eigen_tie = false;
    bool all_converged = true;
};

struct PalsResult {
    SubspaceEstimate subspace;
    CandidateMatrix candidate;
    std::vector<ExpectileFit> fits; // one per level, beta in original coordinates
    Standardizer standardizer;
};

struct FitOptions {
    SolveOptions solver;
    int jobs = 1; // concurrency across levels
};

// Standardizes, fits every level by solve_primal, maps each theta back to the
// original coordinates, accumulates the candidate matrix and extracts its
// d leading eigenvectors.
PalsResult fit_pals(const Dataset& data, const LevelGrid& grid, double lambda, int d, const FitOptions& options = {});

struct LambdaSelection {
    double lambda = 0.0;
    PalsResult result;
    // (lambda, squared distance correlation) for every lambda that fit.
    std::vector<std::pair<double, double>> scores;
};

// Fits once per candidate lambda and keeps the one maximizing the squared
// sample distance correlation between Y and the estimated sufficient
// predictors; ties go to the smallest lambda.
LambdaSelection dc_select_lambda(const Dataset& data, const LevelGrid& grid, std::vector<double> lambdas, int d,
                                 const FitOptions& options = {});

// Default tuning grid.
std::vector<double> default_lambda_grid();

} // namespace pals

#endif
