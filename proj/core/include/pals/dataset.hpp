#ifndef PALS_DATASET_HPP
#define PALS_DATASET_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace pals {

// Immutable sample: n observations of p predictors plus a response.
struct Dataset {
    Eigen::MatrixXd X; // n x p
    Eigen::VectorXd Y; // n

    Dataset(Eigen::MatrixXd x, Eigen::VectorXd y);

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
};

// Centering/whitening transform built from the sample covariance (divisor n).
// The whitener is the symmetric inverse square root of the covariance with
// eigenvalues clamped at `eigenvalue_floor`, so it stays defined for
// degenerate predictors; `clamped` records that the floor was hit.
struct Standardizer {
    Eigen::VectorXd mean;     // p
    Eigen::MatrixXd cov;      // p x p, divisor n
    Eigen::MatrixXd whitener; // cov^{-1/2}, symmetric
    Eigen::MatrixXd sqrt_cov; // cov^{1/2}, symmetric (same clamped spectrum)
    double eigenvalue_floor = 0.0;
    bool clamped = false;

    // Rows of X mapped to whitened coordinates: (x - mean)^T * whitener.
    Eigen::MatrixXd whiten(const Eigen::MatrixXd& x) const;

    // Coefficients fitted on whitened predictors mapped back: beta = whitener * theta.
    Eigen::VectorXd coef_to_original(const Eigen::VectorXd& theta) const;
};

// Sample covariance with divisor n.
Eigen::MatrixXd covariance(const Dataset& data);

std::pair<Standardizer, Eigen::MatrixXd> standardize(const Dataset& data);

struct CsvOptions {
    // Column name, or a 0-based column index written as digits.
    std::string response;
    std::vector<std::string> drop_columns;
    // Keep only rows where the named column equals the value exactly
    // (applied before drops; the filter column may also be dropped).
    std::vector<std::pair<std::string, double>> keep_where;
};

struct CsvResult {
    Dataset data;
    std::vector<std::string> predictor_names;
    std::string response_name;
    std::size_t rows_dropped_missing = 0;
    std::size_t rows_dropped_filtered = 0;
};

// Reads a comma-delimited, header-first, UTF-8 file. Rows containing a
// missing value (empty cell, "NA", "NaN") in any kept column are dropped and
// counted; any other non-numeric cell is an error naming the row and column.
CsvResult load_csv(const std::string& path, const CsvOptions& options);

} // namespace pals

#endif
