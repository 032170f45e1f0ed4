#ifndef PALS_BASELINES_HPP
#define PALS_BASELINES_HPP

#include "pals/dataset.hpp"
#include "pals/pals.hpp"

#include <Eigen/Dense>

#include <vector>

namespace pals {

// Equal-count response slicing; sizes differ by at most one, ties broken by
// stable sort order. Slices that would hold fewer than 2 observations are
// merged into a neighbor.
struct SliceAssignment {
    std::vector<double> boundaries; // upper response cut points, one per slice but the last
    Eigen::VectorXi labels;         // slice index per observation
    int H = 0;                      // effective slice count after merging
    bool merged = false;
};

SliceAssignment slice_response(const Eigen::VectorXd& Y, int H);

// Sliced inverse regression: eigenvectors of the between-slice covariance of
// whitened predictors, mapped back to the original scale.
SubspaceEstimate fit_sir(const Dataset& data, int H, int d);

// Sliced average variance estimation: eigenvectors of
// sum_h (n_h/n) (I - V_h)^2 with V_h the within-slice covariance.
SubspaceEstimate fit_save(const Dataset& data, int H, int d);

} // namespace pals

#endif
