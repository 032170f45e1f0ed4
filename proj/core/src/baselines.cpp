#include "pals/baselines.hpp"

#include "pals/errors.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace pals {

SliceAssignment slice_response(const Eigen::VectorXd& Y, int H) {
    const Eigen::Index n = Y.size();
    if (H < 2) throw std::invalid_argument("slice_response: need at least 2 slices");
    if (n < 2) throw std::invalid_argument("slice_response: need at least 2 observations");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return Y(a) < Y(b); });

    SliceAssignment out;
    out.H = std::min<int>(H, static_cast<int>(n));
    out.merged = out.H < H;
    // Target sizes n/H rounded so they differ by at most 1; merge any slice
    // that would end up with fewer than 2 points into its left neighbor.
    std::vector<Eigen::Index> sizes;
    {
        const Eigen::Index base = n / out.H;
        const Eigen::Index extra = n % out.H;
        for (int h = 0; h < out.H; ++h) sizes.push_back(base + (h < extra ? 1 : 0));
        while (sizes.size() > 1 && *std::min_element(sizes.begin(), sizes.end()) < 2) {
            const auto smallest = std::min_element(sizes.begin(), sizes.end());
            const auto neighbor = smallest == sizes.begin() ? std::next(smallest) : std::prev(smallest);
            *neighbor += *smallest;
            sizes.erase(smallest);
            out.merged = true;
        }
        out.H = static_cast<int>(sizes.size());
    }

    out.labels.resize(n);
    Eigen::Index pos = 0;
    for (int h = 0; h < out.H; ++h) {
        for (Eigen::Index k = 0; k < sizes[static_cast<std::size_t>(h)]; ++k, ++pos)
            out.labels(order[static_cast<std::size_t>(pos)]) = h;
        if (h + 1 < out.H) out.boundaries.push_back(Y(order[static_cast<std::size_t>(pos - 1)]));
    }
    return out;
}

namespace {

SubspaceEstimate moment_estimate(const Eigen::MatrixXd& kernel_matrix, const Standardizer& standardizer, int d) {
    const EigenPairs top = eigen_top_d(kernel_matrix, d);
    // Directions live in whitened coordinates; map back and re-orthonormalize.
    const Eigen::MatrixXd raw = standardizer.whitener * top.vectors;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    SubspaceEstimate estimate;
    estimate.basis = qr.householderQ() * Eigen::MatrixXd::Identity(raw.rows(), raw.cols());
    estimate.d = d;
    estimate.eigen_tie = top.tie_at_cut;
    return estimate;
}

} // namespace

SubspaceEstimate fit_sir(const Dataset& data, int H, int d) {
    if (d < 1 || d > data.p()) throw std::invalid_argument("fit_sir: d must lie in [1, p]");
    auto [standardizer, Z] = standardize(data);
    const SliceAssignment slices = slice_response(data.Y, H);

    const Eigen::Index p = data.p();
    const double n = static_cast<double>(data.n());
    Eigen::MatrixXd between = Eigen::MatrixXd::Zero(p, p);
    for (int h = 0; h < slices.H; ++h) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
        double count = 0.0;
        for (Eigen::Index i = 0; i < data.n(); ++i)
            if (slices.labels(i) == h) {
                mean += Z.row(i).transpose();
                count += 1.0;
            }
        mean /= count;
        between.noalias() += (count / n) * mean * mean.transpose();
    }
    return moment_estimate(between, standardizer, d);
}

SubspaceEstimate fit_save(const Dataset& data, int H, int d) {
    if (d < 1 || d > data.p()) throw std::invalid_argument("fit_save: d must lie in [1, p]");
    auto [standardizer, Z] = standardize(data);
    const SliceAssignment slices = slice_response(data.Y, H);

    const Eigen::Index p = data.p();
    const double n = static_cast<double>(data.n());
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(p, p);
    Eigen::MatrixXd accumulated = Eigen::MatrixXd::Zero(p, p);
    for (int h = 0; h < slices.H; ++h) {
        std::vector<Eigen::Index> members;
        for (Eigen::Index i = 0; i < data.n(); ++i)
            if (slices.labels(i) == h) members.push_back(i);
        const double count = static_cast<double>(members.size());
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
        for (const Eigen::Index i : members) mean += Z.row(i).transpose();
        mean /= count;
        Eigen::MatrixXd within = Eigen::MatrixXd::Zero(p, p);
        for (const Eigen::Index i : members) {
            const Eigen::VectorXd c = Z.row(i).transpose() - mean;
            within.noalias() += c * c.transpose();
        }
        within /= count; // divisor n_h, consistent with the covariance convention
        const Eigen::MatrixXd gap = identity - within;
        accumulated.noalias() += (count / n) * gap * gap;
    }
    return moment_estimate(accumulated, standardizer, d);
}

} // namespace pals
