#ifndef PALS_RNG_HPP
#define PALS_RNG_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace pals {

// Deterministic random source. The distributions are implemented by hand
// (53-bit uniforms, Marsaglia polar normals) because the std:: distribution
// objects are allowed to differ between standard libraries, and simulation
// results must be reproducible from a seed alone.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via the polar method; the rejected pairs keep the
    // stream deterministic because they are a pure function of it.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0, v = 0.0, s = 0.0;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    Eigen::VectorXd normal_vector(Eigen::Index k) {
        Eigen::VectorXd out(k);
        for (Eigen::Index i = 0; i < k; ++i) out(i) = normal();
        return out;
    }

    // Filled row by row so the draw order is part of the contract.
    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd out(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal();
        return out;
    }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace pals

#endif
