#ifndef PALS_EXPECTILE_HPP
#define PALS_EXPECTILE_HPP

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>

namespace pals {

// Expectile level, constrained to the open unit interval.
class ExpectileLevel {
  public:
    explicit ExpectileLevel(double tau) : tau_(tau) {
        if (!(tau > 0.0 && tau < 1.0))
            throw std::invalid_argument("expectile level must lie in (0,1), got " + std::to_string(tau));
    }
    double value() const { return tau_; }

  private:
    double tau_;
};

// Asymmetric squared loss: (1-tau)c^2 for c <= 0, tau c^2 for c > 0.
// Continuously differentiable, with derivative 0 at c = 0.
inline double rho(ExpectileLevel tau, double c) {
    const double w = c > 0.0 ? tau.value() : 1.0 - tau.value();
    return w * c * c;
}

// Solution of one penalized asymmetric least squares problem. theta lives in
// the whitened coordinates the solver saw; beta is the same coefficient in
// the original predictor coordinates (the solver initializes beta = theta,
// callers that whitened the data map it back through their Standardizer).
struct ExpectileFit {
    double alpha = 0.0;
    Eigen::VectorXd theta;
    Eigen::VectorXd beta;
    double tau = 0.5;
    double lambda = 1.0;
    int iterations = 0;
    double kkt_residual = 0.0;
    std::optional<double> duality_gap;
    bool converged = true;
    bool clamped_solve = false; // weighted system needed an eigenvalue floor
};

struct SolveOptions {
    double tol = 1e-8; // max-norm change in (alpha, theta)
    int max_iter = 100;
};

// Multipliers of the dual problem; the difference a - eta drives the
// coefficient recovery theta = Z^T (a - eta) / 2.
struct DualSolution {
    Eigen::VectorXd a;
    Eigen::VectorXd eta;
    int iterations = 0;
    bool converged = true;
    double objective = 0.0;
};

struct DualOptions {
    int max_iter = 200000;
    // Stop once the duality gap is below gap_tol * (1 + |primal objective|).
    double gap_tol = 1e-9;
};

// Per-condition worst-case violations of the optimality system tying a
// primal/dual pair together. Report-only; nothing throws.
struct KktReport {
    double xi_plus = 0.0;       // positive-part slack vs a / (2*lambda_tilde*tau)
    double xi_minus = 0.0;      // negative-part slack vs eta / (2*lambda_tilde*(1-tau))
    double stationarity = 0.0;  // theta - Z^T (a - eta) / 2
    double feasibility = 0.0;   // negativity of a or eta
    double balance = 0.0;       // |sum(a - eta)|
    double comp_slackness = 0.0;
    double max_violation() const;
};

// Objective value of the whitened sample problem
//   theta^T theta + (lambda/n) * sum_i rho_tau(Y_i - alpha - theta^T Z_i).
double primal_objective(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y, ExpectileLevel tau, double lambda,
                        double alpha, const Eigen::VectorXd& theta);

// Exact gradient of the objective above in (alpha, theta); entry 0 is the
// alpha component.
Eigen::VectorXd primal_gradient(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y, ExpectileLevel tau, double lambda,
                                double alpha, const Eigen::VectorXd& theta);

double dual_objective(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y, ExpectileLevel tau, double lambda,
                      const Eigen::VectorXd& a, const Eigen::VectorXd& eta);

// tau-expectile of a sample: the root of
// tau * sum_{u>t} (u - t) = (1-tau) * sum_{u<t} (t - u), solved exactly.
double expectile(const Eigen::VectorXd& values, ExpectileLevel tau);

// Iteratively reweighted ridge regression on the smooth convex objective.
// Weights are tau for nonnegative residuals and 1-tau otherwise; each pass
// solves the weighted penalized normal equations jointly in (alpha, theta)
// with the intercept unpenalized.
ExpectileFit solve_primal(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y, ExpectileLevel tau, double lambda,
                          const SolveOptions& options = {});

// Maximizes the concave dual by accelerated projected gradient ascent, then
// recovers theta = Z^T (a - eta) / 2 and alpha from the intercept
// first-order condition. Serves as an independent check on solve_primal.
std::pair<DualSolution, ExpectileFit> solve_dual(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y,
                                                 ExpectileLevel tau, double lambda, const DualOptions& options = {});

KktReport verify_kkt(const ExpectileFit& fit, const DualSolution& dual, const Eigen::MatrixXd& Z,
                     const Eigen::VectorXd& Y);

} // namespace pals

#endif
