#include "pals/expectile.hpp"

#include "pals/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace pals {

namespace {

void check_instance(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y, double lambda) {
    if (Z.rows() != Y.size())
        throw std::invalid_argument("expectile solver: Z has " + std::to_string(Z.rows()) + " rows but Y has " +
                                    std::to_string(Y.size()));
    if (Z.rows() == 0) throw std::invalid_argument("expectile solver: empty instance");
    if (!(lambda > 0.0)) throw std::invalid_argument("expectile solver: lambda must be positive");
}

// Residual weights: tau on the nonnegative side, 1-tau otherwise. The loss is
// differentiable at 0, so the tie-break only fixes determinism.
Eigen::VectorXd residual_weights(const Eigen::VectorXd& r, double tau) {
    Eigen::VectorXd w(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) w(i) = r(i) >= 0.0 ? tau : 1.0 - tau;
    return w;
}

Eigen::VectorXd floored_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
    const Eigen::VectorXd& values = eig.eigenvalues();
    const double floor = 1e-12 * std::max(values.maxCoeff(), 1.0);
    Eigen::VectorXd coeffs = eig.eigenvectors().transpose() * rhs;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs(i) /= std::max(values(i), floor);
    return eig.eigenvectors() * coeffs;
}

} // namespace

double KktReport::max_violation() const {
    return std::max({xi_plus, xi_minus, stationarity, feasibility, balance, comp_slackness});
}

double primal_objective(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y, ExpectileLevel tau, double lambda,
                        double alpha, const Eigen::VectorXd& theta) {
    check_instance(Z, Y, lambda);
    const double lambda_tilde = lambda / static_cast<double>(Z.rows());
    const Eigen::VectorXd r = Y -Z * theta - Eigen::VectorXd::Constant(Y.size(), alpha);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) loss += rho(tau, r(i));
    return theta.squaredNorm() + lambda_tilde * loss;
}

Eigen::VectorXd primal_gradient(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y, ExpectileLevel tau, double lambda,
                                double alpha, const Eigen::VectorXd& theta) {
    check_instance(Z, Y, lambda);
    const double lambda_tilde = lambda / static_cast<double>(Z.rows());
    const Eigen::VectorXd r = Y - Z * theta - Eigen::VectorXd::Constant(Y.size(), alpha);
    const Eigen::VectorXd wr = residual_weights(r, tau.value()).cwiseProduct(r);
    Eigen::VectorXd grad(theta.size() + 1);
    grad(0) = -2.0 * lambda_tilde * wr.sum();
    grad.tail(theta.size()) = 2.0 * theta - 2.0 * lambda_tilde * (Z.transpose() * wr);
    return grad;
}

double dual_objective(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y, ExpectileLevel tau, double lambda,
                      const Eigen::VectorXd& a, const Eigen::VectorXd& eta) {
    check_instance(Z, Y, lambda);
    const double lambda_tilde = lambda / static_cast<double>(Z.rows());
    const double t = tau.value();
    const Eigen::VectorXd q = a - eta;
    const Eigen::VectorXd ztq = Z.transpose() * q;
    return q.dot(Y) - 0.25 * ztq.squaredNorm() - a.squaredNorm() / (4.0 * lambda_tilde * t) -
           eta.squaredNorm() / (4.0 * lambda_tilde * (1.0 - t));
}

double expectile(const Eigen::VectorXd& values, ExpectileLevel tau) {
    if (values.size() == 0) throw std::invalid_argument("expectile of an empty sample");
    const double t = tau.value();
    std::vector<double> u(values.data(), values.data() + values.size());
    std::sort(u.begin(), u.end());
    const auto n = u.size();
    const double total = std::accumulate(u.begin(), u.end(), 0.0);

    // On each segment between consecutive order statistics the first-order
    // condition is linear in the candidate; scan for the segment whose root
    // falls inside it.
    double below_sum = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double hi_sum = total - below_sum;
        const double denom = t * static_cast<double>(n - k) + (1.0 - t) * static_cast<double>(k);
        const double root = (t * hi_sum + (1.0 - t) * below_sum) / denom;
        const double lo = k == 0 ? -std::numeric_limits<double>::infinity() : u[k - 1];
        const double hi = k == n ? std::numeric_limits<double>::infinity() : u[k];
        if (root >= lo && root <= hi) return root;
        if (k < n) below_sum += u[k];
    }
    // Unreachable for finite input; the condition is continuous and monotone.
    return u[n / 2];
}

ExpectileFit solve_primal(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y, ExpectileLevel tau, double lambda,
                          const SolveOptions& options) {
    check_instance(Z, Y, lambda);
    if (!(options.tol > 0.0)) throw std::invalid_argument("solve_primal: tol must be positive");
    const Eigen::Index n = Z.rows();
    const Eigen::Index p = Z.cols();
    const double t = tau.value();
    const double lambda_tilde = lambda / static_cast<double>(n);

    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = Z;

    ExpectileFit fit;
    fit.tau = t;
    fit.lambda = lambda;
    fit.converged = false;

    Eigen::VectorXd coef = Eigen::VectorXd::Zero(p + 1);
    coef(0) = expectile(Y, tau);
    Eigen::VectorXd residual = Y - design * coef;

    auto sign_mask = [](const Eigen::VectorXd& r) {
        std::vector<char> mask(static_cast<std::size_t>(r.size()));
        for (Eigen::Index i = 0; i < r.size(); ++i) mask[static_cast<std::size_t>(i)] = r(i) >= 0.0 ? 1 : 0;
        return mask;
    };

    std::vector<char> mask = sign_mask(residual);
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        fit.iterations = iter;
        const Eigen::VectorXd w = residual_weights(residual, t);

        Eigen::MatrixXd system = lambda_tilde * (design.transpose() * w.asDiagonal() * design);
        system.diagonal().tail(p).array() += 1.0; // intercept unpenalized
        const Eigen::VectorXd rhs = lambda_tilde * (design.transpose() * w.cwiseProduct(Y).eval());

        Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
        Eigen::VectorXd next;
        if (ldlt.info() == Eigen::Success) {
            next = ldlt.solve(rhs);
        } else {
            next = floored_solve(system, rhs);
            fit.clamped_solve = true;
        }
        if (!next.allFinite()) {
            next = floored_solve(system, rhs);
            fit.clamped_solve = true;
        }

        const double change = (next - coef).cwiseAbs().maxCoeff();
        coef = next;
        residual = Y - design * coef;
        const std::vector<char> new_mask = sign_mask(residual);
        // Unchanged signs mean the quadratic just solved is the active piece
        // of the objective, so this point is exactly stationary.
        if (new_mask == mask || change < options.tol) {
            fit.converged = true;
            mask = new_mask;
            break;
        }
        mask = new_mask;
    }

    fit.alpha = coef(0);
    fit.theta = coef.tail(p);
    fit.beta = fit.theta;
    fit.kkt_residual = primal_gradient(Z, Y, tau, lambda, fit.alpha, fit.theta).norm();
    return fit;
}

namespace {

// Euclidean projection onto {a >= 0, eta >= 0, sum(a) = sum(eta)}. With a
// multiplier mu for the balance constraint the components separate into
// max(0, a0 - mu) and max(0, eta0 + mu); mu is found by bisection on the
// monotone balance function.
void project_dual(const Eigen::VectorXd& a0, const Eigen::VectorXd& eta0, Eigen::VectorXd& a, Eigen::VectorXd& eta) {
    const double bound = std::max(a0.cwiseAbs().maxCoeff(), eta0.cwiseAbs().maxCoeff()) + 1.0;
    double lo = -bound, hi = bound;
    auto balance = [&](double mu) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < a0.size(); ++i) s += std::max(0.0, a0(i) - mu);
        for (Eigen::Index i = 0; i < eta0.size(); ++i) s -= std::max(0.0, eta0(i) + mu);
        return s;
    };
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (balance(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double mu = 0.5 * (lo + hi);
    a = (a0.array() - mu).cwiseMax(0.0).matrix();
    eta = (eta0.array() + mu).cwiseMax(0.0).matrix();
}

} // namespace

std::pair<DualSolution, ExpectileFit> solve_dual(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y,
                                                 ExpectileLevel tau, double lambda, const DualOptions& options) {
    check_instance(Z, Y, lambda);
    const Eigen::Index n = Z.rows();
    const double t = tau.value();
    const double lambda_tilde = lambda / static_cast<double>(n);
    const double ca = 1.0 / (2.0 * lambda_tilde * t);
    const double ce = 1.0 / (2.0 * lambda_tilde * (1.0 - t));

    const Eigen::MatrixXd gram = Z * Z.transpose();
    // lambda_max(Z Z^T) equals lambda_max(Z^T Z), which is only p x p.
    double gram_norm = 0.0;
    if (Z.cols() > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Z.transpose() * Z);
        gram_norm = std::max(0.0, eig.eigenvalues().maxCoeff());
    }
    const double step = 1.0 / (gram_norm + std::max(ca, ce));

    auto objective = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& eta) {
        const Eigen::VectorXd q = a - eta;
        return q.dot(Y) - 0.25 * q.dot(gram * q) - 0.5 * ca * a.squaredNorm() - 0.5 * ce * eta.squaredNorm();
    };
    auto ascent_step = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& eta, Eigen::VectorXd& out_a,
                           Eigen::VectorXd& out_eta) {
        const Eigen::VectorXd half_gq = 0.5 * (gram * (a - eta));
        const Eigen::VectorXd grad_a = Y - half_gq - ca * a;
        const Eigen::VectorXd grad_eta = -Y + half_gq - ce * eta;
        project_dual(a + step * grad_a, eta + step * grad_eta, out_a, out_eta);
    };

    Eigen::VectorXd a = Eigen::VectorXd::Zero(n), eta = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd ya = a, yeta = eta;
    Eigen::VectorXd next_a(n), next_eta(n);
    double obj = objective(a, eta);
    double momentum = 1.0;

    DualSolution dual;
    ExpectileFit fit;
    fit.tau = t;
    fit.lambda = lambda;

    auto recover = [&](const Eigen::VectorXd& av, const Eigen::VectorXd& ev) {
        fit.theta = 0.5 * (Z.transpose() * (av - ev));
        const Eigen::VectorXd partial = Y - Z * fit.theta;
        fit.alpha = expectile(partial, tau);
        fit.beta = fit.theta;
    };

    bool converged = false;
    int iterations = 0;
    double gap = std::numeric_limits<double>::quiet_NaN();
    double primal = std::numeric_limits<double>::quiet_NaN();
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        iterations = iter;
        ascent_step(ya, yeta, next_a, next_eta);
        double next_obj = objective(next_a, next_eta);
        if (next_obj < obj) {
            // Momentum overshot; restart from the best iterate.
            momentum = 1.0;
            ascent_step(a, eta, next_a, next_eta);
            next_obj = objective(next_a, next_eta);
        }
        const double move = std::max((next_a - a).cwiseAbs().maxCoeff(), (next_eta - eta).cwiseAbs().maxCoeff());
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const double mix = (momentum - 1.0) / next_momentum;
        ya = next_a + mix * (next_a - a);
        yeta = next_eta + mix * (next_eta - eta);
        a.swap(next_a);
        eta.swap(next_eta);
        obj = std::max(obj, next_obj);
        momentum = next_momentum;

        if (iter % 50 == 0 || move == 0.0 || iter == options.max_iter) {
            recover(a, eta);
            primal = primal_objective(Z, Y, tau, lambda, fit.alpha, fit.theta);
            gap = primal - objective(a, eta);
            if (std::abs(gap) <= options.gap_tol * (1.0 + std::abs(primal))) {
                converged = true;
                break;
            }
            if (move == 0.0) break; // projection fixed point; gap will not improve
        }
    }
    if (!std::isfinite(gap)) {
        recover(a, eta);
        primal = primal_objective(Z, Y, tau, lambda, fit.alpha, fit.theta);
        gap = primal - objective(a, eta);
    }

    dual.a = a;
    dual.eta = eta;
    dual.iterations = iterations;
    dual.converged = converged;
    dual.objective = objective(a, eta);
    fit.iterations = iterations;
    fit.converged = converged;
    fit.duality_gap = gap;
    fit.kkt_residual = primal_gradient(Z, Y, tau, lambda, fit.alpha, fit.theta).norm();
    return {std::move(dual), std::move(fit)};
}

KktReport verify_kkt(const ExpectileFit& fit, const DualSolution& dual, const Eigen::MatrixXd& Z,
                     const Eigen::VectorXd& Y) {
    check_instance(Z, Y, fit.lambda);
    if (dual.a.size() != Z.rows() || dual.eta.size() != Z.rows())
        throw std::invalid_argument("verify_kkt: dual multiplier length does not match Z");
    const double t = fit.tau;
    const double lambda_tilde = fit.lambda / static_cast<double>(Z.rows());

    const Eigen::VectorXd r = Y - Z * fit.theta - Eigen::VectorXd::Constant(Y.size(), fit.alpha);
    const Eigen::VectorXd xi_plus = r.cwiseMax(0.0);
    const Eigen::VectorXd xi_minus = (-r).cwiseMax(0.0);

    KktReport report;
    report.xi_plus = (xi_plus - dual.a / (2.0 * lambda_tilde * t)).cwiseAbs().maxCoeff();
    report.xi_minus = (xi_minus - dual.eta / (2.0 * lambda_tilde * (1.0 - t))).cwiseAbs().maxCoeff();
    report.stationarity = (fit.theta - 0.5 * (Z.transpose() * (dual.a - dual.eta))).cwiseAbs().maxCoeff();
    report.feasibility = std::max(0.0, std::max(-dual.a.minCoeff(), -dual.eta.minCoeff()));
    report.balance = std::abs((dual.a - dual.eta).sum());
    double slack = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        slack = std::max(slack, std::abs(dual.a(i) * std::min(r(i), 0.0)));
        slack = std::max(slack, std::abs(dual.eta(i) * std::max(r(i), 0.0)));
    }
    report.comp_slackness = slack;
    return report;
}

} // namespace pals
