#include "afc/lsq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace afc {

namespace {

double relative_gradient(const Eigen::MatrixXd& J, const Eigen::VectorXd& r, double data_norm) {
    const Eigen::VectorXd g = J.transpose() * r;
    const double scale = std::max(data_norm, std::numeric_limits<double>::min());
    double worst = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double cn = J.col(i).norm();
        if (cn > 0.0) worst = std::max(worst, std::abs(g(i)) / (cn * scale));
    }
    return worst;
}

}  // namespace

LsqSolution levenberg_marquardt(const ResidualFn& fn, const Eigen::VectorXd& p0, const LsqOptions& opts) {
    LsqSolution sol;
    Eigen::VectorXd p = p0;
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    fn(p, r, &J);
    double cost = 0.5 * r.squaredNorm();
    sol.cost_history.push_back(cost);

    const Eigen::Index np = p.size();
    double lambda = -1.0;
    double nu = 2.0;
    std::size_t it = 0;
    bool converged = false;
    Eigen::VectorXd r_try;

    for (; it < opts.max_iterations; ++it) {
        if (!std::isfinite(cost)) break;
        const double rg = relative_gradient(J, r, opts.data_norm);
        if (rg <= opts.gradient_tol || cost == 0.0) {
            converged = true;
            break;
        }
        const Eigen::MatrixXd A = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        Eigen::VectorXd diag = A.diagonal().cwiseMax(1e-300);
        if (lambda < 0.0) lambda = 1e-3 * diag.maxCoeff();

        bool accepted = false;
        bool stalled = false;
        for (int inner = 0; inner < 60 && !accepted; ++inner) {
            Eigen::MatrixXd Ad = A;
            Ad.diagonal() += lambda * diag;
            const Eigen::VectorXd step = Ad.ldlt().solve(-g);
            if (!step.allFinite()) {
                lambda *= nu;
                nu *= 2.0;
                continue;
            }
            if (step.norm() <= 1e-15 * (p.norm() + 1e-15)) {
                stalled = true;
                break;
            }
            const Eigen::VectorXd p_try = p + step;
            fn(p_try, r_try, nullptr);
            const double c_try = 0.5 * r_try.squaredNorm();
            const double predicted = -(g.dot(step) + 0.5 * step.dot(A * step));
            if (std::isfinite(c_try) && c_try >= cost && predicted <= 1e-12 * cost) {
                // Cost differences are below rounding; judge the step by the gradient instead.
                Eigen::MatrixXd J_try;
                fn(p_try, r_try, &J_try);
                if (relative_gradient(J_try, r_try, opts.data_norm) < rg && c_try <= cost * (1.0 + 1e-12)) {
                    p = p_try;
                    r = r_try;
                    J = J_try;
                    cost = std::min(cost, c_try);
                    sol.cost_history.push_back(cost);
                    accepted = true;
                    break;
                }
            }
            if (std::isfinite(c_try) && c_try < cost) {
                const double rho = predicted > 0.0 ? (cost - c_try) / predicted : 0.0;
                lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
                nu = 2.0;
                p = p_try;
                fn(p, r, &J);
                cost = 0.5 * r.squaredNorm();
                sol.cost_history.push_back(cost);
                accepted = true;
            } else {
                lambda *= nu;
                nu *= 2.0;
            }
        }
        if (!accepted || stalled) {
            // No descent possible at working precision.
            converged = relative_gradient(J, r, opts.data_norm) <= opts.gradient_tol ||
                        std::sqrt(2.0 * cost) <= 1e-12 * opts.data_norm;
            break;
        }
    }
    if (it == opts.max_iterations) converged = relative_gradient(J, r, opts.data_norm) <= opts.gradient_tol;

    sol.params = p;
    sol.residuals = r;
    sol.jacobian = J;
    sol.cost = 0.5 * r.squaredNorm();
    sol.relative_gradient = relative_gradient(J, r, opts.data_norm);
    sol.converged = converged;
    sol.iterations = it;

    const Eigen::Index n = r.size();
    const double s2 = n > np ? 2.0 * sol.cost / static_cast<double>(n - np) : 0.0;
    const Eigen::MatrixXd A = J.transpose() * J;
    sol.covariance = s2 * A.completeOrthogonalDecomposition().pseudoInverse();
    return sol;
}

ResidualFn with_numeric_jacobian(std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> fn) {
    return [fn = std::move(fn)](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        fn(p, r);
        if (!jac) return;
        jac->resize(r.size(), p.size());
        Eigen::VectorXd rp, rm;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(p(i)));
            Eigen::VectorXd q = p;
            q(i) = p(i) + h;
            fn(q, rp);
            q(i) = p(i) - h;
            fn(q, rm);
            jac->col(i) = (rp - rm) / (2.0 * h);
        }
    };
}

}  // namespace afc
