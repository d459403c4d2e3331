#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace afc {

// Residuals r(p); fills J = dr/dp when the pointer is non-null.
using ResidualFn = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac)>;

struct LsqOptions {
    double gradient_tol = 1e-10;  // max_i |J_i . r| / (|J_i| |y|)
    std::size_t max_iterations = 500;
    double data_norm = 1.0;  // |y|, scale for the gradient test
};

struct LsqSolution {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    Eigen::MatrixXd covariance;  // s^2 (J^T J)^+
    double cost = 0.0;           // 0.5 |r|^2
    double relative_gradient = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<double> cost_history;  // accepted iterates only
};

// Levenberg-damped Gauss-Newton. Steps that raise the cost are rejected.
LsqSolution levenberg_marquardt(const ResidualFn& fn, const Eigen::VectorXd& p0, const LsqOptions& opts = {});

// Central-difference Jacobian wrapper for residual functions without derivatives.
ResidualFn with_numeric_jacobian(std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> fn);

}  // namespace afc
