#pragma once

#include <Eigen/Dense>

#include <functional>

namespace iontrap {

struct MinimizeOptions {
    double grad_tol = 1e-9;   // infinity norm
    int max_iterations = 50000;
    int history = 10;
    double max_step = 0.5;    // cap on the infinity norm of one step
};

struct MinimizeResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Objective callback: fills grad and returns the value at x.
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Limited-memory BFGS with Armijo backtracking. Falls back to steepest
/// descent whenever the two-loop direction fails to descend.
MinimizeResult lbfgs_minimize(const ObjectiveFn& fn, Eigen::VectorXd x0,
                              const MinimizeOptions& opts = {});

} // namespace iontrap
