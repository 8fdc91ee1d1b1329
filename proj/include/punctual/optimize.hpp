#pragma once

#include <Eigen/Dense>

#include <functional>

namespace punctual {

struct LbfgsResult {
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// f(x, grad) -> value; +inf marks an infeasible point, which the line
/// search backs away from. x is updated in place with the best point.
using GradientFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

LbfgsResult lbfgs_minimize(const GradientFn& fn, Eigen::VectorXd& x, int max_iters, double tol);

}  // namespace punctual
