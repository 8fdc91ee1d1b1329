#include "punctual/optimize.hpp"

#include <ceres/ceres.h>

#include <cmath>

namespace punctual {

namespace {

class Problem final : public ceres::FirstOrderFunction {
public:
    Problem(const GradientFn& fn, int n) : fn_(fn), n_(n) {}

    bool Evaluate(const double* params, double* cost, double* gradient) const override {
        const Eigen::Map<const Eigen::VectorXd> x(params, n_);
        Eigen::VectorXd g(n_);
        const double f = fn_(x, g);
        if (!std::isfinite(f)) return false;
        *cost = f;
        if (gradient) {
            if (!g.allFinite()) return false;
            Eigen::Map<Eigen::VectorXd>(gradient, n_) = g;
        }
        return true;
    }

    int NumParameters() const override { return n_; }

private:
    const GradientFn& fn_;
    int n_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const GradientFn& fn, Eigen::VectorXd& x, int max_iters, double tol) {
    LbfgsResult out;
    const int n = static_cast<int>(x.size());
    if (n == 0) {
        Eigen::VectorXd g;
        out.f = fn(x, g);
        out.converged = true;
        return out;
    }
    ceres::GradientProblem problem(new Problem(fn, n));
    ceres::GradientProblemSolver::Options opts;
    opts.line_search_direction_type = ceres::LBFGS;
    opts.line_search_type = ceres::WOLFE;
    opts.max_num_iterations = max_iters;
    opts.function_tolerance = 1e-13;
    opts.gradient_tolerance = tol;
    opts.parameter_tolerance = 1e-14;
    opts.logging_type = ceres::SILENT;
    opts.minimizer_progress_to_stdout = false;
    ceres::GradientProblemSolver::Summary summary;
    std::vector<double> params(x.data(), x.data() + n);
    ceres::Solve(opts, problem, params.data(), &summary);
    x = Eigen::Map<Eigen::VectorXd>(params.data(), n);
    out.f = summary.final_cost;
    out.iterations = static_cast<int>(summary.iterations.size());
    out.converged = summary.termination_type == ceres::CONVERGENCE;
    return out;
}

}  // namespace punctual
