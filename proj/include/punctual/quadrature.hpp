#pragma once

#include "punctual/linalg.hpp"

#include <functional>
#include <vector>

namespace punctual {

struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Hermite rule for the standard normal density:
/// sum w_i f(x_i) ~ E f(Z), exact for polynomials of degree <= 2n-1.
const Rule1D& gauss_hermite_normal(int n);

/// n-point Gauss-Laguerre rule for weight e^{-u} on [0, inf).
const Rule1D& gauss_laguerre(int n);

/// Rule for integral_0^inf f(t) phi(t) dt with phi the standard normal
/// density. The even part of f is integrated on the full line with
/// Gauss-Hermite, the odd part through u = t^2/2 with Gauss-Laguerre, so
/// the indicator of the half-line never enters a rule. Exact for
/// polynomials of degree <= 2n-1.
const Rule1D& half_normal_rule(int n);

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
};

/// Adaptive Gauss-Kronrod (15-point) on [a, b]. Throws QuadratureError when
/// the estimate misses max(rel_tol |value|, 1e-13).
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol, int max_depth = 15);

/// Same rule without the tolerance check; the caller judges `error`.
QuadResult integrate_gk(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        int max_depth = 15);

/// Nested adaptive integral of f over the ball {|eta| <= radius} in R^d,
/// optionally restricted to the half ball eta_0 >= 0. Supported for d <= 3.
QuadResult integrate_ball(int dim, double radius, bool half_space,
                          const std::function<double(const Vec&)>& f, double rel_tol);

}  // namespace punctual
