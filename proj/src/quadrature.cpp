#include "punctual/quadrature.hpp"

#include "punctual/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

namespace punctual {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix, weights are
// mu0 times the squared first components of the eigenvectors.
Rule1D golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0) {
    const Eigen::Index n = diag.size();
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) j(i, i) = diag[i];
    for (Eigen::Index i = 0; i + 1 < n; ++i) j(i, i + 1) = j(i + 1, i) = offdiag[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    Rule1D rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        rule.nodes[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
    }
    return rule;
}

Rule1D build_hermite(int n) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd off(std::max(n - 1, 0));
    for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
    Rule1D r = golub_welsch(diag, off, 1.0);
    // symmetrize so odd integrands cancel to rounding
    for (int i = 0; i < n / 2; ++i) {
        const auto a = static_cast<std::size_t>(i);
        const auto b = static_cast<std::size_t>(n - 1 - i);
        const double x = 0.5 * (r.nodes[b] - r.nodes[a]);
        const double w = 0.5 * (r.weights[a] + r.weights[b]);
        r.nodes[a] = -x;
        r.nodes[b] = x;
        r.weights[a] = r.weights[b] = w;
    }
    if (n % 2 == 1) r.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return r;
}

Rule1D build_laguerre(int n) {
    Eigen::VectorXd diag(n);
    Eigen::VectorXd off(std::max(n - 1, 0));
    for (int k = 0; k < n; ++k) diag[k] = 2.0 * k + 1.0;
    for (int k = 1; k < n; ++k) off[k - 1] = k;
    return golub_welsch(diag, off, 1.0);
}

Rule1D build_half_normal(int n) {
    const Rule1D& gh = gauss_hermite_normal(n);
    const Rule1D& gl = gauss_laguerre(n);
    Rule1D r;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        r.nodes.push_back(gh.nodes[i]);
        r.weights.push_back(0.5 * gh.weights[i]);
    }
    const double c = 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double t = std::sqrt(2.0 * gl.nodes[k]);
        const double w = c * gl.weights[k] / t;
        r.nodes.push_back(t);
        r.weights.push_back(w);
        r.nodes.push_back(-t);
        r.weights.push_back(-w);
    }
    return r;
}

template <class Build>
const Rule1D& cached(std::map<int, Rule1D>& cache, std::mutex& mu, int n, Build build) {
    if (n < 1 || n > 200) throw DomainError("quadrature rule size out of range");
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build(n)).first;
    return it->second;
}

// One GK15 panel; boost's error for a single panel refers to [-1, 1], so
// the map is done here and the estimate carries the Jacobian.
QuadResult gk_panel(const std::function<double(double)>& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    auto g = [&](double u) { return f(mid + half * u) * half; };
    QuadResult r;
    r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, -1.0, 1.0, 0, 0.0, &r.error);
    return r;
}

// Global adaptive subdivision: always bisect the panel with the largest error.
QuadResult gk(const std::function<double(double)>& f, double a, double b, double rel_tol,
              int max_depth) {
    QuadResult total;
    if (a == b) return total;
    if (a > b) {
        total = gk(f, b, a, rel_tol, max_depth);
        total.value = -total.value;
        return total;
    }
    struct Panel {
        double a, b;
        QuadResult q;
        int depth;
    };
    std::vector<Panel> panels{{a, b, gk_panel(f, a, b), 0}};
    total = panels[0].q;
    const std::size_t max_panels = 2000;
    while (total.error > std::max(rel_tol * std::abs(total.value), 1e-15) && panels.size() < max_panels) {
        auto worst = std::max_element(panels.begin(), panels.end(),
                                      [](const Panel& x, const Panel& y) { return x.q.error < y.q.error; });
        if (worst->depth >= max_depth + 20) break;
        const double m = 0.5 * (worst->a + worst->b);
        if (!(m > worst->a && m < worst->b)) break;
        Panel left{worst->a, m, gk_panel(f, worst->a, m), worst->depth + 1};
        Panel right{m, worst->b, gk_panel(f, m, worst->b), worst->depth + 1};
        *worst = left;
        panels.push_back(right);
        total = {};
        for (const Panel& p : panels) {
            total.value += p.q.value;
            total.error += p.q.error;
        }
    }
    return total;
}

}  // namespace

const Rule1D& gauss_hermite_normal(int n) {
    static std::map<int, Rule1D> cache;
    static std::mutex mu;
    return cached(cache, mu, n, build_hermite);
}

const Rule1D& gauss_laguerre(int n) {
    static std::map<int, Rule1D> cache;
    static std::mutex mu;
    return cached(cache, mu, n, build_laguerre);
}

const Rule1D& half_normal_rule(int n) {
    static std::map<int, Rule1D> cache;
    static std::mutex mu;
    return cached(cache, mu, n, build_half_normal);
}

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol, int max_depth) {
    QuadResult r = gk(f, a, b, rel_tol, max_depth);
    if (!std::isfinite(r.value) || r.error > std::max(rel_tol * std::abs(r.value), 1e-13)) {
        throw QuadratureError("adaptive quadrature did not reach tolerance", r.error);
    }
    return r;
}

QuadResult integrate_gk(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        int max_depth) {
    return gk(f, a, b, rel_tol, max_depth);
}

QuadResult integrate_ball(int dim, double radius, bool half_space,
                          const std::function<double(const Vec&)>& f, double rel_tol) {
    if (dim < 1 || dim > 3) throw DomainError("integrate_ball supports dimensions 1 to 3");
    if (!(radius > 0.0)) throw DomainError("integrate_ball needs a positive radius");

    Vec eta = Vec::Zero(dim);
    double outer_err = 0.0;
    const double inner_tol = rel_tol * 0.1;

    // innermost coordinate is dim-1; coordinate 0 carries the half-space cut
    std::function<double(int, double)> level = [&](int axis, double r2_left) -> double {
        const double half = std::sqrt(std::max(r2_left, 0.0));
        const double lo = (axis == 0 && half_space) ? 0.0 : -half;
        auto g = [&, axis, r2_left](double t) {
            eta[axis] = t;
            if (axis == dim - 1) return f(eta);
            return level(axis + 1, r2_left - t * t);
        };
        QuadResult q = gk(g, lo, half, axis == 0 ? rel_tol : inner_tol, 12);
        if (axis == 0) outer_err = q.error;
        return q.value;
    };

    QuadResult out;
    out.value = level(0, radius * radius);
    out.error = outer_err;
    if (!std::isfinite(out.value)) {
        throw QuadratureError("ball quadrature produced a non-finite value", out.error);
    }
    return out;
}

}  // namespace punctual
