#include "punctual/coeff.hpp"

#include "punctual/error.hpp"
#include "punctual/quadrature.hpp"
#include "punctual/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace punctual {

namespace {

const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

void zero_sample(int d, CoeffSample& out) {
    out.b.setZero(d);
    out.bt.setZero(d);
    out.a.setZero(d, d);
    out.sigma.setZero(d, d);
    out.on_gamma = true;
}

double op_norm_sym(const Mat& m) {
    if (m.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return std::max(std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[m.rows() - 1]));
}

double op_norm(const Mat& m) {
    if (m.rows() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()[0];
}

}  // namespace

CoefficientField::CoefficientField(FitnessModel model, MutationKernel kernel, SingularitySet gamma,
                                   Backend backend)
    : model_(std::move(model)), kernel_(std::move(kernel)), gamma_(std::move(gamma)),
      backend_(backend) {
    const int d = model_.dim();
    if (kernel_.dim() != d) throw DimensionMismatch("model and kernel dimensions differ");
    if (backend_.kind == BackendKind::gaussian_closed_form && !kernel_.is_gaussian()) {
        throw DomainError("closed-form coefficients need a Gaussian kernel");
    }
    if (backend_.kind == BackendKind::quadrature && !kernel_.is_gaussian() && d > 3) {
        throw DomainError("custom kernel quadrature supports dimensions up to 3");
    }
    if (backend_.kind == BackendKind::quadrature && kernel_.is_gaussian()) {
        const Rule1D& half = half_normal_rule(backend_.gh_points);
        const Rule1D& gh = gauss_hermite_normal(backend_.gh_points);
        const std::size_t m = gh.nodes.size();
        std::size_t transverse = 1;
        for (int i = 1; i < d; ++i) transverse *= m;
        for (std::size_t h = 0; h < half.nodes.size(); ++h) {
            for (std::size_t t = 0; t < transverse; ++t) {
                Vec z(d);
                z[0] = half.nodes[h];
                double w = half.weights[h];
                std::size_t rem = t;
                for (int i = 1; i < d; ++i) {
                    z[i] = gh.nodes[rem % m];
                    w *= gh.weights[rem % m];
                    rem /= m;
                }
                nodes_.push_back(z);
                weights_.push_back(w);
            }
        }
    }
}

void CoefficientField::evaluate(const Vec& x, CoeffSample& out) const {
    const int d = dim();
    if (x.size() != d) throw DimensionMismatch("coefficient point has wrong dimension");
    const Vec w = model_.selection_gradient(x);
    if (!w.allFinite()) throw ModelEvaluationError("non-finite selection gradient");
    if (w.norm() < kZeroGradient) {
        zero_sample(d, out);
        return;
    }
    out.on_gamma = false;
    if (backend_.kind == BackendKind::gaussian_closed_form) {
        closed_form(x, w, out);
    } else if (kernel_.is_gaussian()) {
        gauss_hermite(x, w, out);
    } else {
        ball_quadrature(x, w, out);
    }
}

void CoefficientField::closed_form(const Vec& x, const Vec& w, CoeffSample& out) const {
    const int d = dim();
    const Mat h = model_.hess11(x, x);
    const Mat id = Mat::Identity(d, d);
    if (kernel_.kind() == MutationKernel::Kind::gaussian_isotropic) {
        const double s = kernel_.scale();
        const double wn = w.norm();
        const Vec v = w / wn;
        const double c = 0.5 * wn * kSqrt2OverPi * s * s * s;
        out.b = 0.5 * s * s * w;
        out.a = c * (id + v * v.transpose());
        out.sigma = std::sqrt(c) * (id + (std::sqrt(2.0) - 1.0) * v * v.transpose());
        const Vec hv = h * v;
        out.bt = 0.5 * kSqrt2OverPi * s * s * s * (hv + 0.5 * (h.trace() - v.dot(hv)) * v);
        return;
    }
    // h = L xi with L = K^{1/2}; the half-space becomes {xi . L w > 0}
    const Mat& l = kernel_.covariance_sqrt();
    const Vec u = l * w;
    const double un = u.norm();
    const Vec uh = u / un;
    out.b = 0.5 * kernel_.covariance() * w;
    out.a = 0.5 * un * kSqrt2OverPi * l * (id + uh * uh.transpose()) * l;
    out.a = 0.5 * (out.a + out.a.transpose());
    out.sigma = sqrt_psd(out.a);
    const Mat hp = l * h * l;
    const Vec hu = hp * uh;
    out.bt = 0.5 * kSqrt2OverPi * l * (hu + 0.5 * (hp.trace() - uh.dot(hu)) * uh);
}

void CoefficientField::gauss_hermite(const Vec& x, const Vec& w, CoeffSample& out) const {
    const int d = dim();
    const Mat h = model_.hess11(x, x);
    const Mat& l = kernel_.covariance_sqrt();
    // rotate so that the half-space normal L w is axis 0
    const Mat lq = l * basis_with_first(l * w);
    out.b.setZero(d);
    out.bt.setZero(d);
    out.a.setZero(d, d);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Vec hh = lq * nodes_[i];
        const double wt = weights_[i];
        // the rule restricts to the half-space; integrands stay polynomial
        const double proj = w.dot(hh);
        out.b += (wt * proj) * hh;
        out.a += (wt * proj) * hh * hh.transpose();
        out.bt += (0.5 * wt * hh.dot(h * hh)) * hh;
    }
    out.a = 0.5 * (out.a + out.a.transpose());
    out.sigma = sqrt_psd(out.a);
}

void CoefficientField::ball_quadrature(const Vec& x, const Vec& w, CoeffSample& out) const {
    const int d = dim();
    const Mat h = model_.hess11(x, x);
    const Mat q = basis_with_first(w);
    const double r = kernel_.support_radius();
    const double tol = backend_.tol;
    double worst = 0.0;
    double scale = 0.0;
    auto integrate = [&](auto&& fn) {
        QuadResult res = integrate_ball(
            d, r, true,
            [&](const Vec& z) {
                const Vec hh = q * z;
                return fn(hh) * kernel_.density(x, hh);
            },
            tol);
        worst = std::max(worst, res.error);
        scale = std::max(scale, std::abs(res.value));
        return res.value;
    };
    out.b.resize(d);
    out.bt.resize(d);
    out.a.resize(d, d);
    for (int k = 0; k < d; ++k) {
        out.b[k] = integrate([&](const Vec& hh) { return hh[k] * w.dot(hh); });
        out.bt[k] = 0.5 * integrate([&](const Vec& hh) { return hh[k] * hh.dot(h * hh); });
        for (int j = 0; j <= k; ++j) {
            out.a(k, j) = out.a(j, k) = integrate([&](const Vec& hh) { return hh[k] * hh[j] * w.dot(hh); });
        }
    }
    if (worst > std::max(100.0 * tol * scale, 1e-14)) {
        throw QuadratureError("coefficient quadrature did not reach tolerance", worst);
    }
    out.sigma = sqrt_psd(out.a);
}

Vec CoefficientField::b(const Vec& x) const {
    CoeffSample s;
    evaluate(x, s);
    return s.b;
}

Vec CoefficientField::b_tilde(const Vec& x) const {
    CoeffSample s;
    evaluate(x, s);
    return s.bt;
}

Vec CoefficientField::b_eps(const Vec& x, double eps) const {
    CoeffSample s;
    evaluate(x, s);
    return s.b + eps * s.bt;
}

Mat CoefficientField::a(const Vec& x) const {
    CoeffSample s;
    evaluate(x, s);
    return s.a;
}

Mat CoefficientField::sigma(const Vec& x) const {
    CoeffSample s;
    evaluate(x, s);
    return s.sigma;
}

CoefficientField build_field(const FitnessModel& model, const MutationKernel& kernel,
                             const SingularitySet& gamma, Backend backend) {
    return CoefficientField(model, kernel, gamma, backend);
}

Mat eval_a_gaussian_closed_form(const FitnessModel& model, double s, const Vec& x) {
    const int d = model.dim();
    const Vec w = model.selection_gradient(x);
    const double wn = w.norm();
    if (wn < kZeroGradient) return Mat::Zero(d, d);
    const Vec v = w / wn;
    return 0.5 * wn * kSqrt2OverPi * s * s * s * (Mat::Identity(d, d) + v * v.transpose());
}

double h4_integral(const MutationKernel& kernel, const Vec& x, const Vec& u, const Vec& v,
                   double tol) {
    const int d = kernel.dim();
    if (kernel.is_gaussian()) {
        // h = L xi: |h.v| = |xi . L v|, rotate L v onto axis 0, use the symmetry
        const Mat& l = kernel.covariance_sqrt();
        const Vec lv = l * v;
        const double lvn = lv.norm();
        if (lvn == 0.0) return 0.0;
        const Vec lu = basis_with_first(lv).transpose() * (l * u);
        const Rule1D& half = half_normal_rule(4);
        // (z . lu)^2 z0 has only z0^3 and z0 * z_j^2 terms with nonzero mean
        double e_z0 = 0.0;
        double e_z0_cubed = 0.0;
        for (std::size_t i = 0; i < half.nodes.size(); ++i) {
            const double t = half.nodes[i];
            e_z0 += half.weights[i] * t;
            e_z0_cubed += half.weights[i] * t * t * t;
        }
        double acc = lu[0] * lu[0] * e_z0_cubed;
        for (int j = 1; j < d; ++j) acc += lu[j] * lu[j] * e_z0;
        return 2.0 * lvn * acc;
    }
    if (d > 3) throw DomainError("custom kernel H4 quadrature supports dimensions up to 3");
    const Mat q = basis_with_first(v);
    QuadResult res = integrate_ball(
        d, kernel.support_radius(), true,
        [&](const Vec& z) {
            const Vec hh = q * z;
            const double hu = hh.dot(u);
            return hu * hu * std::abs(hh.dot(v)) * kernel.density(x, hh);
        },
        tol);
    if (res.error > std::max(100.0 * tol * std::abs(res.value), 1e-14)) {
        throw QuadratureError("H4 quadrature did not reach tolerance", res.error);
    }
    return 2.0 * res.value;
}

double check_h4(const MutationKernel& kernel, double alpha, int samples, std::uint64_t seed) {
    if (!(alpha > 0.0)) throw PreconditionError("check_h4 needs alpha > 0");
    if (samples < 1) throw PreconditionError("check_h4 needs samples >= 1");
    const int d = kernel.dim();
    RandomStream rng(seed, 0);
    auto unit = [&]() {
        Vec z(d);
        for (int i = 0; i < d; ++i) z[i] = rng.normal();
        return Vec(z / z.norm());
    };
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        const double radius = std::pow(rng.uniform(), 1.0 / d) / alpha;
        const Vec x = radius * unit();
        const Vec u = unit();
        const Vec v = unit();
        best = std::min(best, h4_integral(kernel, x, u, v));
    }
    return best;
}

RegularityReport regularity_probe(const CoefficientField& field, const Box& region, double alpha,
                                  int pairs, std::uint64_t seed) {
    if (pairs < 1) throw PreconditionError("regularity_probe needs pairs >= 1");
    const int d = field.dim();
    if (region.dim() != d) throw DimensionMismatch("region dimension differs from the field");
    RandomStream rng(seed, 0);
    auto draw = [&]() {
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = region.lo[i] + (region.hi[i] - region.lo[i]) * rng.uniform();
        return x;
    };
    const double diam = region.diameter();
    RegularityReport rep;
    rep.min_eig_on_gamma_alpha = std::numeric_limits<double>::infinity();
    CoeffSample cx;
    CoeffSample cy;
    for (int p = 0; p < pairs; ++p) {
        const Vec x = draw();
        Vec y;
        if (p % 2 == 0) {
            y = draw();
        } else {
            Vec dir(d);
            for (int i = 0; i < d; ++i) dir[i] = rng.normal();
            const double sep = diam * std::pow(10.0, -6.0 * rng.uniform());
            y = x + sep * dir / dir.norm();
        }
        const double dist = (x - y).norm();
        if (dist == 0.0) continue;
        field.evaluate(x, cx);
        field.evaluate(y, cy);
        rep.lip_b = std::max(rep.lip_b, (cx.b - cy.b).norm() / dist);
        rep.lip_a = std::max(rep.lip_a, op_norm_sym(cx.a - cy.a) / dist);
        const double ds = op_norm(cx.sigma - cy.sigma);
        rep.holder_sigma = std::max(rep.holder_sigma, ds / std::sqrt(dist));
        rep.lip_sigma = std::max(rep.lip_sigma, ds / dist);

        if (field.gamma().distance(x) >= alpha && x.norm() <= 1.0 / alpha) {
            rep.min_eig_on_gamma_alpha = std::min(rep.min_eig_on_gamma_alpha, min_eigenvalue(cx.a));
            ++rep.gamma_alpha_samples;
        }
    }
    if (rep.gamma_alpha_samples == 0) rep.min_eig_on_gamma_alpha = 0.0;
    return rep;
}

}  // namespace punctual
