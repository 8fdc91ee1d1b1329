#include "punctual/classify.hpp"

#include "punctual/error.hpp"
#include "punctual/quadrature.hpp"
#include "punctual/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace punctual {

std::string to_string(Dim1Case c) {
    switch (c) {
        case Dim1Case::a_recurrent: return "a_recurrent";
        case Dim1Case::b_hits_right: return "b_hits_right";
        case Dim1Case::c_hits_left: return "c_hits_left";
        case Dim1Case::d_hits_either: return "d_hits_either";
    }
    return "?";
}

std::string to_string(Finiteness f) {
    switch (f) {
        case Finiteness::finite: return "finite";
        case Finiteness::infinite: return "infinite";
        case Finiteness::inconclusive: return "inconclusive";
    }
    return "?";
}

std::string to_string(DimDClass c) {
    switch (c) {
        case DimDClass::never_absorbed: return "never_absorbed";
        case DimDClass::absorbed_with_positive_prob: return "absorbed_with_positive_prob";
        case DimDClass::inconclusive: return "inconclusive";
    }
    return "?";
}

Dim1Case dim1_case(double alpha, double beta) {
    const bool left_blocked = alpha >= 1.0;
    const bool right_blocked = beta <= -1.0;
    if (left_blocked && right_blocked) return Dim1Case::a_recurrent;
    if (left_blocked) return Dim1Case::b_hits_right;
    if (right_blocked) return Dim1Case::c_hits_left;
    return Dim1Case::d_hits_either;
}

Dim1Verdict classify_dim1(const FitnessModel& model, const MutationKernel& kernel,
                          const SingularitySet& gamma, double x) {
    if (model.dim() != 1 || kernel.dim() != 1) throw DimensionMismatch("classify_dim1 needs d = 1");
    const Vec xv = make_vec({x});
    if (gamma.distance(xv) <= gamma.merge_radius) {
        throw PreconditionError("classify_dim1: x lies on a singularity");
    }
    double c = -std::numeric_limits<double>::infinity();
    double cp = std::numeric_limits<double>::infinity();
    for (const Vec& p : gamma.points) {
        if (p[0] < x) c = std::max(c, p[0]);
        if (p[0] > x) cp = std::min(cp, p[0]);
    }
    if (!std::isfinite(c) || !std::isfinite(cp)) {
        throw UnboundedIntervalError("classify_dim1: x has no finite singular neighbour on both sides");
    }
    auto ratios = [&](double at, double& main, double& alt) {
        const Vec p = make_vec({at});
        const double g11 = model.hess11(p, p)(0, 0);
        const double g12 = model.hess12(p, p)(0, 0);
        const double g22 = model.hess22(p, p)(0, 0);
        const double den = g11 + g12;
        if (std::abs(den) < 1e-12 * std::max(1.0, std::abs(g11))) {
            throw DegenerateError("classify_dim1: g11 + g12 vanishes at a neighbouring singularity");
        }
        main = g11 / den;
        alt = 2.0 * g11 / (g11 - g22);
    };
    Dim1Verdict v;
    v.c = c;
    v.c_prime = cp;
    ratios(c, v.alpha, v.alpha_alt);
    ratios(cp, v.beta, v.beta_alt);
    v.kase = dim1_case(v.alpha, v.beta);
    return v;
}

Finiteness finiteness_from_exponent(double exponent) {
    if (!std::isfinite(exponent)) return Finiteness::inconclusive;
    if (std::abs(exponent + 1.0) < kExponentBand) return Finiteness::inconclusive;
    return exponent > -1.0 ? Finiteness::finite : Finiteness::infinite;
}

namespace {

double fit_slope(const std::vector<double>& lx, const std::vector<double>& ly) {
    const double n = static_cast<double>(lx.size());
    if (lx.size() < 3) return std::numeric_limits<double>::quiet_NaN();
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

struct SideResult {
    double p_exponent;
    double v_exponent;
};

// One endpoint: `end` is c (sign = +1, mesh above it) or c' (sign = -1).
SideResult scale_side(const CoefficientField& field, double end, double sign, double gamma_ref,
                      double eps, int n_panels) {
    CoeffSample cs;
    auto ratio = [&](double z) {
        field.evaluate(make_vec({z}), cs);
        return (cs.b[0] + eps * cs.bt[0]) / (eps * cs.a(0, 0));
    };
    auto a_at = [&](double z) {
        field.evaluate(make_vec({z}), cs);
        return cs.a(0, 0);
    };

    const double d0 = std::abs(gamma_ref - end);
    const double r = std::pow(kFitDistMin / d0, 1.0 / n_panels);
    std::vector<double> ys(static_cast<std::size_t>(n_panels) + 1);
    std::vector<double> dist(ys.size());
    for (std::size_t k = 0; k < ys.size(); ++k) {
        dist[k] = d0 * std::pow(r, static_cast<double>(k));
        ys[k] = end + sign * dist[k];
    }
    ys[0] = gamma_ref;

    // Near an endpoint the coefficients carry cancellation noise of order
    // 1e-16 / dist, so the budgets are absolute in log p and relative in m.
    constexpr double kLogBudget = 1e-6;
    // log p'(y) = -2 int_gamma^y ratio
    std::vector<double> logp(ys.size(), 0.0);
    for (std::size_t k = 1; k < ys.size(); ++k) {
        const QuadResult seg = integrate_gk(ratio, ys[k - 1], ys[k], 1e-10);
        if (!std::isfinite(seg.value) || seg.error > kLogBudget) {
            throw QuadratureError("scale function panel missed its error budget", seg.error);
        }
        logp[k] = logp[k - 1] - 2.0 * seg.value;
    }

    // m(y) = int_gamma^y 2 / (eps p'(z) a(z)) dz, scaled by exp(-shift)
    const double shift = -*std::min_element(logp.begin(), logp.end());
    std::vector<double> log_q(ys.size(), 0.0);
    double m_scaled = 0.0;
    for (std::size_t k = 1; k < ys.size(); ++k) {
        const double y0 = ys[k - 1];
        const double lp0 = logp[k - 1];
        auto integrand = [&](double z) {
            const double inner = integrate_gk(ratio, y0, z, 1e-10).value;
            const double lp = lp0 - 2.0 * inner;
            return 2.0 * std::exp(-lp - shift) / (eps * a_at(z));
        };
        const QuadResult q = integrate_gk(integrand, std::min(y0, ys[k]), std::max(y0, ys[k]), 1e-9);
        if (!std::isfinite(q.value) || q.error > kLogBudget * std::abs(q.value) + 1e-300) {
            throw QuadratureError("speed integral panel missed its error budget", q.error);
        }
        m_scaled += std::abs(q.value);
        log_q[k] = logp[k] + std::log(m_scaled) + shift;
    }

    std::vector<double> lx;
    std::vector<double> lp_fit;
    std::vector<double> lq_fit;
    for (std::size_t k = 1; k < ys.size(); ++k) {
        if (dist[k] < kFitDistMin * (1.0 - 1e-9) || dist[k] > kFitDistMax * (1.0 + 1e-9)) continue;
        lx.push_back(std::log(dist[k]));
        lp_fit.push_back(logp[k]);
        lq_fit.push_back(log_q[k]);
    }
    return {fit_slope(lx, lp_fit), fit_slope(lx, lq_fit)};
}

}  // namespace

ScaleVerdicts scale_functions(const CoefficientField& field, double c, double c_prime,
                              double gamma_ref, double eps, int n_panels) {
    if (field.dim() != 1) throw DimensionMismatch("scale_functions needs d = 1");
    if (!(c < gamma_ref && gamma_ref < c_prime)) {
        throw PreconditionError("scale_functions needs c < gamma_ref < c_prime");
    }
    if (!(eps > 0.0)) throw PreconditionError("scale_functions needs eps > 0");
    if (n_panels < 16) throw PreconditionError("scale_functions needs n_panels >= 16");
    const SideResult left = scale_side(field, c, 1.0, gamma_ref, eps, n_panels);
    const SideResult right = scale_side(field, c_prime, -1.0, gamma_ref, eps, n_panels);
    ScaleVerdicts out;
    out.p_exponent_left = left.p_exponent;
    out.p_exponent_right = right.p_exponent;
    out.v_exponent_left = left.v_exponent;
    out.v_exponent_right = right.v_exponent;
    out.p_left = finiteness_from_exponent(left.p_exponent);
    out.p_right = finiteness_from_exponent(right.p_exponent);
    out.v_left = finiteness_from_exponent(left.v_exponent);
    out.v_right = finiteness_from_exponent(right.v_exponent);
    // an infinite scale function forces an infinite speed integral
    if (out.p_left == Finiteness::infinite) out.v_left = Finiteness::infinite;
    if (out.p_right == Finiteness::infinite) out.v_right = Finiteness::infinite;
    return out;
}

DimDVerdict classify_dimd(const FitnessModel& model, const MutationKernel& kernel, const Vec& y,
                          double nbhd_radius, int samples, std::uint64_t seed) {
    const int d = model.dim();
    if (kernel.dim() != d || y.size() != d) throw DimensionMismatch("classify_dimd dimensions differ");
    if (!(nbhd_radius > 0.0)) throw PreconditionError("classify_dimd needs nbhd_radius > 0");
    if (samples < 2) throw PreconditionError("classify_dimd needs samples >= 2");
    if (model.selection_gradient(y).norm() > kGammaResidualTol) {
        throw PreconditionError("classify_dimd: y is not a singularity");
    }

    DimDVerdict out;
    out.y = y;
    out.samples = samples;
    out.d_matrix = model.selection_jacobian(y);
    Eigen::SelfAdjointEigenSolver<Mat> es(out.d_matrix.transpose() * out.d_matrix,
                                          Eigen::EigenvaluesOnly);
    out.eig_min = es.eigenvalues()[0];
    out.eig_max = es.eigenvalues()[d - 1];
    out.d_invertible = out.eig_min > 1e-12 * std::max(1.0, out.eig_max);
    if (!out.d_invertible) throw DegenerateError("classify_dimd: D = H11 + H12 is singular at y");

    SingularitySet gamma;
    gamma.points = {y};
    gamma.residuals = {model.selection_gradient(y).norm()};
    const CoefficientField field(model, kernel, gamma,
                                 kernel.is_gaussian() ? Backend::closed_form() : Backend::quad());

    // Latin hypercube in [0,1]^{d+1}: one radial coordinate, d for the direction
    RandomStream rng(seed, 0);
    const int dims = d + 1;
    std::vector<std::vector<double>> lhs(static_cast<std::size_t>(dims),
                                         std::vector<double>(static_cast<std::size_t>(samples)));
    for (auto& col : lhs) {
        std::vector<int> perm(static_cast<std::size_t>(samples));
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = samples - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.uniform() * (i + 1));
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(std::min(j, i))]);
        }
        for (int i = 0; i < samples; ++i) {
            col[static_cast<std::size_t>(i)] = (perm[static_cast<std::size_t>(i)] + rng.uniform()) / samples;
        }
    }
    const boost::math::normal std_normal;

    out.a_upper = 0.0;
    out.a_lower = std::numeric_limits<double>::infinity();
    out.bt_upper = -std::numeric_limits<double>::infinity();
    out.bt_lower = std::numeric_limits<double>::infinity();
    CoeffSample cs;
    Vec prev_x;
    Mat prev_a;
    for (int i = 0; i < samples; ++i) {
        const auto si = static_cast<std::size_t>(i);
        Vec dir(d);
        for (int k = 0; k < d; ++k) dir[k] = boost::math::quantile(std_normal, lhs[static_cast<std::size_t>(k + 1)][si]);
        if (dir.norm() == 0.0) continue;
        dir /= dir.norm();
        const double rad = nbhd_radius * std::pow(lhs[0][si], 1.0 / d);
        if (rad == 0.0) continue;
        const Vec x = y + rad * dir;
        field.evaluate(x, cs);
        // Lipschitz quotient against y (a(y) = 0) and against the previous sample
        Eigen::SelfAdjointEigenSolver<Mat> ea(cs.a, Eigen::EigenvaluesOnly);
        const double lam_max = ea.eigenvalues()[d - 1];
        const double lam_min = ea.eigenvalues()[0];
        out.a_upper = std::max(out.a_upper, lam_max / rad);
        if (prev_x.size() == d) {
            Eigen::SelfAdjointEigenSolver<Mat> ed(cs.a - prev_a, Eigen::EigenvaluesOnly);
            const double nd = std::max(std::abs(ed.eigenvalues()[0]), std::abs(ed.eigenvalues()[d - 1]));
            const double sep = (x - prev_x).norm();
            if (sep > 0.0) out.a_upper = std::max(out.a_upper, nd / sep);
        }
        out.a_lower = std::min(out.a_lower, lam_min / rad);
        const double radial_bt = dir.dot(cs.bt);
        out.bt_upper = std::max(out.bt_upper, radial_bt);
        out.bt_lower = std::min(out.bt_lower, radial_bt);
        prev_x = x;
        prev_a = cs.a;
    }

    out.criterion_a = (out.bt_lower + d * out.a_lower / 2.0) / out.a_upper;
    out.criterion_b = (out.bt_upper + d * out.a_upper / 2.0) / out.a_lower;
    if (out.criterion_a >= 1.0) {
        out.verdict = DimDClass::never_absorbed;
    } else if (out.criterion_b < 1.0) {
        out.verdict = DimDClass::absorbed_with_positive_prob;
    } else {
        out.verdict = DimDClass::inconclusive;
    }

    // envelope constants at y
    const double m3 = kernel_moment(kernel, y, 3);
    double c_min = std::numeric_limits<double>::infinity();
    RandomStream dirs(seed, 1);
    auto unit = [&]() {
        Vec z(d);
        for (int k = 0; k < d; ++k) z[k] = dirs.normal();
        return Vec(z / z.norm());
    };
    for (int k = 0; k < 200; ++k) {
        const Vec u = unit();
        Vec v = unit();
        if (k % 2 == 1 && d > 1) {
            v -= v.dot(u) * u;
            if (v.norm() < 1e-8) continue;
            v /= v.norm();
        }
        c_min = std::min(c_min, h4_integral(kernel, y, u, v));
    }
    const Mat h11 = model.hess11(y, y);
    Eigen::JacobiSVD<Mat> svd(h11);
    out.a_upper_bound = m3 * std::sqrt(out.eig_max);
    out.a_lower_bound = c_min * std::sqrt(out.eig_min);
    out.bt_envelope = 0.5 * m3 * svd.singularValues()[0];
    return out;
}

}  // namespace punctual
