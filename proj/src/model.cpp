#include "punctual/model.hpp"

#include "punctual/error.hpp"
#include "punctual/quadrature.hpp"
#include "punctual/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace punctual {

namespace {

std::string fmt_point(const Vec& x) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ')';
    return os.str();
}

// Steps for second differences of `eval` need to be larger than for first
// differences: the rounding error scales as eps / h^2.
constexpr double kSecondDiffStep = 1e-4;

enum class Slot { y, x };

Mat eval_second_diff(const FitnessModel& m, const Vec& y, const Vec& x, Slot a, Slot b, double h) {
    const int d = m.dim();
    Mat out(d, d);
    Vec yy = y;
    Vec xx = x;
    auto shift = [&](Slot s, int i, double by) { (s == Slot::y ? yy : xx)[i] += by; };
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int si : {1, -1}) {
                for (int sj : {1, -1}) {
                    shift(a, i, si * h);
                    shift(b, j, sj * h);
                    acc += si * sj * m.eval(yy, xx);
                    shift(a, i, -si * h);
                    shift(b, j, -sj * h);
                }
            }
            out(i, j) = acc / (4.0 * h * h);
        }
    }
    return out;
}

Mat grad1_jacobian(const FitnessModel& m, const Vec& y, const Vec& x, Slot s, double h) {
    const int d = m.dim();
    Mat out(d, d);
    Vec yy = y;
    Vec xx = x;
    Vec& p = s == Slot::y ? yy : xx;
    for (int j = 0; j < d; ++j) {
        const double keep = p[j];
        p[j] = keep + h;
        const Vec up = m.grad1(yy, xx);
        p[j] = keep - h;
        const Vec dn = m.grad1(yy, xx);
        p[j] = keep;
        out.col(j) = (up - dn) / (2.0 * h);
    }
    return out;
}

}  // namespace

FitnessModel::FitnessModel(std::string name, int dim, Callbacks callbacks, double fd_step)
    : name_(std::move(name)), dim_(dim), cb_(std::move(callbacks)), fd_step_(fd_step) {
    if (dim_ < 1 || dim_ > kMaxDim) {
        throw DomainError("fitness model dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }
    if (!cb_.eval) throw DomainError("fitness model needs an eval callback");
    if (!(fd_step_ > 0.0)) throw DomainError("finite-difference step must be positive");
}

DerivMode FitnessModel::deriv_mode() const {
    return (cb_.grad1 && cb_.hess11 && cb_.hess12) ? DerivMode::analytic
                                                    : DerivMode::finite_difference;
}

double FitnessModel::eval(const Vec& y, const Vec& x) const { return cb_.eval(y, x); }

Vec FitnessModel::grad1(const Vec& y, const Vec& x) const {
    if (cb_.grad1) return cb_.grad1(y, x);
    return grad1_fd(y, x, step_for(y));
}

Mat FitnessModel::hess11(const Vec& y, const Vec& x) const {
    if (cb_.hess11) return cb_.hess11(y, x);
    if (cb_.grad1) return grad1_jacobian(*this, y, x, Slot::y, step_for(y));
    return hess11_fd(y, x, std::max(fd_step_, kSecondDiffStep) * (1.0 + y.norm()));
}

Mat FitnessModel::hess12(const Vec& y, const Vec& x) const {
    if (cb_.hess12) return cb_.hess12(y, x);
    if (cb_.grad1) return grad1_jacobian(*this, y, x, Slot::x, step_for(x));
    return eval_second_diff(*this, y, x, Slot::y, Slot::x,
                            std::max(fd_step_, kSecondDiffStep) * (1.0 + x.norm()));
}

Mat FitnessModel::hess22(const Vec& y, const Vec& x) const {
    if (cb_.hess22) return cb_.hess22(y, x);
    return hess22_fd(y, x, std::max(fd_step_, kSecondDiffStep) * (1.0 + x.norm()));
}

Vec FitnessModel::grad1_fd(const Vec& y, const Vec& x, double step) const {
    Vec out(dim_);
    Vec yy = y;
    for (int i = 0; i < dim_; ++i) {
        const double keep = yy[i];
        yy[i] = keep + step;
        const double up = eval(yy, x);
        yy[i] = keep - step;
        const double dn = eval(yy, x);
        yy[i] = keep;
        out[i] = (up - dn) / (2.0 * step);
    }
    return out;
}

Mat FitnessModel::hess11_fd(const Vec& y, const Vec& x, double step) const {
    return eval_second_diff(*this, y, x, Slot::y, Slot::y, step);
}

Mat FitnessModel::hess12_fd(const Vec& y, const Vec& x, double step) const {
    return grad1_jacobian(*this, y, x, Slot::x, step);
}

Mat FitnessModel::hess22_fd(const Vec& y, const Vec& x, double step) const {
    return eval_second_diff(*this, y, x, Slot::x, Slot::x, step);
}

FitnessModel quad1d() {
    FitnessModel::Callbacks cb;
    cb.eval = [](const Vec& y, const Vec& x) {
        const double h = y[0] - x[0];
        return -x[0] * h - h * h;
    };
    cb.grad1 = [](const Vec& y, const Vec& x) { return make_vec({-x[0] - 2.0 * (y[0] - x[0])}); };
    cb.hess11 = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, -2.0); };
    cb.hess12 = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 1.0); };
    cb.hess22 = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 0.0); };
    return FitnessModel("quad1d", 1, std::move(cb));
}

FitnessModel band1d(double kappa) {
    FitnessModel::Callbacks cb;
    cb.eval = [kappa](const Vec& y, const Vec& x) {
        const double h = y[0] - x[0];
        return h * (1.0 - x[0] * x[0]) + kappa * h * h;
    };
    cb.grad1 = [kappa](const Vec& y, const Vec& x) {
        return make_vec({1.0 - x[0] * x[0] + 2.0 * kappa * (y[0] - x[0])});
    };
    cb.hess11 = [kappa](const Vec&, const Vec&) { return Mat::Constant(1, 1, 2.0 * kappa); };
    cb.hess12 = [kappa](const Vec&, const Vec& x) {
        return Mat::Constant(1, 1, -2.0 * x[0] - 2.0 * kappa);
    };
    cb.hess22 = [kappa](const Vec& y, const Vec& x) {
        return Mat::Constant(1, 1, 4.0 * x[0] - 2.0 * (y[0] - x[0]) + 2.0 * kappa);
    };
    return FitnessModel("band1d", 1, std::move(cb));
}

FitnessModel radial2d() {
    FitnessModel::Callbacks cb;
    cb.eval = [](const Vec& y, const Vec& x) {
        const Vec h = y - x;
        return -x.dot(h) - h.squaredNorm();
    };
    cb.grad1 = [](const Vec& y, const Vec& x) -> Vec { return -x - 2.0 * (y - x); };
    cb.hess11 = [](const Vec&, const Vec&) -> Mat { return -2.0 * Mat::Identity(2, 2); };
    cb.hess12 = [](const Vec&, const Vec&) -> Mat { return Mat::Identity(2, 2); };
    cb.hess22 = [](const Vec&, const Vec&) -> Mat { return Mat::Zero(2, 2); };
    return FitnessModel("radial2d", 2, std::move(cb));
}

// ---- mutation kernel ------------------------------------------------------

MutationKernel MutationKernel::gaussian_isotropic(int dim, double s) {
    if (dim < 1 || dim > kMaxDim) throw DomainError("kernel dimension out of range");
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("gaussian kernel scale must be positive");
    MutationKernel k;
    k.kind_ = Kind::gaussian_isotropic;
    k.dim_ = dim;
    k.s_ = s;
    k.cov_ = s * s * Mat::Identity(dim, dim);
    k.cov_sqrt_ = s * Mat::Identity(dim, dim);
    return k;
}

MutationKernel MutationKernel::gaussian_full(const Mat& covariance) {
    const int dim = static_cast<int>(covariance.rows());
    if (dim < 1 || dim > kMaxDim || covariance.cols() != dim) {
        throw DimensionMismatch("covariance must be square with dimension in [1, 8]");
    }
    if (min_eigenvalue(covariance) <= 0.0) {
        throw DomainError("gaussian_full covariance must be positive definite");
    }
    MutationKernel k;
    k.kind_ = Kind::gaussian_full;
    k.dim_ = dim;
    k.cov_ = 0.5 * (covariance + covariance.transpose());
    k.cov_sqrt_ = sqrt_psd(k.cov_);
    k.s_ = std::sqrt(k.cov_.trace() / dim);
    return k;
}

MutationKernel MutationKernel::custom(int dim, DensityFn density, double support_radius) {
    if (dim < 1 || dim > kMaxDim) throw DomainError("kernel dimension out of range");
    if (!density) throw DomainError("custom kernel needs a density");
    if (!(support_radius > 0.0) || !std::isfinite(support_radius)) {
        throw DomainError("custom kernel needs a finite positive support_radius");
    }
    MutationKernel k;
    k.kind_ = Kind::custom;
    k.dim_ = dim;
    k.custom_ = std::move(density);
    k.support_radius_ = support_radius;
    k.s_ = 0.0;
    k.cov_ = Mat::Zero(dim, dim);
    k.cov_sqrt_ = Mat::Zero(dim, dim);
    return k;
}

double MutationKernel::density(const Vec& x, const Vec& h) const {
    if (h.size() != dim_) throw DimensionMismatch("kernel density: step has wrong dimension");
    if (kind_ == Kind::custom) {
        if (h.norm() > support_radius_) return 0.0;
        return custom_(x, h);
    }
    const Mat inv = psd_inverse(cov_, 0.0);
    const double logdet = std::log(cov_.determinant());
    const double q = h.dot(inv * h);
    return std::exp(-0.5 * q - 0.5 * logdet - 0.5 * dim_ * std::log(2.0 * std::numbers::pi));
}

double kernel_moment(const MutationKernel& kernel, const Vec& x, int order) {
    if (order != 2 && order != 3) throw DomainError("kernel_moment order must be 2 or 3");
    const int d = kernel.dim();
    switch (kernel.kind()) {
        case MutationKernel::Kind::gaussian_isotropic: {
            const double s = kernel.scale();
            if (order == 2) return d * s * s;
            return s * s * s * std::pow(2.0, 1.5) * std::exp(std::lgamma(0.5 * (d + 3)) - std::lgamma(0.5 * d));
        }
        case MutationKernel::Kind::gaussian_full: {
            const Mat& k = kernel.covariance();
            if (order == 2) return k.trace();
            // E Q^{3/2} for Q = sum lam_i xi_i^2, from
            // x^{3/2} = Gamma(-3/2)^{-1} int_0^inf (e^{-tx} - 1 + tx) t^{-5/2} dt
            // and E e^{-tQ} = prod (1 + 2 t lam_i)^{-1/2}; t = u^2, then u -> 1/u on [1, inf).
            Eigen::SelfAdjointEigenSolver<Mat> es(k, Eigen::EigenvaluesOnly);
            const Vec lam = es.eigenvalues();
            const double mean_q = lam.sum();
            auto kernel_t = [&](double t) {
                double l = 0.0;
                for (int i = 0; i < d; ++i) l -= 0.5 * std::log1p(2.0 * t * lam[i]);
                return std::expm1(l) + t * mean_q;
            };
            auto near = [&](double u) {
                if (u == 0.0) return 0.0;
                const double t = u * u;
                return 2.0 * kernel_t(t) / (t * t);
            };
            auto far = [&](double w) {
                if (w == 0.0) return 2.0 * mean_q;
                const double t = 1.0 / (w * w);
                return 2.0 * w * w * kernel_t(t);
            };
            // the integrand near u = 0 tends to E Q^2 = 2 sum lam_i^2 + (sum lam_i)^2
            auto near_safe = [&](double u) {
                if (u < 1e-3) return 2.0 * lam.squaredNorm() + mean_q * mean_q;
                return near(u);
            };
            const double total = integrate_adaptive(near_safe, 0.0, 1.0, 1e-12).value +
                                 integrate_adaptive(far, 0.0, 1.0, 1e-12).value;
            return total * 3.0 / (4.0 * std::sqrt(std::numbers::pi));
        }
        case MutationKernel::Kind::custom: {
            if (d > 3) throw DomainError("custom kernel moments support dimensions up to 3");
            const double tol = 1e-9;
            QuadResult q = integrate_ball(
                d, kernel.support_radius(), false,
                [&](const Vec& h) { return std::pow(h.norm(), order) * kernel.density(x, h); }, tol);
            if (q.error > std::max(1e-6 * std::abs(q.value), 1e-12)) {
                throw QuadratureError("custom kernel moment did not converge", q.error);
            }
            return q.value;
        }
    }
    return 0.0;
}

// ---- singularities ---------------------------------------------------------

double SingularitySet::distance(const Vec& x) const {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& p : points) best = std::min(best, (x - p).norm());
    return best;
}

std::optional<std::size_t> SingularitySet::nearest(const Vec& x) const {
    std::optional<std::size_t> idx;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double dist = (x - points[i]).norm();
        if (dist < best) {
            best = dist;
            idx = i;
        }
    }
    return idx;
}

FitnessAxiomReport check_fitness_axioms(const FitnessModel& model, int probes, std::uint64_t seed,
                                        std::optional<Box> probe_box) {
    if (probes < 1) throw PreconditionError("check_fitness_axioms needs probes >= 1");
    const int d = model.dim();
    Box box = probe_box.value_or(Box{Vec::Constant(d, -2.0), Vec::Constant(d, 2.0)});
    if (box.dim() != d) throw DimensionMismatch("probe box dimension differs from the model");
    RandomStream rng(seed, 0);
    FitnessAxiomReport rep;
    rep.worst_diag_probe = Vec::Zero(d);
    for (int p = 0; p < probes; ++p) {
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * rng.uniform();
        try {
            const double g = std::abs(model.eval(x, x));
            if (!std::isfinite(g)) throw ModelEvaluationError("non-finite fitness value");
            if (p == 0 || g > rep.max_diag_violation) {
                rep.max_diag_violation = g;
                rep.worst_diag_probe = x;
            }
            const Mat h12 = model.hess12(x, x);
            const Mat sum = model.hess11(x, x) + h12 + h12.transpose() + model.hess22(x, x);
            rep.max_identity_violation = std::max(rep.max_identity_violation, sum.norm());
        } catch (const std::exception& e) {
            throw ModelEvaluationError("fitness evaluation failed at probe " + fmt_point(x) + ": " +
                                       e.what());
        }
    }
    return rep;
}

SingularitySet find_singularities(const FitnessModel& model, const Box& box, int grid_per_axis,
                                  double merge_radius) {
    const int d = model.dim();
    if (grid_per_axis < 2) throw PreconditionError("grid_per_axis must be >= 2");
    if (box.dim() != d) throw DimensionMismatch("search box dimension differs from the model");
    for (int i = 0; i < d; ++i) {
        if (!(box.hi[i] > box.lo[i])) throw PreconditionError("search box is degenerate");
    }

    SingularitySet out;
    out.search_box = box;
    out.merge_radius = merge_radius;

    struct Root {
        Vec x;
        double res;
    };
    std::vector<Root> roots;

    const double scale = 1.0 + box.diameter();
    long long total = 1;
    for (int i = 0; i < d; ++i) total *= grid_per_axis;

    for (long long idx = 0; idx < total; ++idx) {
        Vec x(d);
        long long rem = idx;
        for (int i = 0; i < d; ++i) {
            const int k = static_cast<int>(rem % grid_per_axis);
            rem /= grid_per_axis;
            x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * k / (grid_per_axis - 1);
        }
        Vec f = model.selection_gradient(x);
        double fn = f.norm();
        bool ok = std::isfinite(fn);
        for (int it = 0; ok && it < 200 && fn > 1e-14 * scale; ++it) {
            const Mat j = model.selection_jacobian(x);
            Vec step = j.colPivHouseholderQr().solve(-f);
            if (!step.allFinite()) {
                ok = false;
                break;
            }
            double lambda = 1.0;
            bool accepted = false;
            while (lambda > 1e-6) {
                Vec trial = x + lambda * step;
                Vec ft = model.selection_gradient(trial);
                const double ftn = ft.norm();
                if (std::isfinite(ftn) && ftn < (1.0 - 1e-4 * lambda) * fn) {
                    x = trial;
                    f = ft;
                    fn = ftn;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if (!accepted) break;
            if (!box.contains(x, 0.5 * box.diameter())) {
                ok = false;
                break;
            }
        }
        if (!ok || !(fn <= kGammaResidualTol) || !box.contains(x, merge_radius)) continue;
        roots.push_back({x, fn});
    }

    std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) { return a.res < b.res; });
    for (const Root& r : roots) {
        bool dup = false;
        for (const Vec& p : out.points) {
            if ((p - r.x).norm() < merge_radius) {
                dup = true;
                break;
            }
        }
        if (dup) continue;
        out.points.push_back(r.x);
        out.residuals.push_back(r.res);
    }
    out.any_converged = !roots.empty();
    return out;
}

}  // namespace punctual
