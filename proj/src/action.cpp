#include "punctual/action.hpp"

#include "punctual/error.hpp"
#include "punctual/optimize.hpp"
#include "punctual/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace punctual {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool in_tube(const CoefficientField& field, const Vec& x, double tube) {
    return field.gamma().distance(x) <= tube;
}

// 1/2 dt r' a^{-1} r with r = v - b(m); +inf inside the tube. Optionally
// returns a^{-1} r for the velocity gradient.
double segment_cost(const CoefficientField& field, const Vec& m, const Vec& v, double dt,
                    double tube, CoeffSample& cs, Vec* ainv_r = nullptr) {
    if (in_tube(field, m, tube)) return kInf;
    field.evaluate(m, cs);
    if (cs.on_gamma) return kInf;
    const Vec r = v - cs.b;
    const Vec w = psd_inverse(cs.a, kActionEigenFloor) * r;
    if (ainv_r) *ainv_r = w;
    return 0.5 * dt * r.dot(w);
}

std::size_t first_tube_index(const CoefficientField& field, const DiscretePath& p, double tube) {
    for (std::size_t i = 0; i < p.points.size(); ++i) {
        if (in_tube(field, p.points[i], tube)) return i;
    }
    return p.points.size();
}

void check_path(const CoefficientField& field, const DiscretePath& p) {
    if (p.times.size() < 2 || p.points.size() != p.times.size()) {
        throw PreconditionError("path needs at least two nodes and matching times");
    }
    for (std::size_t i = 1; i < p.times.size(); ++i) {
        if (!(p.times[i] > p.times[i - 1])) throw PreconditionError("path times must increase");
    }
    for (const Vec& x : p.points) {
        if (x.size() != field.dim()) throw DimensionMismatch("path dimension differs from the field");
    }
}

// Plain evaluation without error estimate.
ActionValue raw_action(const CoefficientField& field, const DiscretePath& psi, double tube) {
    ActionValue out;
    const std::size_t n = psi.points.size();
    const std::size_t k = psi.t_psi_index.value_or(first_tube_index(field, psi, tube));
    for (std::size_t i = k; i < n; ++i) {
        if (psi.points[i] != psi.points[std::min(k, n - 1)]) {
            out.infinite = true;
            out.value = kInf;
            return out;
        }
    }
    CoeffSample cs;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n && i < k; ++i) {
        const double dt = psi.times[i + 1] - psi.times[i];
        const Vec m = 0.5 * (psi.points[i] + psi.points[i + 1]);
        const Vec v = (psi.points[i + 1] - psi.points[i]) / dt;
        const double c = segment_cost(field, m, v, dt, tube, cs);
        if (!std::isfinite(c)) {
            out.infinite = true;
            out.value = kInf;
            return out;
        }
        acc += c;
    }
    out.value = acc;
    return out;
}

}  // namespace

void mark_tube_entry(const CoefficientField& field, DiscretePath& path, double tube) {
    const std::size_t k = first_tube_index(field, path, tube);
    if (k < path.points.size()) {
        path.t_psi_index = k;
    } else {
        path.t_psi_index.reset();
    }
}

ActionValue action(const CoefficientField& field, const DiscretePath& psi, double tube) {
    check_path(field, psi);
    ActionValue out = raw_action(field, psi, tube);
    if (out.infinite || psi.points.size() < 5) return out;
    DiscretePath coarse;
    for (std::size_t i = 0; i < psi.points.size(); i += 2) {
        coarse.times.push_back(psi.times[i]);
        coarse.points.push_back(psi.points[i]);
    }
    if (coarse.times.back() != psi.times.back()) {
        coarse.times.push_back(psi.times.back());
        coarse.points.push_back(psi.points.back());
    }
    const ActionValue c = raw_action(field, coarse, tube);
    if (!c.infinite) out.quadrature_error = std::abs(out.value - c.value) / 3.0;
    return out;
}

ControlResult control_from_path(const CoefficientField& field, const DiscretePath& psi, double tube) {
    check_path(field, psi);
    if (raw_action(field, psi, tube).infinite) {
        throw PreconditionError("control_from_path needs a path of finite action");
    }
    const int d = field.dim();
    const std::size_t n = psi.points.size();
    const std::size_t k = psi.t_psi_index.value_or(first_tube_index(field, psi, tube));
    ControlResult out;
    out.phi.times = psi.times;
    out.phi.points.assign(n, Vec::Zero(d));
    CoeffSample cs;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (i >= k) {
            out.phi.points[i + 1] = out.phi.points[i];
            continue;
        }
        const double dt = psi.times[i + 1] - psi.times[i];
        const Vec m = 0.5 * (psi.points[i] + psi.points[i + 1]);
        const Vec v = (psi.points[i + 1] - psi.points[i]) / dt;
        field.evaluate(m, cs);
        const double floor = kActionEigenFloor * std::max(cs.sigma.trace(), 0.0);
        if (!(min_eigenvalue(cs.sigma) > floor)) {
            std::string where;
            for (int j = 0; j < d; ++j) where += (j ? ", " : "") + std::to_string(m[j]);
            throw DegenerateError("sigma is singular at (" + where + ")");
        }
        const Vec rate = psd_inverse(cs.sigma, kActionEigenFloor) * (v - cs.b);
        out.phi.points[i + 1] = out.phi.points[i] + dt * rate;
        out.j_value += 0.5 * dt * rate.squaredNorm();
    }
    if (k < n) out.phi.t_psi_index = k;
    return out;
}

DiscretePath integrate_S(const CoefficientField& field, const Vec& x0, const DiscretePath& phi,
                         double tube) {
    check_path(field, phi);
    if (x0.size() != field.dim()) throw DimensionMismatch("x0 dimension differs from the field");
    DiscretePath out;
    out.times = phi.times;
    out.points.reserve(phi.points.size());
    out.points.push_back(x0);
    bool frozen = in_tube(field, x0, tube);
    if (frozen) out.t_psi_index = 0;
    CoeffSample cs;
    Vec rate;
    auto f = [&](const Vec& y) -> Vec {
        field.evaluate(y, cs);
        return cs.b + cs.sigma * rate;
    };
    for (std::size_t i = 0; i + 1 < phi.points.size(); ++i) {
        const Vec& y = out.points.back();
        if (frozen) {
            out.points.push_back(y);
            continue;
        }
        const double h = phi.times[i + 1] - phi.times[i];
        rate = (phi.points[i + 1] - phi.points[i]) / h;
        const Vec k1 = f(y);
        const Vec k2 = f(y + 0.5 * h * k1);
        const Vec k3 = f(y + 0.5 * h * k2);
        const Vec k4 = f(y + h * k3);
        Vec next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (in_tube(field, next, tube)) {
            frozen = true;
            out.t_psi_index = i + 1;
        }
        out.points.push_back(next);
    }
    return out;
}

NonLscWitness non_lsc_witness(const CoefficientField& field, const Vec& x0,
                              const std::vector<int>& n_values, double horizon, std::size_t grid,
                              double tube) {
    if (x0.size() != field.dim()) throw DimensionMismatch("x0 dimension differs from the field");
    if (in_tube(field, x0, tube)) throw PreconditionError("non_lsc_witness needs x0 off Gamma");
    if (grid < 5) throw PreconditionError("non_lsc_witness needs grid >= 5");
    if (grid % 2 == 0) ++grid;  // keep T/2 on the grid
    const double big_t = horizon;
    auto psi = [&](double t) -> Vec {
        const double s = 1.0 - 2.0 * t / big_t;
        return s * s * x0;
    };

    NonLscWitness out;
    out.n_values = n_values;
    DiscretePath limit = sample_path(big_t, grid, psi);
    limit.points[grid / 2] = Vec::Zero(x0.size());
    const ActionValue lim = raw_action(field, limit, tube);
    out.i_limit_infinite = lim.infinite;
    out.i_limit_value = lim.value;

    for (int n : n_values) {
        const double w = 1.0 / n;
        if (!(w < 0.5 * big_t)) throw PreconditionError("non_lsc_witness needs n > 2/T");
        const double lo = 0.5 * big_t - w;
        const double hi = 0.5 * big_t + w;
        std::vector<double> times;
        for (std::size_t i = 0; i < grid; ++i) {
            times.push_back(big_t * static_cast<double>(i) / static_cast<double>(grid - 1));
        }
        times.push_back(lo);
        times.push_back(hi);
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end(),
                                [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                    times.end());
        DiscretePath p;
        const Vec plateau = psi(lo);
        for (double t : times) {
            p.times.push_back(t);
            p.points.push_back((t > lo && t < hi) ? plateau : psi(t));
        }
        out.i_sequence.push_back(raw_action(field, p, tube).value);
    }
    return out;
}

double connector_cost_bound(const CoefficientField& field, const Vec& y, const Vec& direction,
                            double rho, double tube) {
    if (!(rho > 0.0)) throw PreconditionError("connector needs rho > 0");
    const double r_min = 1e-3 * rho;
    if (!(r_min > tube)) throw PreconditionError("connector start radius must exceed the tube");
    const Vec u = direction / direction.norm();
    double best = kInf;
    for (int k = 0; k < 31; ++k) {
        const double tau = 0.02 * std::pow(2.0, 0.5 * k);
        DiscretePath p = sample_path(tau, 2001, [&](double t) -> Vec {
            const double s = t / tau;
            return y + (r_min + (rho - r_min) * s * s) * u;
        });
        const ActionValue a = raw_action(field, p, tube);
        if (!a.infinite) best = std::min(best, a.value);
    }
    return best;
}

double node_path_action(const CoefficientField& field, const std::vector<Vec>& nodes, double dt,
                        double tube, std::vector<Vec>* grad) {
    const int d = field.dim();
    if (grad) grad->assign(nodes.size(), Vec::Zero(d));
    CoeffSample cs;
    Vec ainv_r;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const Vec m = 0.5 * (nodes[i] + nodes[i + 1]);
        const Vec v = (nodes[i + 1] - nodes[i]) / dt;
        const double c = segment_cost(field, m, v, dt, tube, cs, &ainv_r);
        if (!std::isfinite(c)) return kInf;
        total += c;
        if (!grad) continue;
        // d cost / d v = dt a^{-1} r, and dv/dx_{i+1} = -dv/dx_i = 1/dt
        Vec gm(d);
        const double h = 1e-6 * (1.0 + m.norm());
        Vec mp = m;
        for (int j = 0; j < d; ++j) {
            mp[j] = m[j] + h;
            const double up = segment_cost(field, mp, v, dt, tube, cs);
            mp[j] = m[j] - h;
            const double dn = segment_cost(field, mp, v, dt, tube, cs);
            mp[j] = m[j];
            gm[j] = (std::isfinite(up) && std::isfinite(dn)) ? (up - dn) / (2.0 * h) : 0.0;
        }
        (*grad)[i] += -ainv_r + 0.5 * gm;
        (*grad)[i + 1] += ainv_r + 0.5 * gm;
    }
    return total;
}

namespace {

// Discrete action over interior nodes (and the ring direction when the
// start is a singular point).
class PathObjective {
public:
    PathObjective(const CoefficientField& field, Vec y, Vec z, double big_t, int n_nodes, bool ring,
                  double rho, double tube)
        : field_(field), y_(std::move(y)), z_(std::move(z)), n_(n_nodes), ring_(ring), rho_(rho),
          tube_(tube), d_(field.dim()), dt_(big_t / (n_nodes - 1)) {}

    int n_vars() const { return (n_ - 2) * d_ + (ring_ ? d_ : 0); }

    Vec start(const Eigen::VectorXd& x) const {
        if (!ring_) return y_;
        Vec u = x.tail(d_);
        return y_ + rho_ * u / u.norm();
    }

    std::vector<Vec> nodes(const Eigen::VectorXd& x) const {
        std::vector<Vec> pts(static_cast<std::size_t>(n_));
        pts[0] = start(x);
        for (int i = 1; i < n_ - 1; ++i) pts[static_cast<std::size_t>(i)] = x.segment((i - 1) * d_, d_);
        pts[static_cast<std::size_t>(n_ - 1)] = z_;
        return pts;
    }

    double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
        const std::vector<Vec> pts = nodes(x);
        std::vector<Vec> gnode;
        const double total = node_path_action(field_, pts, dt_, tube_, &gnode);
        if (!std::isfinite(total)) return kInf;
        grad.setZero(n_vars());
        for (int i = 1; i < n_ - 1; ++i) grad.segment((i - 1) * d_, d_) = gnode[static_cast<std::size_t>(i)];
        if (ring_) {
            const Vec u = x.tail(d_);
            const double un = u.norm();
            const Vec uh = u / un;
            const Mat jac = (rho_ / un) * (Mat::Identity(d_, d_) - uh * uh.transpose());
            grad.tail(d_) = jac.transpose() * gnode[0];
        }
        return total;
    }

    Eigen::VectorXd pack(const std::vector<Vec>& pts, const Vec& u) const {
        Eigen::VectorXd x(n_vars());
        for (int i = 1; i < n_ - 1; ++i) x.segment((i - 1) * d_, d_) = pts[static_cast<std::size_t>(i)];
        if (ring_) x.tail(d_) = u;
        return x;
    }

    double dt() const { return dt_; }

private:
    const CoefficientField& field_;
    Vec y_;
    Vec z_;
    int n_;
    bool ring_;
    double rho_;
    double tube_;
    int d_;
    double dt_;
};

std::vector<Vec> straight_line(const Vec& a, const Vec& b, int n) {
    std::vector<Vec> pts;
    for (int i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / (n - 1);
        pts.push_back((1.0 - s) * a + s * b);
    }
    return pts;
}

}  // namespace

QuasiPotentialResult quasipotential(const CoefficientField& field, const Vec& y, const Vec& z,
                                    const QuasiPotentialOptions& opts) {
    const int d = field.dim();
    if (y.size() != d || z.size() != d) throw DimensionMismatch("endpoint dimension differs from the field");
    if (opts.n_nodes < 3) throw PreconditionError("quasipotential needs n_nodes >= 3");
    if (opts.t_grid.empty()) throw PreconditionError("quasipotential needs a horizon grid");
    if (in_tube(field, z, opts.tube)) throw PreconditionError("quasipotential target lies in the Gamma tube");

    const bool singular_start = in_tube(field, y, opts.tube);
    const double rho = opts.origin_rho > 0.0 ? opts.origin_rho : 0.05 * (z - y).norm();
    if (singular_start && !(rho > opts.tube)) {
        throw PreconditionError("origin_rho must exceed the Gamma tube");
    }

    // start candidates: the ring direction(s)
    std::vector<Vec> dirs;
    if (singular_start) {
        Vec toward = z - y;
        if (toward.norm() == 0.0) throw PreconditionError("quasipotential endpoints coincide");
        toward /= toward.norm();
        dirs.push_back(toward);
        if (d == 1) dirs.push_back(-toward);
    } else {
        dirs.push_back(Vec::Zero(d));
    }

    QuasiPotentialResult best;
    best.start = y;
    best.end = z;
    best.value = kInf;
    best.path_action = kInf;
    const bool ring = singular_start && d >= 2;

    for (const Vec& dir0 : dirs) {
        const Vec ystart = singular_start ? Vec(y + rho * dir0) : y;
        std::vector<Vec> warm;
        Vec warm_u = dir0;
        for (double big_t : opts.t_grid) {
            PathObjective obj(field, singular_start && !ring ? ystart : y, z, big_t, opts.n_nodes, ring,
                              rho, opts.tube);
            Eigen::VectorXd g;
            Eigen::VectorXd x = obj.pack(straight_line(ystart, z, opts.n_nodes), dir0);
            double f0 = obj(x, g);
            if (!warm.empty()) {
                Eigen::VectorXd xw = obj.pack(warm, warm_u);
                const double fw = obj(xw, g);
                if (fw < f0) {
                    x = xw;
                    f0 = fw;
                }
            }
            if (!std::isfinite(f0)) continue;
            const LbfgsResult r = lbfgs_minimize(
                [&](const Eigen::VectorXd& xv, Eigen::VectorXd& gv) { return obj(xv, gv); }, x,
                opts.max_iters, opts.tol);
            const std::vector<Vec> pts = obj.nodes(x);
            DiscretePath path;
            for (int i = 0; i < opts.n_nodes; ++i) {
                path.times.push_back(obj.dt() * i);
                path.points.push_back(pts[static_cast<std::size_t>(i)]);
            }
            path.times.back() = big_t;
            const ActionValue av = action(field, path, opts.tube);
            warm = pts;
            if (ring) warm_u = x.tail(d);
            if (av.infinite) continue;
            if (av.value < best.path_action) {
                best.path_action = av.value;
                best.quadrature_error = av.quadrature_error;
                best.path = std::move(path);
                best.t_star = big_t;
                best.converged = r.converged;
                best.iterations = r.iterations;
            }
        }
    }
    if (!std::isfinite(best.path_action)) {
        best.converged = false;
        return best;
    }
    if (singular_start) {
        const Vec& first = best.path.points.front();
        best.connector_cost_bound = connector_cost_bound(field, y, first - y, rho, opts.tube);
    }
    best.value = best.path_action + best.connector_cost_bound;
    return best;
}

ExitCostResult exit_cost(const CoefficientField& field, const Domain& domain,
                         const ExitCostOptions& opts) {
    if (domain.dim() != field.dim()) throw DimensionMismatch("domain dimension differs from the field");
    std::vector<Vec> inside;
    for (const Vec& p : field.gamma().points) {
        if (domain.contains(p)) inside.push_back(p);
    }
    if (inside.size() != 1) {
        throw PreconditionError("exit_cost needs exactly one singularity inside the domain (found " +
                                std::to_string(inside.size()) + ")");
    }
    ExitCostResult out;
    out.singularity = inside.front();

    // inward drift probes on rays from the singularity to the boundary
    const std::vector<Vec> bgrid = domain.boundary_grid(opts.n_boundary);
    CoeffSample cs;
    for (const Vec& zb : bgrid) {
        for (double f : {0.25, 0.5, 0.75, 1.0}) {
            const Vec x = out.singularity + f * (zb - out.singularity);
            field.evaluate(x, cs);
            if (cs.b.dot(x - out.singularity) >= 0.0 && !cs.on_gamma) out.attracting_ok = false;
        }
    }

    QuasiPotentialOptions qp = opts.qp;
    if (qp.origin_rho <= 0.0) qp.origin_rho = 0.05 * domain.scale();
    out.boundary_profile.resize(bgrid.size());
    parallel_for(static_cast<int>(bgrid.size()), opts.workers, [&](int i) {
        const auto k = static_cast<std::size_t>(i);
        const QuasiPotentialResult r = quasipotential(field, out.singularity, bgrid[k], qp);
        out.boundary_profile[k] = {bgrid[k], r.value, r.converged};
    });
    out.v_bar = kInf;
    for (const BoundaryPoint& bp : out.boundary_profile) {
        if (bp.v < out.v_bar) {
            out.v_bar = bp.v;
            out.z_star = bp.point;
        }
    }
    return out;
}

}  // namespace punctual
