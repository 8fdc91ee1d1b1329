#include "punctual/exit.hpp"

#include "punctual/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace punctual {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Median and a binomial order-statistic standard error for it.
std::pair<double, double> median_with_se(std::vector<double> t) {
    std::sort(t.begin(), t.end());
    const double med = sorted_quantile(t, 0.5);
    const double n = static_cast<double>(t.size());
    if (t.size() < 4) return {med, kNaN};
    const double half = 1.96 * std::sqrt(n) / 2.0;
    const auto clamp_idx = [&](double k) {
        return static_cast<std::size_t>(std::clamp(std::round(k), 0.0, n - 1.0));
    };
    const double lo = t[clamp_idx(n / 2.0 - half)];
    const double hi = t[clamp_idx(n / 2.0 + half)];
    return {med, (hi - lo) / (2.0 * 1.96)};
}

}  // namespace

ExitExperimentResult run_exit_experiment(const CoefficientField& field, const Domain& domain,
                                         const Vec& x0, const std::vector<double>& eps_values,
                                         int n_paths, const SimConfig& cfg_base, double v_bar,
                                         const Vec& z_star, double delta,
                                         const ExitExperimentOptions& opts) {
    if (x0.size() != field.dim() || domain.dim() != field.dim()) {
        throw DimensionMismatch("x0, domain and field dimensions must agree");
    }
    if (!domain.contains(x0)) throw PreconditionError("x0 must lie strictly inside the domain");
    if (field.gamma().distance(x0) <= cfg_base.absorb_tube) {
        throw PreconditionError("x0 lies in the Gamma tube");
    }
    if (eps_values.empty()) throw PreconditionError("eps_values must not be empty");
    for (std::size_t i = 0; i < eps_values.size(); ++i) {
        if (!(eps_values[i] > 0.0)) throw PreconditionError("eps values must be positive");
        if (i > 0 && !(eps_values[i] < eps_values[i - 1])) {
            throw PreconditionError("eps values must be strictly descending");
        }
    }
    if (n_paths < 1) throw PreconditionError("n_paths must be >= 1");
    if (!(v_bar > 0.0) || !std::isfinite(v_bar)) throw PreconditionError("v_bar must be positive and finite");
    if (!(delta >= 0.0)) throw PreconditionError("delta must be >= 0");

    ExitExperimentResult out;
    out.eps_values = eps_values;
    out.v_bar_used = v_bar;
    out.z_star_used = z_star;
    out.delta = delta;
    out.near_radius = opts.near_radius;

    const StopRule boundary{kBoundaryLabel, [&domain](const Vec& x) { return domain.signed_distance(x); },
                            true};
    for (std::size_t k = 0; k < eps_values.size(); ++k) {
        const double eps = eps_values[k];
        SimConfig cfg = cfg_base;
        cfg.eps = eps;
        cfg.t_max = std::min(10.0 * std::exp(v_bar / eps), opts.t_max_cap);
        cfg.seed = cfg_base.seed + k;
        cfg.store_path = false;
        const BatchResult batch = simulate_batch(field, x0, cfg, {boundary}, n_paths, opts.workers, false);

        EpsExitResult r;
        r.eps = eps;
        r.n_paths = n_paths;
        r.t_max = cfg.t_max;
        r.threshold = std::exp((v_bar - delta) / eps);
        std::vector<double> uncensored;
        int exceeding = 0;
        int near = 0;
        for (const TrajectorySummary& s : batch.paths) {
            const ExitEvent* e = s.event(kBoundaryLabel);
            if (e) {
                r.exit_times.push_back(e->time);
                r.censored.push_back(0);
                r.exit_points.push_back(e->point);
                uncensored.push_back(e->time);
                if (e->time > r.threshold) ++exceeding;
                if (z_star.size() == e->point.size() && (e->point - z_star).norm() <= opts.near_radius) ++near;
            } else {
                r.exit_times.push_back(s.absorbed_at ? *s.absorbed_at : s.t_end);
                r.censored.push_back(1);
                r.exit_points.push_back(s.terminal);
                ++r.n_censored;
                if (s.absorbed_at) ++r.n_absorbed;
                // never exits before t_max (or ever, once absorbed)
                if (s.absorbed_at || cfg.t_max > r.threshold) ++exceeding;
            }
        }
        r.frac_exceeding_threshold = static_cast<double>(exceeding) / n_paths;
        r.all_censored = uncensored.empty();
        if (r.all_censored) {
            r.eps_log_median = kNaN;
            r.eps_log_median_se = kNaN;
            r.frac_near_z_star = kNaN;
        } else {
            const auto [med, se] = median_with_se(uncensored);
            r.eps_log_median = eps * std::log(med);
            r.eps_log_median_se = eps * se / med;
            r.frac_near_z_star = static_cast<double>(near) / static_cast<double>(uncensored.size());
        }
        out.per_eps.push_back(std::move(r));
    }
    return out;
}

std::vector<Excursion> excursion_decomposition(const Trajectory& traj, const Domain& domain,
                                               const Vec& center, double rho, double two_rho) {
    if (!(rho > 0.0) || !(two_rho > rho)) throw PreconditionError("need two_rho > rho > 0");
    if (!traj.full_resolution() || traj.times.size() < static_cast<std::size_t>(traj.steps)) {
        throw NeedsFullPath("excursion_decomposition needs a trajectory stored at every step");
    }
    if (center.size() != domain.dim()) throw DimensionMismatch("center dimension differs from the domain");
    if (domain.signed_distance(center) > -two_rho) {
        throw PreconditionError("the sphere S(2 rho) must lie inside the domain");
    }

    std::vector<Excursion> out;
    const std::size_t n = traj.points.size();
    std::size_t i = 0;
    double theta = 0.0;
    for (;;) {
        Excursion ex;
        ex.theta = theta;
        // tau_m
        for (; i < n; ++i) {
            const Vec& x = traj.points[i];
            if ((x - center).norm() <= rho) break;
            if (domain.signed_distance(x) >= -1e-12) {
                ex.at_boundary = true;
                break;
            }
        }
        if (i < n) ex.tau = traj.times[i];
        out.push_back(ex);
        if (i >= n || ex.at_boundary) break;
        // theta_{m+1}
        for (++i; i < n; ++i) {
            if ((traj.points[i] - center).norm() >= two_rho) break;
        }
        if (i >= n) break;
        theta = traj.times[i];
    }
    return out;
}

AttractingReport check_attracting(const CoefficientField& field, const Domain& domain, int n_rays,
                                  double t_horizon, double converge_tol) {
    AttractingReport rep;
    if (domain.dim() != field.dim()) throw DimensionMismatch("domain dimension differs from the field");
    for (const Vec& p : field.gamma().points) {
        if (domain.contains(p)) {
            if (rep.singularity) {
                rep.singularity.reset();  // ambiguous: more than one
                break;
            }
            rep.singularity = p;
        }
    }
    const Vec ref = rep.singularity ? *rep.singularity : domain.center();
    std::vector<Vec> seeds = domain.boundary_grid(std::max(n_rays, 1));
    const std::size_t nb = seeds.size();
    for (std::size_t k = 0; k < nb; ++k) seeds.push_back(0.5 * (seeds[k] + ref));
    rep.n_seeds = static_cast<int>(seeds.size());

    const double scale = domain.scale();
    const double h = std::min(0.01, t_horizon / 100.0);
    const auto steps = static_cast<long>(std::ceil(t_horizon / h));
    CoeffSample cs;
    auto f = [&](const Vec& y) -> Vec {
        field.evaluate(y, cs);
        return cs.b;
    };
    for (const Vec& s : seeds) {
        Vec y = s;
        bool escaped = false;
        for (long n = 0; n < steps; ++n) {
            const Vec k1 = f(y);
            const Vec k2 = f(y + 0.5 * h * k1);
            const Vec k3 = f(y + 0.5 * h * k2);
            const Vec k4 = f(y + h * k3);
            y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            const double sd = domain.signed_distance(y);
            rep.max_signed_distance = std::max(rep.max_signed_distance, sd);
            if (sd > 1e-9 * scale) {
                escaped = true;
                break;
            }
        }
        if (escaped) {
            ++rep.n_escaped;
            rep.stays_inside = false;
            continue;
        }
        const double dist = rep.singularity ? (y - *rep.singularity).norm()
                                            : std::numeric_limits<double>::infinity();
        rep.max_final_distance = std::max(rep.max_final_distance, dist);
        if (!(dist <= converge_tol * scale)) {
            ++rep.n_unconverged;
            rep.converges = false;
        }
    }
    if (!rep.singularity) rep.converges = false;
    rep.attracting = rep.stays_inside && rep.converges;
    return rep;
}

}  // namespace punctual
