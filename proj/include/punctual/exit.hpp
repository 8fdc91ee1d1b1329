#pragma once

#include "punctual/coeff.hpp"
#include "punctual/domain.hpp"
#include "punctual/sde.hpp"

#include <optional>
#include <vector>

namespace punctual {

inline constexpr const char* kBoundaryLabel = "boundary";

struct EpsExitResult {
    double eps = 0.0;
    int n_paths = 0;
    double t_max = 0.0;
    /// Per path; censored paths carry t_max (or their absorption time when
    /// absorbed at Gamma, which also counts as censored).
    std::vector<double> exit_times;
    std::vector<char> censored;
    std::vector<Vec> exit_points;
    int n_censored = 0;
    int n_absorbed = 0;
    bool all_censored = false;
    double threshold = 0.0;
    double frac_exceeding_threshold = 0.0;
    /// eps * log(median exit time) over uncensored paths, NaN when all censored.
    double eps_log_median = 0.0;
    double eps_log_median_se = 0.0;
    /// Fraction of exits within near_radius of z*, over exited paths.
    double frac_near_z_star = 0.0;
};

struct ExitExperimentResult {
    std::vector<double> eps_values;
    std::vector<EpsExitResult> per_eps;
    double v_bar_used = 0.0;
    Vec z_star_used;
    double delta = 0.0;
    double near_radius = 0.0;
};

struct ExitExperimentOptions {
    /// t_max per eps is min(10 exp(v_bar/eps), t_max_cap).
    double t_max_cap = 2e4;
    double near_radius = 0.3;
    int workers = 1;
};

/// Plain Monte Carlo of the exit from `domain`. cfg_base supplies dt, seed,
/// absorb_tube; eps and t_max are set per entry. Each eps uses its own
/// stream block (seed + entry index) so entries stay independent.
ExitExperimentResult run_exit_experiment(const CoefficientField& field, const Domain& domain,
                                         const Vec& x0, const std::vector<double>& eps_values,
                                         int n_paths, const SimConfig& cfg_base, double v_bar,
                                         const Vec& z_star, double delta,
                                         const ExitExperimentOptions& opts = {});

struct Excursion {
    double theta = 0.0;
    /// Hitting time of B(rho) or the boundary; nullopt if never reached.
    std::optional<double> tau;
    bool at_boundary = false;
};

/// theta_0 = 0, tau_m = first time >= theta_m in B(rho) or on the boundary,
/// theta_{m+1} = first time > tau_m on S(2 rho), stopping once tau_m is on
/// the boundary. Balls are centered at `center`.
std::vector<Excursion> excursion_decomposition(const Trajectory& traj, const Domain& domain,
                                               const Vec& center, double rho, double two_rho);

struct AttractingReport {
    bool attracting = false;
    bool stays_inside = true;
    bool converges = true;
    std::optional<Vec> singularity;
    int n_seeds = 0;
    int n_escaped = 0;
    int n_unconverged = 0;
    double max_signed_distance = 0.0;
    double max_final_distance = 0.0;
};

/// Integrates x' = b(x) (RK4) from n_rays boundary points and the midpoints
/// of their rays to the interior singularity, up to t_horizon.
AttractingReport check_attracting(const CoefficientField& field, const Domain& domain, int n_rays,
                                  double t_horizon, double converge_tol = 1e-3);

}  // namespace punctual
