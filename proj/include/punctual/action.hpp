#pragma once

#include "punctual/coeff.hpp"
#include "punctual/domain.hpp"
#include "punctual/linalg.hpp"

#include <optional>
#include <vector>

namespace punctual {

struct DiscretePath {
    std::vector<double> times;
    std::vector<Vec> points;
    /// First grid index inside the Gamma tube, if any.
    std::optional<std::size_t> t_psi_index;

    std::size_t size() const { return times.size(); }
    double horizon() const { return times.back() - times.front(); }
    int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
};

/// Uniform grid of n points on [0, T] with points f(t).
template <class F>
DiscretePath sample_path(double t_end, std::size_t n, F&& f) {
    DiscretePath p;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t_end * static_cast<double>(i) / static_cast<double>(n - 1);
        p.times.push_back(t);
        p.points.push_back(f(t));
    }
    return p;
}

/// Sets t_psi_index to the first point within `tube` of Gamma.
void mark_tube_entry(const CoefficientField& field, DiscretePath& path, double tube);

struct ActionValue {
    double value = 0.0;
    bool infinite = false;
    /// |I_N - I_{N/2}| / 3 from the path with every other node dropped.
    double quadrature_error = 0.0;
};

inline constexpr double kDefaultActionTube = 1e-6;
inline constexpr double kActionEigenFloor = 1e-14;

/// Midpoint rule for 1/2 int_0^{t_psi} (psi' - b)' a^{-1} (psi' - b) dt with
/// per-segment difference quotients. Infinite when a midpoint before t_psi
/// lies in the Gamma tube or the path moves after t_psi.
ActionValue action(const CoefficientField& field, const DiscretePath& psi,
                   double tube = kDefaultActionTube);

struct ControlResult {
    DiscretePath phi;
    double j_value = 0.0;
};

/// phi' = sigma^{-1}(psi)(psi' - b(psi)) per segment (midpoints), phi(0) = 0,
/// constant after t_psi; j_value = 1/2 int |phi'|^2.
ControlResult control_from_path(const CoefficientField& field, const DiscretePath& psi,
                                double tube = kDefaultActionTube);

/// RK4 for y' = b(y) + sigma(y) phi' on the phi grid, phi' constant per
/// segment; frozen once within `tube` of Gamma.
DiscretePath integrate_S(const CoefficientField& field, const Vec& x0, const DiscretePath& phi,
                         double tube = kDefaultActionTube);

struct NonLscWitness {
    bool i_limit_infinite = false;
    double i_limit_value = 0.0;
    std::vector<int> n_values;
    std::vector<double> i_sequence;
};

/// psi(t) = (1 - 2t/T)^2 x0 on [0, T] and its plateaued versions psi_n,
/// flat on [T/2 - 1/n, T/2 + 1/n]. Requires n > 2/T.
NonLscWitness non_lsc_witness(const CoefficientField& field, const Vec& x0,
                              const std::vector<int>& n_values, double horizon = 1.0,
                              std::size_t grid = 4001, double tube = kDefaultActionTube);

/// Midpoint-rule action of a path with nodes on a uniform grid of step dt,
/// and optionally its gradient with respect to every node: analytic in the
/// velocities, central differences for the coefficient dependence.
/// Returns +inf when a midpoint falls in the Gamma tube.
double node_path_action(const CoefficientField& field, const std::vector<Vec>& nodes, double dt,
                        double tube, std::vector<Vec>* grad = nullptr);

struct QuasiPotentialOptions {
    int n_nodes = 100;
    std::vector<double> t_grid = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
    int max_iters = 3000;
    double tol = 1e-9;
    /// Start-ring radius around a singular start; <= 0 selects 0.05 |z - y|.
    double origin_rho = 0.0;
    double tube = kDefaultActionTube;
};

struct QuasiPotentialResult {
    Vec start;
    Vec end;
    /// Best discrete action plus connector_cost_bound.
    double value = 0.0;
    /// Discrete action of `path` alone.
    double path_action = 0.0;
    DiscretePath path;
    double t_star = 0.0;
    double connector_cost_bound = 0.0;
    double quadrature_error = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Minimum action over paths from y (or its start ring when y is singular)
/// to z, searched over the horizon grid.
QuasiPotentialResult quasipotential(const CoefficientField& field, const Vec& y, const Vec& z,
                                    const QuasiPotentialOptions& opts = {});

/// Action of the best radial connector from r_min = 1e-3 rho to rho along
/// `direction` from the singular point y, with the quadratic time law
/// r(t) = r_min + (rho - r_min)(t/tau)^2, minimized over a grid of tau.
double connector_cost_bound(const CoefficientField& field, const Vec& y, const Vec& direction,
                            double rho, double tube = kDefaultActionTube);

struct BoundaryPoint {
    Vec point;
    double v = 0.0;
    bool converged = false;
};

struct ExitCostResult {
    double v_bar = 0.0;
    Vec z_star;
    Vec singularity;
    std::vector<BoundaryPoint> boundary_profile;
    bool attracting_ok = true;
};

struct ExitCostOptions {
    int n_boundary = 32;
    QuasiPotentialOptions qp;
    int workers = 1;
};

/// V(0, z) over an equispaced boundary grid; the start is the unique
/// singularity of the field inside the domain.
ExitCostResult exit_cost(const CoefficientField& field, const Domain& domain,
                         const ExitCostOptions& opts = {});

}  // namespace punctual
