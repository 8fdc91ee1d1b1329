#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace punctual {

// Scenario files are a strict YAML subset: nested maps of scalars and
// (nested) flow lists. Every key is known; anything else is rejected.

struct ModelSpec {
    std::string name;
    double kappa = 0.5;  // band1d only
};

struct KernelSpec {
    std::string name = "gaussian_isotropic";
    double s = 1.0;
    std::vector<std::vector<double>> covariance;  // gaussian_full only
};

struct BackendSpec {
    std::string kind = "closed_form";  // or "quadrature"
    double tol = 1e-9;
    int gh_points = 4;
};

struct SingularitySpec {
    std::vector<double> box_lo;
    std::vector<double> box_hi;
    int grid = 9;
};

struct CoeffTableSpec {
    std::vector<double> lo;
    std::vector<double> hi;
    int n = 21;
};

struct ClassifySpec {
    double eps = 0.1;
    double radius = 0.5;
    int samples = 400;
};

struct SimSpec {
    std::vector<double> x0;
    double eps = 0.1;
    double dt = 1e-3;
    double t_max = 1.0;
    double absorb_tube = 1e-5;
    int n_paths = 1;
    int stride = 1;
};

struct QuasiPotentialSpec {
    std::vector<double> y;
    std::vector<double> z;
    int n_nodes = 100;
    std::vector<double> t_grid = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
    int max_iters = 3000;
    double tol = 1e-9;
    double origin_rho = 0.0;
};

struct DomainSpec {
    std::string kind = "ball";  // ball | interval | polygon
    std::vector<double> center;
    double radius = 1.0;
    double lo = -1.0;
    double hi = 1.0;
    std::vector<std::vector<double>> vertices;
};

struct ExitCostSpec {
    int n_boundary = 32;
};

struct ExitSpec {
    std::vector<double> x0;
    std::vector<double> eps_values;
    int n_paths = 500;
    double dt = 1e-3;
    double absorb_tube = 1e-5;
    /// When absent both come from an exit-cost solve over the domain.
    std::optional<double> v_bar;
    std::optional<std::vector<double>> z_star;
    double delta_frac = 0.3;
    double t_max_cap = 2e4;
    double near_radius = 0.3;
};

struct Scenario {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    ModelSpec model;
    KernelSpec kernel;
    BackendSpec backend;
    SingularitySpec singularities;
    std::optional<CoeffTableSpec> coeff_table;
    std::optional<ClassifySpec> classify;
    std::optional<SimSpec> sim;
    std::optional<QuasiPotentialSpec> quasipotential;
    std::optional<DomainSpec> domain;
    std::optional<ExitCostSpec> exit_cost;
    std::optional<ExitSpec> exit;
    /// Dotted keys filled from defaults during parsing.
    std::vector<std::string> defaults_applied;

    int dim() const;
};

/// Strict parse; throws ConfigError with the line and dotted key.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Canonical text: fixed key order, every field of each present block,
/// shortest round-trip numbers. parse(serialize(s)) == s.
std::string serialize_scenario(const Scenario& s);

}  // namespace punctual
