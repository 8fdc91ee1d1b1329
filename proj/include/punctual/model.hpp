#pragma once

#include "punctual/linalg.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace punctual {

enum class DerivMode { analytic, finite_difference };

/// Fitness g(y, x) of a rare mutant y in a resident population x, with
/// derivative access in the first slot and mixed derivatives.
///
/// Only `eval` is mandatory. Missing derivative callbacks fall back to central
/// finite differences with step fd_step * (1 + |point|). The model reports
/// DerivMode::analytic only when grad1, hess11 and hess12 are all supplied.
class FitnessModel {
public:
    using ScalarFn = std::function<double(const Vec& y, const Vec& x)>;
    using VecFn = std::function<Vec(const Vec& y, const Vec& x)>;
    using MatFn = std::function<Mat(const Vec& y, const Vec& x)>;

    struct Callbacks {
        ScalarFn eval;
        VecFn grad1;
        MatFn hess11;
        MatFn hess12;
        MatFn hess22;
    };

    FitnessModel(std::string name, int dim, Callbacks callbacks, double fd_step = 1e-5);

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    DerivMode deriv_mode() const;
    double fd_step() const { return fd_step_; }

    double eval(const Vec& y, const Vec& x) const;
    Vec grad1(const Vec& y, const Vec& x) const;
    Mat hess11(const Vec& y, const Vec& x) const;
    Mat hess12(const Vec& y, const Vec& x) const;
    Mat hess22(const Vec& y, const Vec& x) const;

    /// Central-difference derivatives, always computed from `eval` (and from
    /// grad1 for the mixed block), for cross-checking analytic callbacks.
    Vec grad1_fd(const Vec& y, const Vec& x, double step) const;
    Mat hess11_fd(const Vec& y, const Vec& x, double step) const;
    Mat hess12_fd(const Vec& y, const Vec& x, double step) const;
    Mat hess22_fd(const Vec& y, const Vec& x, double step) const;

    /// F(x) = grad_1 g(x, x); its zeros are the evolutionary singularities.
    Vec selection_gradient(const Vec& x) const { return grad1(x, x); }
    /// Jacobian of F: H_11 g(x,x) + H_12 g(x,x).
    Mat selection_jacobian(const Vec& x) const { return hess11(x, x) + hess12(x, x); }

private:
    double step_for(const Vec& p) const { return fd_step_ * (1.0 + p.norm()); }

    std::string name_;
    int dim_;
    Callbacks cb_;
    double fd_step_;
};

/// g(y,x) = -x(y-x) - (y-x)^2 in d = 1. Singularity at 0.
FitnessModel quad1d();
/// g(y,x) = (y-x)(1-x^2) + kappa (y-x)^2 in d = 1. Singularities at -1, 1.
FitnessModel band1d(double kappa);
/// g(y,x) = -x.(y-x) - |y-x|^2 in d = 2. Singularity at the origin.
FitnessModel radial2d();

/// Mutation step law p(x, h) dh of h = y - x. Symmetric in h.
class MutationKernel {
public:
    enum class Kind { gaussian_isotropic, gaussian_full, custom };
    using DensityFn = std::function<double(const Vec& x, const Vec& h)>;

    static MutationKernel gaussian_isotropic(int dim, double s);
    static MutationKernel gaussian_full(const Mat& covariance);
    /// Custom densities are integrated on the ball |h| <= support_radius.
    static MutationKernel custom(int dim, DensityFn density, double support_radius);

    Kind kind() const { return kind_; }
    bool is_gaussian() const { return kind_ != Kind::custom; }
    int dim() const { return dim_; }
    double scale() const { return s_; }
    const Mat& covariance() const { return cov_; }
    /// Symmetric square root of the covariance (s I for the isotropic kind).
    const Mat& covariance_sqrt() const { return cov_sqrt_; }
    double support_radius() const { return support_radius_; }

    double density(const Vec& x, const Vec& h) const;

private:
    MutationKernel() = default;

    Kind kind_ = Kind::gaussian_isotropic;
    int dim_ = 1;
    double s_ = 1.0;
    Mat cov_;
    Mat cov_sqrt_;
    DensityFn custom_;
    double support_radius_ = 0.0;
};

/// M_k(x) = integral |h|^k p(x,h) dh for k in {2, 3}.
double kernel_moment(const MutationKernel& kernel, const Vec& x, int order);

/// Located points of Gamma = {x : grad_1 g(x,x) = 0} inside a search box.
struct SingularitySet {
    std::vector<Vec> points;
    Box search_box;
    std::vector<double> residuals;
    double merge_radius = 1e-4;
    /// false when no Newton start converged (Gamma may be empty in the box).
    bool any_converged = true;

    bool empty() const { return points.empty(); }
    /// Euclidean distance to the nearest located point (+inf when empty).
    double distance(const Vec& x) const;
    std::optional<std::size_t> nearest(const Vec& x) const;
};

inline constexpr double kGammaResidualTol = 1e-8;
inline constexpr double kDefaultMergeRadius = 1e-4;

struct FitnessAxiomReport {
    double max_diag_violation = 0.0;      // max |g(x,x)|
    double max_identity_violation = 0.0;  // max |H11 + H12 + H12^T + H22|_F on the diagonal
    Vec worst_diag_probe;
};

/// Probes g(x,x) = 0 and the second-order diagonal identity on `probes`
/// uniform points of `probe_box` (default [-2,2]^d).
FitnessAxiomReport check_fitness_axioms(const FitnessModel& model, int probes, std::uint64_t seed,
                                        std::optional<Box> probe_box = std::nullopt);

/// Multi-start damped Newton on F(x) = grad_1 g(x,x) from a regular grid of
/// grid_per_axis^d seeds; converged roots are merged at merge_radius.
SingularitySet find_singularities(const FitnessModel& model, const Box& box, int grid_per_axis,
                                  double merge_radius = kDefaultMergeRadius);

}  // namespace punctual
