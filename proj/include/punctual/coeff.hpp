#pragma once

#include "punctual/linalg.hpp"
#include "punctual/model.hpp"

#include <cstdint>
#include <vector>

namespace punctual {

enum class BackendKind { gaussian_closed_form, quadrature };

struct Backend {
    BackendKind kind = BackendKind::gaussian_closed_form;
    /// Relative tolerance of the adaptive ball quadrature (custom kernels).
    double tol = 1e-9;
    /// Gauss-Hermite points per axis for Gaussian kernels under the
    /// quadrature backend. The half-space integrands are polynomial after
    /// rotation, so 3 points already integrate them exactly.
    int gh_points = 4;

    static Backend closed_form() { return {}; }
    static Backend quad(double tol = 1e-9) { return {BackendKind::quadrature, tol, 4}; }
};

/// All coefficients at one point, filled together because they share the
/// expensive parts (gradient, rotation, square roots).
struct CoeffSample {
    Vec b;
    Vec bt;
    Mat a;
    Mat sigma;
    /// |grad_1 g(x,x)| < kZeroGradient: every coefficient is exactly zero.
    bool on_gamma = false;
};

inline constexpr double kZeroGradient = 1e-12;

/// Coefficients of dX = (b + eps bt) dt + sqrt(eps) sigma dW built from a
/// fitness model and a mutation kernel:
///   b_k   = int h_k [grad g . h]_+ p dh
///   bt_k  = 1/2 int_{h . grad g > 0} h_k (h' H11 h) p dh
///   a_kl  = int h_k h_l [h . grad g]_+ p dh,   sigma = a^{1/2}
/// Immutable; safe to share across threads.
class CoefficientField {
public:
    CoefficientField(FitnessModel model, MutationKernel kernel, SingularitySet gamma, Backend backend);

    int dim() const { return model_.dim(); }
    const FitnessModel& model() const { return model_; }
    const MutationKernel& kernel() const { return kernel_; }
    const SingularitySet& gamma() const { return gamma_; }
    const Backend& backend() const { return backend_; }

    void evaluate(const Vec& x, CoeffSample& out) const;

    Vec b(const Vec& x) const;
    Vec b_tilde(const Vec& x) const;
    Vec b_eps(const Vec& x, double eps) const;
    Mat a(const Vec& x) const;
    Mat sigma(const Vec& x) const;

private:
    void closed_form(const Vec& x, const Vec& w, CoeffSample& out) const;
    void gauss_hermite(const Vec& x, const Vec& w, CoeffSample& out) const;
    void ball_quadrature(const Vec& x, const Vec& w, CoeffSample& out) const;

    FitnessModel model_;
    MutationKernel kernel_;
    SingularitySet gamma_;
    Backend backend_;
    // tensor rule in the rotated frame: axis 0 is the half-line rule
    std::vector<Vec> nodes_;
    std::vector<double> weights_;
};

/// Throws DimensionMismatch if the model and kernel dimensions differ, and
/// DomainError for the closed-form backend on a custom kernel.
CoefficientField build_field(const FitnessModel& model, const MutationKernel& kernel,
                             const SingularitySet& gamma, Backend backend);

/// a(x) = (|w|/2) sqrt(2/pi) s^3 (I + v v') with w = grad_1 g(x,x), v = w/|w|.
Mat eval_a_gaussian_closed_form(const FitnessModel& model, double s, const Vec& x);

/// Empirical minimum over sampled (x, u, v), |x| <= 1/alpha, of
/// int |h.u|^2 |h.v| p(x,h) dh. Must be positive for the kernel to qualify.
double check_h4(const MutationKernel& kernel, double alpha, int samples, std::uint64_t seed);

/// The H4 integrand for one (x, u, v).
double h4_integral(const MutationKernel& kernel, const Vec& x, const Vec& u, const Vec& v,
                   double tol = 1e-9);

struct RegularityReport {
    double lip_b = 0.0;
    double lip_a = 0.0;
    double holder_sigma = 0.0;
    /// Lipschitz quotient of sigma; diverges near Gamma, reported for contrast.
    double lip_sigma = 0.0;
    double min_eig_on_gamma_alpha = 0.0;
    int gamma_alpha_samples = 0;
};

/// Random-pair Lipschitz/Holder quotients over `region`. Half the pairs are
/// close pairs at log-uniform separations so the local quotients are probed.
/// The eigenvalue minimum uses points at distance >= alpha from Gamma with
/// |x| <= 1/alpha.
RegularityReport regularity_probe(const CoefficientField& field, const Box& region, double alpha,
                                  int pairs, std::uint64_t seed);

}  // namespace punctual
