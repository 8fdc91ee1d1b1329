#pragma once

#include "punctual/coeff.hpp"
#include "punctual/model.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace punctual {

enum class Dim1Case { a_recurrent, b_hits_right, c_hits_left, d_hits_either };
enum class Finiteness { finite, infinite, inconclusive };

std::string to_string(Dim1Case c);
std::string to_string(Finiteness f);

/// Endpoint finiteness of the scale function p and of v, with the fitted
/// local exponents: near an endpoint the integrand behaves like
/// dist^exponent, and the improper integral is finite iff exponent > -1.
struct ScaleVerdicts {
    Finiteness p_left = Finiteness::inconclusive;
    Finiteness p_right = Finiteness::inconclusive;
    Finiteness v_left = Finiteness::inconclusive;
    Finiteness v_right = Finiteness::inconclusive;
    double p_exponent_left = 0.0;
    double p_exponent_right = 0.0;
    double v_exponent_left = 0.0;
    double v_exponent_right = 0.0;
};

struct Dim1Verdict {
    double c = 0.0;
    double c_prime = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    /// The same ratios from the second formula, 2 g11 / (g11 - g22).
    double alpha_alt = 0.0;
    double beta_alt = 0.0;
    Dim1Case kase = Dim1Case::a_recurrent;
    std::optional<ScaleVerdicts> scale;
};

/// Width of the inconclusive band around the exponent threshold.
inline constexpr double kExponentBand = 0.05;
/// Endpoint distances used for the exponent fit.
inline constexpr double kFitDistMin = 1e-9;
inline constexpr double kFitDistMax = 1e-6;

/// Four-case verdict for the interval (c, c') around x, with
/// c, c' the neighbours of x in `gamma`. Case a needs alpha >= 1 and
/// beta <= -1; b needs alpha >= 1, beta > -1; c needs alpha < 1,
/// beta <= -1; otherwise d.
Dim1Verdict classify_dim1(const FitnessModel& model, const MutationKernel& kernel,
                          const SingularitySet& gamma, double x);

/// Dim1Case from the ratios alone.
Dim1Case dim1_case(double alpha, double beta);

/// Numerical scale/speed functions on (c, c') with reference point
/// gamma_ref, integrated in the log domain on geometric panels refining
/// toward each endpoint (n_panels per side, down to distance kFitDistMin).
ScaleVerdicts scale_functions(const CoefficientField& field, double c, double c_prime,
                              double gamma_ref, double eps, int n_panels = 160);

/// Verdict from a fitted exponent: finite iff exponent > -1, inconclusive
/// within kExponentBand of -1.
Finiteness finiteness_from_exponent(double exponent);

enum class DimDClass { never_absorbed, absorbed_with_positive_prob, inconclusive };
std::string to_string(DimDClass c);

struct DimDVerdict {
    Vec y;
    double a_upper = 0.0;
    double a_lower = 0.0;
    double bt_upper = 0.0;
    double bt_lower = 0.0;
    double criterion_a = 0.0;
    double criterion_b = 0.0;
    DimDClass verdict = DimDClass::inconclusive;
    double eig_min = 0.0;
    double eig_max = 0.0;
    bool d_invertible = false;
    Mat d_matrix;
    // analytic envelope constants: M3 sqrt(lambda^y), C sqrt(lambda_y), (M3/2)|H11|
    double a_upper_bound = 0.0;
    double a_lower_bound = 0.0;
    double bt_envelope = 0.0;
    int samples = 0;
};

/// Empirical constants on the punctured ball of radius nbhd_radius around y
/// from Latin-hypercube samples; throws DegenerateError when D is singular.
DimDVerdict classify_dimd(const FitnessModel& model, const MutationKernel& kernel, const Vec& y,
                          double nbhd_radius, int samples, std::uint64_t seed);

}  // namespace punctual
