#include "doctest.h"
#include "support.hpp"

#include "punctual/classify.hpp"
#include "punctual/error.hpp"

#include <cmath>
#include <numbers>

using namespace punctual;
using testing::cube;
using testing::field_of;

TEST_CASE("case table from the ratios") {
    CHECK(dim1_case(1.0, -1.0) == Dim1Case::a_recurrent);
    CHECK(dim1_case(3.0, -2.0) == Dim1Case::a_recurrent);
    CHECK(dim1_case(1.0, -0.99) == Dim1Case::b_hits_right);
    CHECK(dim1_case(0.99, -1.0) == Dim1Case::c_hits_left);
    CHECK(dim1_case(0.5, -0.5) == Dim1Case::d_hits_either);
    CHECK(to_string(Dim1Case::d_hits_either) == "d_hits_either");
}

TEST_CASE("band model ratios are alpha = kappa, beta = -kappa") {
    for (double kappa : {0.25, 0.5, 1.0, 2.0, 3.5}) {
        CAPTURE(kappa);
        const FitnessModel m = band1d(kappa);
        const SingularitySet g = find_singularities(m, cube(1), 9);
        const Dim1Verdict v = classify_dim1(m, MutationKernel::gaussian_isotropic(1, 1.0), g, 0.1);
        CHECK(v.c == doctest::Approx(-1.0));
        CHECK(v.c_prime == doctest::Approx(1.0));
        CHECK(v.alpha == doctest::Approx(kappa).epsilon(1e-6));
        CHECK(v.beta == doctest::Approx(-kappa).epsilon(1e-6));
        CHECK(v.alpha_alt == doctest::Approx(v.alpha).epsilon(1e-6));
        CHECK(v.beta_alt == doctest::Approx(v.beta).epsilon(1e-6));
        CHECK(v.kase == (kappa >= 1 ? Dim1Case::a_recurrent : Dim1Case::d_hits_either));
    }
}

TEST_CASE("classification needs an interval between two singularities") {
    const FitnessModel m = band1d(0.5);
    const SingularitySet g = find_singularities(m, cube(1), 9);
    const MutationKernel k = MutationKernel::gaussian_isotropic(1, 1.0);
    CHECK_THROWS_AS(classify_dim1(m, k, g, 1.5), UnboundedIntervalError);
    CHECK_THROWS_AS(classify_dim1(m, k, g, 1.0), PreconditionError);
    CHECK_THROWS_AS(classify_dim1(radial2d(), MutationKernel::gaussian_isotropic(2, 1.0), g, 0.0),
                    DimensionMismatch);
}

TEST_CASE("scale function exponents near the endpoints") {
    for (double kappa : {0.5, 2.0}) {
        CAPTURE(kappa);
        const CoefficientField f = field_of(band1d(kappa));
        const ScaleVerdicts s = scale_functions(f, -1.0, 1.0, 0.0, 0.1);
        CHECK(s.p_exponent_left == doctest::Approx(-kappa).epsilon(0.05));
        CHECK(s.p_exponent_right == doctest::Approx(kappa).epsilon(0.05));
        CHECK(s.p_right == Finiteness::finite);
        CHECK(s.p_left == (kappa < 1 ? Finiteness::finite : Finiteness::infinite));
    }
    CHECK(finiteness_from_exponent(-0.5) == Finiteness::finite);
    CHECK(finiteness_from_exponent(-1.5) == Finiteness::infinite);
    CHECK(finiteness_from_exponent(-1.0 + 0.5 * kExponentBand) == Finiteness::inconclusive);
}

TEST_CASE("radial model around the origin") {
    const DimDVerdict v = classify_dimd(radial2d(), MutationKernel::gaussian_isotropic(2, 1.0),
                                        make_vec({0, 0}), 0.5, 400, 4);
    CHECK(v.d_invertible);
    CHECK((v.d_matrix + Mat::Identity(2, 2)).norm() < 1e-9);
    CHECK(v.eig_min == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(v.eig_max == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(v.bt_envelope == doctest::Approx(3.0 * std::sqrt(std::numbers::pi / 2)).epsilon(1e-9));
    CHECK(v.a_upper <= v.a_upper_bound * (1 + 1e-9));
    // the half-space integral halves the printed lower constant
    CHECK(v.a_lower == doctest::Approx(0.5 * v.a_lower_bound).epsilon(1e-3));
    CHECK(v.bt_upper <= v.bt_envelope * (1 + 1e-9));
    CHECK(v.verdict == DimDClass::never_absorbed);
    CHECK(v.samples == 400);
}

TEST_CASE("singular D is reported as degenerate") {
    FitnessModel::Callbacks cb;
    // F(x) = (x1^2, -x2), so the Jacobian at the origin is singular
    cb.eval = [](const Vec& y, const Vec& x) {
        return (y[0] - x[0]) * x[0] * x[0] - (y[1] - x[1]) * x[1] - (y - x).squaredNorm();
    };
    const FitnessModel m("flat", 2, cb);
    CHECK_THROWS_AS(classify_dimd(m, MutationKernel::gaussian_isotropic(2, 1.0), make_vec({0, 0}), 0.5, 50, 1),
                    DegenerateError);
}
