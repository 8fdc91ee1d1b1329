#include "doctest.h"
#include "support.hpp"

#include "punctual/error.hpp"
#include "punctual/quadrature.hpp"
#include "punctual/rng.hpp"

using namespace punctual;
using testing::kSqrt2OverPi;

TEST_CASE("sqrt_psd squares back and rejects bad input") {
    RandomStream rng(3, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + trial % 4;
        Mat g(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
        const Mat a = g * g.transpose();
        const Mat s = sqrt_psd(a);
        CHECK((s * s - a).norm() <= 1e-12 * (1.0 + a.norm()));
        CHECK((s - s.transpose()).norm() == doctest::Approx(0.0));
    }
    Mat asym(2, 2);
    asym << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(sqrt_psd(asym), DomainError);
    Mat neg(2, 2);
    neg << 1, 0, 0, -1e-3;
    CHECK_THROWS_AS(sqrt_psd(neg), DomainError);
    Mat tiny(2, 2);
    tiny << 1, 0, 0, -1e-12;  // clamped to 0
    CHECK(sqrt_psd(tiny)(1, 1) == 0.0);
}

TEST_CASE("psd_inverse lifts small eigenvalues to the floor") {
    Mat a(2, 2);
    a << 2, 0, 0, 0;
    const Mat inv = psd_inverse(a, 1e-6);
    CHECK(inv(0, 0) == doctest::Approx(0.5));
    CHECK(inv(1, 1) == doctest::Approx(1.0 / (1e-6 * 2.0)));
}

TEST_CASE("basis_with_first is orthonormal with the given first column") {
    const Vec u = make_vec({0.3, -1.2, 2.0});
    const Mat q = basis_with_first(u);
    CHECK((q.transpose() * q - Mat::Identity(3, 3)).norm() < 1e-13);
    CHECK((q.col(0) - u / u.norm()).norm() < 1e-13);
}

TEST_CASE("Gauss-Hermite rule reproduces standard normal moments") {
    const Rule1D& r = gauss_hermite_normal(4);
    double m0 = 0, m2 = 0, m4 = 0, m6 = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        const double z = r.nodes[i];
        m0 += r.weights[i];
        m2 += r.weights[i] * z * z;
        m4 += r.weights[i] * std::pow(z, 4);
        m6 += r.weights[i] * std::pow(z, 6);
    }
    CHECK(m0 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(m6 == doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("half-normal rule gives moments restricted to z > 0") {
    const Rule1D& r = half_normal_rule(4);
    auto moment = [&](int k) {
        double s = 0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
        return s;
    };
    const double phi0 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    CHECK(moment(0) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(moment(1) == doctest::Approx(phi0).epsilon(1e-13));
    CHECK(moment(2) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(moment(3) == doctest::Approx(2.0 * phi0).epsilon(1e-13));
    CHECK(moment(4) == doctest::Approx(1.5).epsilon(1e-13));
    // E|Z|^3 = 2 sqrt(2/pi)
    CHECK(2.0 * moment(3) == doctest::Approx(2.0 * kSqrt2OverPi).epsilon(1e-13));
}

TEST_CASE("adaptive Gauss-Kronrod") {
    auto ex = [](double x) { return std::exp(x); };
    CHECK(integrate_adaptive(ex, 0, 1, 1e-12).value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
    CHECK(integrate_adaptive(ex, 1, 0, 1e-12).value == doctest::Approx(1.0 - std::exp(1.0)).epsilon(1e-14));
    auto bad = [](double) { return std::nan(""); };
    CHECK_THROWS_AS(integrate_adaptive(bad, 0, 1, 1e-9), QuadratureError);

    // short panel with reversed limits: the error estimate must stay at the
    // size of the actual error
    auto inv = [](double x) { return 1.0 / (x + 1.0); };
    const double a = -0.99741476516043781, b = -0.99772882813272024;
    const QuadResult q = integrate_gk(inv, a, b, 1e-11);
    CHECK(q.value == doctest::Approx(std::log((b + 1) / (a + 1))).epsilon(1e-13));
    CHECK(q.error < 1e-12);
}

TEST_CASE("ball quadrature volumes") {
    auto one = [](const Vec&) { return 1.0; };
    CHECK(integrate_ball(2, 1.0, true, one, 1e-10).value == doctest::Approx(std::numbers::pi / 2).epsilon(1e-9));
    CHECK(integrate_ball(3, 1.0, false, one, 1e-8).value ==
          doctest::Approx(4.0 * std::numbers::pi / 3.0).epsilon(1e-7));
    CHECK(integrate_ball(1, 2.0, true, one, 1e-10).value == doctest::Approx(2.0));
    CHECK_THROWS_AS(integrate_ball(4, 1.0, false, one, 1e-6), DomainError);
}

TEST_CASE("Philox streams are reproducible and independent") {
    RandomStream a(42, 7), b(42, 7), c(42, 8);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const double x = a.normal();
        CHECK(x == b.normal());
        differs = differs || x != c.normal();
    }
    CHECK(differs);
    RandomStream u(1, 0);
    double mean = 0, var = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = u.normal();
        mean += z;
        var += z * z;
    }
    CHECK(std::abs(mean / n) < 0.01);
    CHECK(var / n == doctest::Approx(1.0).epsilon(0.01));
}
