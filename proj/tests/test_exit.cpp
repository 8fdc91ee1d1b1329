#include "doctest.h"
#include "support.hpp"

#include "punctual/error.hpp"
#include "punctual/exit.hpp"
#include "punctual/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace punctual;
using testing::field_of;

namespace {

Domain square() {
    return Domain::polygon({make_vec({-1, -1}), make_vec({1, -1}), make_vec({1, 1}), make_vec({-1, 1})});
}

FitnessModel repelling1d() {
    FitnessModel::Callbacks cb;
    cb.eval = [](const Vec& y, const Vec& x) { return x[0] * (y[0] - x[0]) - std::pow(y[0] - x[0], 2); };
    return FitnessModel("repel", 1, cb);
}

}  // namespace

TEST_CASE("signed distances") {
    const Domain b = Domain::ball(make_vec({0.15, 0}), 0.6);
    CHECK(b.signed_distance(make_vec({0.15, 0})) == doctest::Approx(-0.6));
    CHECK(b.signed_distance(make_vec({0.75, 0})) == doctest::Approx(0.0).scale(1));
    CHECK(b.scale() == doctest::Approx(1.2));
    const Domain i = Domain::interval(-0.5, 1.0);
    CHECK(i.signed_distance(make_vec({0.0})) == doctest::Approx(-0.5));
    CHECK(i.signed_distance(make_vec({1.5})) == doctest::Approx(0.5));
    const Domain s = square();
    CHECK(s.signed_distance(make_vec({0.0, 0.5})) == doctest::Approx(-0.5));
    CHECK(s.signed_distance(make_vec({2.0, 0.0})) == doctest::Approx(1.0));
    CHECK(s.signed_distance(make_vec({2.0, 2.0})) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(Domain::ball(make_vec({0.0}), -1.0), DomainError);
    CHECK_THROWS_AS(Domain::interval(1.0, 0.0), DomainError);
}

TEST_CASE("signed distance is 1-Lipschitz") {
    RandomStream rng(3, 0);
    for (const Domain& d : {Domain::ball(make_vec({0.2, -0.1}), 0.7), square(),
                            Domain::polygon({make_vec({0, 0}), make_vec({2, 0}), make_vec({0.5, 0.5}),
                                             make_vec({0, 2})})}) {
        double worst = 0;
        for (int k = 0; k < 2000; ++k) {
            const Vec x = make_vec({3 * rng.uniform() - 1.5, 3 * rng.uniform() - 1.5});
            const Vec y = make_vec({3 * rng.uniform() - 1.5, 3 * rng.uniform() - 1.5});
            worst = std::max(worst, std::abs(d.signed_distance(x) - d.signed_distance(y)) / (x - y).norm());
        }
        CHECK(worst <= 1.0 + 1e-12);
    }
}

TEST_CASE("boundary grids lie on the boundary") {
    for (const Domain& d : {Domain::ball(make_vec({0.15, 0}), 0.6), square(),
                            Domain::ball(make_vec({0, 0, 0}), 1.0)}) {
        const auto pts = d.boundary_grid(24);
        CHECK(pts.size() == 24);
        for (const Vec& p : pts) CHECK(std::abs(d.signed_distance(p)) < 1e-12);
        for (const Vec& p : d.boundary_sample(10, 4)) CHECK(std::abs(d.signed_distance(p)) < 1e-12);
    }
    const auto ends = Domain::interval(-0.5, 1.0).boundary_grid(32);
    REQUIRE(ends.size() == 2);
    CHECK(ends[0][0] == -0.5);
    CHECK(ends[1][0] == 1.0);
    const auto ring = Domain::ball(make_vec({0.15, 0}), 0.6).boundary_grid(4);
    CHECK((ring[0] - make_vec({0.75, 0})).norm() < 1e-15);
}

TEST_CASE("excursion decomposition on a hand-made path") {
    Trajectory tr;
    tr.times = {0, 1, 2, 3, 4, 5};
    for (double x : {0.5, 0.05, 0.25, 0.08, 0.5, 1.0}) tr.points.push_back(make_vec({x}));
    tr.steps = 5;
    const Domain d = Domain::interval(-1.0, 1.0);
    const auto ex = excursion_decomposition(tr, d, make_vec({0.0}), 0.1, 0.2);
    REQUIRE(ex.size() == 3);
    CHECK(ex[0].theta == 0.0);
    CHECK(*ex[0].tau == 1.0);
    CHECK(ex[1].theta == 2.0);
    CHECK(*ex[1].tau == 3.0);
    CHECK(ex[2].theta == 4.0);
    CHECK(*ex[2].tau == 5.0);
    CHECK(ex[2].at_boundary);
    CHECK_FALSE(ex[0].at_boundary);

    tr.stride = 10;
    CHECK_THROWS_AS(excursion_decomposition(tr, d, make_vec({0.0}), 0.1, 0.2), NeedsFullPath);
    tr.stride = 1;
    CHECK_THROWS_AS(excursion_decomposition(tr, d, make_vec({0.0}), 0.6, 1.2), PreconditionError);
}

TEST_CASE("excursions of a simulated path end at the boundary") {
    const CoefficientField f = field_of(quad1d());
    SimConfig cfg;
    cfg.eps = 0.3;
    cfg.dt = 0.01;
    cfg.t_max = 200;
    cfg.seed = 8;
    const Domain d = Domain::interval(-0.5, 0.5);
    const StopRule out{kBoundaryLabel, [&d](const Vec& x) { return d.signed_distance(x); }, true};
    const Trajectory tr = simulate(f, make_vec({0.2}), cfg, {out});
    const auto ex = excursion_decomposition(tr, d, make_vec({0.0}), 0.05, 0.1);
    REQUIRE_FALSE(ex.empty());
    for (std::size_t m = 1; m < ex.size(); ++m) CHECK(ex[m].theta > *ex[m - 1].tau);
    if (!tr.exit_events.empty() && !tr.absorbed_at) CHECK(ex.back().at_boundary);
}

TEST_CASE("attraction check") {
    const AttractingReport yes = check_attracting(field_of(radial2d()), Domain::ball(make_vec({0.15, 0}), 0.6), 16, 60);
    CHECK(yes.attracting);
    CHECK(yes.stays_inside);
    REQUIRE(yes.singularity);
    CHECK(yes.singularity->norm() < 1e-9);
    CHECK(yes.n_seeds >= 16);

    const CoefficientField rep = build_field(repelling1d(), MutationKernel::gaussian_isotropic(1, 1.0),
                                             find_singularities(repelling1d(), testing::cube(1), 9),
                                             Backend::closed_form());
    const AttractingReport no = check_attracting(rep, Domain::interval(-0.5, 0.5), 4, 20);
    CHECK_FALSE(no.attracting);
    CHECK_FALSE(no.stays_inside);
    CHECK(no.n_escaped > 0);
}

TEST_CASE("exit experiment accounting") {
    const CoefficientField f = field_of(quad1d());
    const Domain d = Domain::interval(-0.3, 0.3);
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.seed = 2;
    const std::vector<double> eps{0.5, 0.3};
    ExitExperimentOptions o;
    o.workers = 1;
    const ExitExperimentResult r = run_exit_experiment(f, d, make_vec({0.1}), eps, 60, cfg, 0.3,
                                                       make_vec({0.3}), 0.05, o);
    REQUIRE(r.per_eps.size() == 2);
    for (const EpsExitResult& e : r.per_eps) {
        CHECK(e.exit_times.size() == 60);
        CHECK(e.censored.size() == 60);
        CHECK(e.n_censored == std::count(e.censored.begin(), e.censored.end(), 1));
        CHECK(e.n_absorbed <= e.n_censored);
        CHECK(e.t_max == doctest::Approx(10 * std::exp(0.3 / e.eps)));
        CHECK(e.threshold == doctest::Approx(std::exp(0.25 / e.eps)));
        CHECK(e.frac_exceeding_threshold >= 0.0);
        CHECK(e.frac_exceeding_threshold <= 1.0);
        for (int i = 0; i < 60; ++i) {
            if (!e.censored[i]) CHECK(std::abs(e.exit_points[i][0]) == doctest::Approx(0.3));
        }
    }
    o.workers = 3;
    const ExitExperimentResult again = run_exit_experiment(f, d, make_vec({0.1}), eps, 60, cfg, 0.3,
                                                           make_vec({0.3}), 0.05, o);
    CHECK(again.per_eps[1].exit_times == r.per_eps[1].exit_times);

    CHECK_THROWS_AS(run_exit_experiment(f, d, make_vec({0.1}), {0.3, 0.5}, 5, cfg, 0.3, make_vec({0.3}), 0.05),
                    PreconditionError);
    CHECK_THROWS_AS(run_exit_experiment(f, d, make_vec({0.4}), eps, 5, cfg, 0.3, make_vec({0.3}), 0.05),
                    PreconditionError);
    CHECK_THROWS_AS(run_exit_experiment(f, d, make_vec({0.1}), eps, 5, cfg, 0.0, make_vec({0.3}), 0.05),
                    PreconditionError);
}
