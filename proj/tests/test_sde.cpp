#include "doctest.h"
#include "support.hpp"

#include "punctual/error.hpp"
#include "punctual/sde.hpp"

#include <cmath>

using namespace punctual;
using testing::field_of;

TEST_CASE("zero noise reduces to the explicit Euler recursion") {
    const CoefficientField f = field_of(quad1d());
    SimConfig cfg;
    cfg.eps = 0.0;
    cfg.dt = 0.01;
    cfg.t_max = 2.0;
    const Trajectory tr = simulate(f, make_vec({0.8}), cfg, {});
    REQUIRE(tr.times.size() == 201);
    for (std::size_t n = 0; n < tr.times.size(); n += 20) {
        CHECK(tr.times[n] == doctest::Approx(0.01 * n));
        CHECK(tr.points[n][0] == doctest::Approx(0.8 * std::pow(1 - 0.005, n)).epsilon(1e-12));
    }
    CHECK_FALSE(tr.absorbed_at);
    CHECK(tr.full_resolution());
}

TEST_CASE("same seed and path index give identical paths") {
    const CoefficientField f = field_of(radial2d());
    SimConfig cfg;
    cfg.eps = 0.2;
    cfg.dt = 0.01;
    cfg.t_max = 3.0;
    cfg.seed = 17;
    const Vec x0 = make_vec({0.3, -0.2});
    const Trajectory a = simulate(f, x0, cfg, {});
    const Trajectory b = simulate(f, x0, cfg, {});
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i] == b.points[i]);
    cfg.path_index = 1;
    const Trajectory c = simulate(f, x0, cfg, {});
    CHECK(c.points.back() != a.points.back());
}

TEST_CASE("a start inside the tube is absorbed at time zero") {
    const CoefficientField f = field_of(quad1d());
    SimConfig cfg;
    cfg.absorb_tube = 1e-5;
    const Trajectory tr = simulate(f, make_vec({5e-6}), cfg, {});
    REQUIRE(tr.absorbed_at);
    CHECK(*tr.absorbed_at == 0.0);
    CHECK(tr.points.back()[0] == 5e-6);
    CHECK(tr.times.back() == cfg.t_max);
}

TEST_CASE("stop rules interpolate the crossing inside the step") {
    const CoefficientField f = field_of(quad1d());
    SimConfig cfg;
    cfg.eps = 0.0;
    cfg.dt = 0.05;
    cfg.t_max = 5.0;
    const std::vector<StopRule> stops{StopRule::sphere_entry("inner", make_vec({0.0}), 0.5),
                                      StopRule::sphere_exit("never", make_vec({0.0}), 10.0)};
    const Trajectory tr = simulate(f, make_vec({1.0}), cfg, stops);
    REQUIRE(tr.exit_events.size() == 1);
    const ExitEvent& e = tr.exit_events[0];
    CHECK(e.label == "inner");
    CHECK(e.point[0] == doctest::Approx(0.5).epsilon(1e-12));
    // discrete crossing of 1 -> 0.5 under x_{n+1} = x_n (1 - dt/2)
    const double n_cont = std::log(0.5) / std::log(1 - 0.025);
    CHECK(e.time == doctest::Approx(0.05 * n_cont).epsilon(2e-3));
    CHECK(tr.times.back() == e.time);
}

TEST_CASE("non-terminal rules record and continue") {
    const CoefficientField f = field_of(quad1d());
    SimConfig cfg;
    cfg.eps = 0.0;
    cfg.dt = 0.05;
    cfg.t_max = 5.0;
    const Trajectory tr =
        simulate(f, make_vec({1.0}), cfg, {StopRule::sphere_entry("inner", make_vec({0.0}), 0.5, false)});
    CHECK(tr.exit_events.size() == 1);
    CHECK(tr.times.back() == 5.0);
}

TEST_CASE("stride thins the stored path") {
    const CoefficientField f = field_of(quad1d());
    SimConfig cfg;
    cfg.eps = 0.1;
    cfg.dt = 0.01;
    cfg.t_max = 1.0;
    cfg.stride = 10;
    const Trajectory tr = simulate(f, make_vec({0.5}), cfg, {});
    if (!tr.absorbed_at) {
        CHECK(tr.times.size() == 11);
        CHECK_FALSE(tr.full_resolution());
    }
    cfg.stride = 1;
    cfg.store_path = false;
    const Trajectory thin = simulate(f, make_vec({0.5}), cfg, {});
    CHECK(thin.times.size() <= 2);
}

TEST_CASE("batch results do not depend on the worker count") {
    const CoefficientField f = field_of(radial2d());
    SimConfig cfg;
    cfg.eps = 0.3;
    cfg.dt = 0.01;
    cfg.t_max = 2.0;
    cfg.seed = 5;
    const std::vector<StopRule> stops{StopRule::sphere_exit("out", make_vec({0, 0}), 0.6)};
    const BatchResult one = simulate_batch(f, make_vec({0.2, 0.1}), cfg, stops, 40, 1);
    const BatchResult four = simulate_batch(f, make_vec({0.2, 0.1}), cfg, stops, 40, 4);
    for (int i = 0; i < 40; ++i) {
        CHECK(one.paths[i].terminal == four.paths[i].terminal);
        CHECK(one.paths[i].t_end == four.paths[i].t_end);
        CHECK(one.paths[i].path_index == static_cast<std::uint64_t>(i));
    }
    const HittingStats st = hitting_time_stats(one, "out");
    CHECK(st.count + st.censored == 40);
    CHECK_THROWS_AS(hitting_time_stats(one, "missing"), UnknownLabel);
}

TEST_CASE("type 7 quantiles") {
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(sorted_quantile(v, 0.0) == 1.0);
    CHECK(sorted_quantile(v, 0.5) == 2.5);
    CHECK(sorted_quantile(v, 1.0) == 4.0);
    CHECK(std::isnan(sorted_quantile({}, 0.5)));
}

TEST_CASE("configuration preconditions") {
    const CoefficientField f = field_of(quad1d());
    SimConfig cfg;
    cfg.dt = -1;
    CHECK_THROWS_AS(simulate(f, make_vec({0.5}), cfg, {}), PreconditionError);
    cfg = {};
    cfg.absorb_tube = 1e-9;
    CHECK_THROWS_AS(simulate(f, make_vec({0.5}), cfg, {}), PreconditionError);
    cfg = {};
    CHECK_THROWS_AS(simulate(f, make_vec({0.5, 0.1}), cfg, {}), DimensionMismatch);
    CHECK_THROWS_AS(simulate_batch(f, make_vec({0.5}), cfg, {}, 0, 1), PreconditionError);
}
