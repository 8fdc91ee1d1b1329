// One PASS/FAIL line per acceptance criterion; exit status is nonzero if
// any criterion fails.

#include "punctual/action.hpp"
#include "punctual/classify.hpp"
#include "punctual/cli_io.hpp"
#include "punctual/exit.hpp"
#include "punctual/rng.hpp"
#include "punctual/sde.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

using namespace punctual;

namespace {

const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);
const double kSqrtPiOver2 = std::sqrt(std::numbers::pi / 2.0);

Box cube(int d) { return {Vec::Constant(d, -2.0), Vec::Constant(d, 2.0)}; }

CoefficientField make_field(const FitnessModel& m, Backend backend) {
    return build_field(m, MutationKernel::gaussian_isotropic(m.dim(), 1.0), find_singularities(m, cube(m.dim()), 9),
                       backend);
}

double rel(const Vec& got, const Vec& want) {
    const double n = want.norm();
    if (n == 0.0) return got.norm();
    return (got - want).norm() / n;
}

double rel(const Mat& got, const Mat& want) {
    const double n = want.norm();
    if (n == 0.0) return got.norm();
    return (got - want).norm() / n;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

Vec random_probe(RandomStream& rng, int d) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = -2.0 + 4.0 * rng.uniform();
    return x;
}

std::vector<FitnessModel> suite_models() { return {quad1d(), band1d(0.5), band1d(2.0), radial2d()}; }

// 1
Outcome coefficient_equivalence() {
    double worst = 0.0;
    for (const FitnessModel& m : suite_models()) {
        const CoefficientField cf = make_field(m, Backend::closed_form());
        const CoefficientField qd = make_field(m, Backend::quad());
        RandomStream rng(101, 0);
        for (int k = 0; k < 100; ++k) {
            const Vec x = random_probe(rng, m.dim());
            CoeffSample c0, c1;
            cf.evaluate(x, c0);
            qd.evaluate(x, c1);
            worst = std::max({worst, rel(c1.b, c0.b), rel(c1.bt, c0.bt), rel(c1.a, c0.a)});
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max rel err %.2e (<= 1e-5)", worst);
    return {worst <= 1e-5, buf};
}

// 2
Outcome dim1_formulas() {
    double worst = 0.0;
    const double m3 = 2.0 * kSqrt2OverPi;
    for (const FitnessModel& m : {quad1d(), band1d(0.5), band1d(2.0)}) {
        const CoefficientField qd = make_field(m, Backend::quad());
        RandomStream rng(202, 0);
        for (int k = 0; k < 100; ++k) {
            const Vec x = random_probe(rng, 1);
            const double g1 = m.grad1(x, x)[0];
            const double g11 = m.hess11(x, x)(0, 0);
            CoeffSample c;
            qd.evaluate(x, c);
            const double sgn = g1 > 0 ? 1.0 : (g1 < 0 ? -1.0 : 0.0);
            worst = std::max({worst, rel(c.b, make_vec({0.5 * g1})), rel(c.a, Mat::Constant(1, 1, 0.5 * m3 * std::abs(g1))),
                              rel(c.bt, make_vec({0.25 * m3 * sgn * g11}))});
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max rel err %.2e (<= 1e-5)", worst);
    return {worst <= 1e-5, buf};
}

// 3
Outcome degeneracy_psd() {
    double min_eig = 0.0, asym = 0.0, sq = 0.0, growth = 0.0;
    for (const FitnessModel& m : suite_models()) {
        const CoefficientField f = make_field(m, Backend::closed_form());
        const int d = m.dim();
        RandomStream rng(303, 0);
        for (int k = 0; k < 1000; ++k) {
            CoeffSample c;
            f.evaluate(random_probe(rng, d), c);
            min_eig = std::min(min_eig, min_eigenvalue(c.a) / std::max(1.0, c.a.norm()));
            asym = std::max(asym, (c.a - c.a.transpose()).norm());
            sq = std::max(sq, (c.sigma * c.sigma - c.a).norm());
        }
        // |a(y + delta u)| / delta stays bounded as delta -> 1e-4
        for (const Vec& y : f.gamma().points) {
            for (int k = 0; k < 8; ++k) {
                Vec u(d);
                for (int i = 0; i < d; ++i) u[i] = rng.normal();
                u /= u.norm();
                const double ref = f.a(y + 1e-1 * u).norm() / 1e-1;
                for (double delta : {1e-2, 1e-3, 1e-4}) {
                    growth = std::max(growth, f.a(y + delta * u).norm() / delta / ref);
                }
            }
        }
    }
    const bool ok = min_eig >= -1e-12 && asym <= 1e-14 && sq <= 1e-10 && growth <= 1.5;
    char buf[160];
    std::snprintf(buf, sizeof buf, "min eig %.1e, asym %.1e, |sigma^2-a| %.1e, |a|/delta growth %.3f", min_eig,
                  asym, sq, growth);
    return {ok, buf};
}

// 4
Outcome classification_concordance() {
    const double eps = 0.05, dt = 1e-3, t_end = 50.0;
    const int n_paths = 2000;
    std::ostringstream detail;
    bool ok = true;
    for (double kappa : {0.5, 2.0}) {
        const FitnessModel m = band1d(kappa);
        const SingularitySet g = find_singularities(m, cube(1), 9);
        const MutationKernel k = MutationKernel::gaussian_isotropic(1, 1.0);
        const CoefficientField f = build_field(m, k, g, Backend::closed_form());
        const Dim1Verdict v = classify_dim1(m, k, g, 0.0);
        std::vector<int> absorbed_left(n_paths, 0), absorbed_right(n_paths, 0), left_band(n_paths, 0),
            returned(n_paths, 0);
        SimConfig cfg;
        cfg.eps = eps;
        cfg.dt = dt;
        cfg.t_max = t_end;
        cfg.absorb_tube = 1e-4;
        cfg.seed = 4000 + static_cast<std::uint64_t>(kappa * 10);
        cfg.stride = 10;
        parallel_for(n_paths, default_workers(), [&](int i) {
            SimConfig c = cfg;
            c.path_index = static_cast<std::uint64_t>(i);
            const Trajectory tr = simulate(f, make_vec({0.0}), c, {});
            if (tr.absorbed_at) (tr.terminal()[0] < 0 ? absorbed_left : absorbed_right)[i] = 1;
            bool out = false;
            for (const Vec& p : tr.points) {
                if (!out && std::abs(p[0]) > 0.5) out = true;
                else if (out && std::abs(p[0]) <= 0.5) {
                    returned[i] = 1;
                    break;
                }
            }
            left_band[i] = out;
        });
        int n_left = 0, n_right = 0, n_out = 0, n_ret = 0;
        for (int i = 0; i < n_paths; ++i) {
            n_left += absorbed_left[i];
            n_right += absorbed_right[i];
            n_out += left_band[i];
            n_ret += returned[i];
        }
        const double ret_frac = n_out ? static_cast<double>(n_ret) / n_out : 1.0;
        detail << "kappa=" << kappa << ": " << to_string(v.kase) << ", absorbed at -1: " << n_left << ", at +1: " << n_right
               << ", returned " << n_ret << "/" << n_out << "; ";
        if (kappa < 1) {
            ok = ok && v.kase == Dim1Case::d_hits_either && n_left >= 0.01 * n_paths && n_right >= 0.01 * n_paths;
        } else {
            ok = ok && v.kase == Dim1Case::a_recurrent && n_left + n_right == 0 && ret_frac >= 0.95;
        }
    }
    return {ok, detail.str()};
}

// 5
Outcome scale_agreement() {
    std::ostringstream detail;
    bool ok = true;
    for (double kappa : {0.5, 2.0}) {
        const FitnessModel m = band1d(kappa);
        const SingularitySet g = find_singularities(m, cube(1), 9);
        const MutationKernel k = MutationKernel::gaussian_isotropic(1, 1.0);
        const Dim1Verdict v = classify_dim1(m, k, g, 0.0);
        const ScaleVerdicts s = scale_functions(build_field(m, k, g, Backend::closed_form()), -1.0, 1.0, 0.0, 0.1);
        // the alpha/beta reading: p(c+) finite iff alpha < 1, p(c'-) finite iff beta > -1
        const Finiteness want_left = v.alpha < 1 ? Finiteness::finite : Finiteness::infinite;
        const Finiteness want_right = v.beta > -1 ? Finiteness::finite : Finiteness::infinite;
        const bool match = s.p_left == want_left && s.p_right == want_right;
        ok = ok && match;
        detail << "kappa=" << kappa << ": p(c+) " << to_string(s.p_left) << " (want " << to_string(want_left)
               << "), p(c'-) " << to_string(s.p_right) << " (want " << to_string(want_right) << "); ";
    }
    return {ok, detail.str()};
}

// 6
Outcome dimd_constants() {
    const DimDVerdict v = classify_dimd(radial2d(), MutationKernel::gaussian_isotropic(2, 1.0), make_vec({0, 0}),
                                        0.5, 400, 6);
    const bool d_ok = v.d_invertible && (v.d_matrix + Mat::Identity(2, 2)).norm() <= 1e-8;
    const bool lam_ok = std::abs(v.eig_min - 1.0) <= 1e-8 && std::abs(v.eig_max - 1.0) <= 1e-8;
    const bool bt_ok = v.bt_upper <= v.bt_envelope + 0.05;
    char buf[160];
    std::snprintf(buf, sizeof buf, "D=-I %s, lambda %.10f/%.10f, bt upper %.4f vs envelope %.4f + 0.05",
                  d_ok ? "yes" : "no", v.eig_min, v.eig_max, v.bt_upper, v.bt_envelope);
    return {d_ok && lam_ok && bt_ok, buf};
}

// 7
Outcome action_duality() {
    const CoefficientField f = make_field(radial2d(), Backend::closed_form());
    RandomStream rng(707, 0);
    double worst_dual = 0.0, worst_trip = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double cx = 0.5 + 0.4 * rng.uniform(), cy = -0.5 + rng.uniform();
        const double r = 0.1 + 0.2 * rng.uniform(), w = 0.5 + 2.0 * rng.uniform(), ph = 6.0 * rng.uniform();
        const double drift = -0.2 + 0.4 * rng.uniform();
        const DiscretePath p = sample_path(1.0, 10000, [&](double t) {
            return make_vec({cx + drift * t + r * std::cos(w * t + ph), cy + r * std::sin(w * t + ph)});
        });
        const ActionValue a = action(f, p);
        const ControlResult c = control_from_path(f, p);
        worst_dual = std::max(worst_dual, std::abs(a.value - c.j_value) / (1.0 + a.value));
        const DiscretePath back = integrate_S(f, p.points.front(), c.phi);
        for (std::size_t i = 0; i < p.size(); ++i) worst_trip = std::max(worst_trip, (back.points[i] - p.points[i]).norm());
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "|I-J|/(1+I) %.2e (<= 1e-6), round trip %.2e (<= 1e-3)", worst_dual, worst_trip);
    return {worst_dual <= 1e-6 && worst_trip <= 1e-3, buf};
}

// 8
Outcome non_lsc() {
    const CoefficientField f = make_field(quad1d(), Backend::closed_form());
    const double x0 = 0.5, big_t = 1.0, k_lip = 0.5, a0 = kSqrt2OverPi;
    const std::vector<int> ns{4, 16, 64};
    const NonLscWitness w = non_lsc_witness(f, make_vec({x0}), ns, big_t);
    // explicit bound: psi' = -(4/T)(1 - 2t/T) x0, |psi' + b|^2 <= 2|psi'|^2 + 2K^2|psi|^2,
    // plus the plateau term with |b| <= K|psi|
    const auto psi = [&](double t) { return std::pow(1 - 2 * t / big_t, 2) * x0; };
    double bound_main = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double t = big_t * (i + 0.5) / n;
        bound_main += (32.0 / (big_t * big_t) * x0 + 2 * k_lip * k_lip * psi(t)) * big_t / n;
    }
    bound_main /= 2 * a0;
    double sup_seq = 0.0, bound = 0.0;
    for (std::size_t j = 0; j < ns.size(); ++j) {
        const double wdt = 1.0 / ns[j];
        const double plateau = k_lip * k_lip * psi(big_t / 2 - wdt) * 2 * wdt / (2 * a0);
        bound = std::max(bound, bound_main + plateau);
        sup_seq = std::max(sup_seq, w.i_sequence[j]);
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "I(psi) infinite %s, sup I(psi_n) %.4f <= bound %.4f", w.i_limit_infinite ? "yes" : "no",
                  sup_seq, bound);
    return {w.i_limit_infinite && sup_seq <= bound, buf};
}

// 9
Outcome quasipotential_closed_form() {
    const QuasiPotentialResult q1 =
        quasipotential(make_field(quad1d(), Backend::closed_form()), make_vec({0.0}), make_vec({0.8}));
    const double o1 = kSqrtPiOver2 * 0.8;
    const QuasiPotentialResult q2 =
        quasipotential(make_field(radial2d(), Backend::closed_form()), make_vec({0.0, 0.0}), make_vec({-0.45, 0.0}));
    const double o2 = kSqrtPiOver2 * 0.45;
    const bool ok1 = std::abs(q1.value - o1) <= 0.02 * o1;
    const bool ok2 = q2.value <= 1.05 * o2 && q2.value >= 0.8 * o2;
    char buf[160];
    std::snprintf(buf, sizeof buf, "quad1d V=%.4f vs %.4f; radial2d V=%.4f in [%.4f, %.4f]", q1.value, o1, q2.value,
                  0.8 * o2, 1.05 * o2);
    return {ok1 && ok2, buf};
}

// monotone up to one inversion within 2 standard errors
bool trend_ok(const std::vector<double>& v, const std::vector<double>& se, bool strict) {
    int inversions = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const bool up = strict ? v[i] > v[i - 1] : v[i] >= v[i - 1];
        if (up) continue;
        ++inversions;
        if (v[i - 1] - v[i] > 2.0 * std::hypot(se[i], se[i - 1])) return false;
    }
    return inversions <= 1;
}

// 10
Outcome exit_time_trend() {
    const CoefficientField f = make_field(quad1d(), Backend::closed_form());
    const Domain d = Domain::interval(-0.8, 0.8);
    const double v_bar = kSqrtPiOver2 * 0.8;
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.seed = 11;
    cfg.absorb_tube = 1e-5;
    ExitExperimentOptions o;
    o.workers = default_workers();
    const ExitExperimentResult r =
        run_exit_experiment(f, d, make_vec({0.1}), {0.2, 0.14, 0.1}, 500, cfg, v_bar, make_vec({0.8}), 0.3 * v_bar, o);
    std::vector<double> v, se;
    std::ostringstream detail;
    detail.precision(4);
    for (const EpsExitResult& e : r.per_eps) {
        v.push_back(e.eps_log_median);
        se.push_back(e.eps_log_median_se);
        detail << "eps=" << e.eps << ": eps*log(med)=" << e.eps_log_median << " frac=" << e.frac_exceeding_threshold
               << "; ";
    }
    const bool trend = trend_ok(v, se, true) && v.back() <= v_bar + 2 * se.back();
    const bool frac = r.per_eps.back().frac_exceeding_threshold >= 0.9;
    detail << "Vbar=" << v_bar;
    return {trend && frac, detail.str()};
}

// 11
Outcome exit_location() {
    const CoefficientField f = make_field(radial2d(), Backend::closed_form());
    const Domain d = Domain::ball(make_vec({0.15, 0.0}), 0.6);
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.seed = 21;
    cfg.absorb_tube = 1e-5;
    ExitExperimentOptions o;
    o.workers = default_workers();
    o.near_radius = 0.3;
    const double v_bar = kSqrtPiOver2 * 0.45;
    const ExitExperimentResult r = run_exit_experiment(f, d, make_vec({0.1, 0.0}), {0.15, 0.1, 0.07}, 500, cfg,
                                                       v_bar, make_vec({-0.45, 0.0}), 0.3 * v_bar, o);
    std::vector<double> frac, se;
    std::ostringstream detail;
    detail.precision(3);
    for (const EpsExitResult& e : r.per_eps) {
        frac.push_back(e.frac_near_z_star);
        const int n = e.n_paths - e.n_censored;
        se.push_back(std::sqrt(e.frac_near_z_star * (1 - e.frac_near_z_star) / std::max(n, 1)));
        detail << "eps=" << e.eps << ": near z* " << e.frac_near_z_star << "; ";
    }
    const bool ok = frac.back() >= 0.7 && trend_ok(frac, se, false);
    return {ok, detail.str()};
}

// 12
Outcome determinism() {
    namespace fs = std::filesystem;
    const std::string dir = std::string(PUNCTUAL_SOURCE_DIR) + "/scenarios/";
    std::ostringstream detail;
    bool ok = true;
    for (const auto& [cmd, file] : std::vector<std::pair<std::string, std::string>>{
             {"coeff-table", "radial2d_coeff_table.yaml"}, {"simulate", "band1d_simulate.yaml"}}) {
        std::string first;
        for (int w : {1, 4}) {
            const fs::path out = fs::temp_directory_path() / ("punctual_accept_" + cmd + std::to_string(w));
            fs::remove_all(out);
            RunOptions o;
            o.workers = w;
            o.out_dir = out.string();
            std::ostringstream so, se;
            if (run_command(cmd, dir + file, o, so, se) != 0) return {false, cmd + " failed: " + se.str()};
            std::ifstream in(out / "manifest.json");
            const nlohmann::json m = nlohmann::json::parse(in);
            const std::string sums = m["outputs"].dump();
            if (first.empty()) first = sums;
            else if (sums != first) ok = false;
        }
        detail << cmd << (ok ? " identical; " : " differs; ");
    }
    return {ok, detail.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"coefficient oracle equivalence", coefficient_equivalence},
        {"dim-1 specialization", dim1_formulas},
        {"degeneracy and PSD", degeneracy_psd},
        {"classification concordance", classification_concordance},
        {"scale-function agreement", scale_agreement},
        {"dim-d constants", dimd_constants},
        {"action duality", action_duality},
        {"non-lsc witness", non_lsc},
        {"quasi-potential vs closed form", quasipotential_closed_form},
        {"exit lower bound trend", exit_time_trend},
        {"exit-location concentration", exit_location},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("%s %2zu %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
