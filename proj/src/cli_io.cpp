#include "punctual/cli_io.hpp"

#include "punctual/action.hpp"
#include "punctual/classify.hpp"
#include "punctual/domain.hpp"
#include "punctual/error.hpp"
#include "punctual/exit.hpp"
#include "punctual/sde.hpp"

#include <fmt/format.h>
#include "json.hpp"
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace punctual {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

int exit_code_for(const std::string& kind) {
    if (kind == "config") return 2;
    if (kind == "precondition") return 3;
    if (kind == "internal") return 5;
    return 4;
}

namespace {

json to_json(const Vec& x) {
    json a = json::array();
    for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
    return a;
}

json to_json(const Mat& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        a.push_back(row);
    }
    return a;
}

// NaN and inf have no JSON form.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string csv_num(double x) { return fmt::format("{}", x); }

std::string axis_header(const std::string& prefix, int d) {
    std::string h;
    for (int i = 1; i <= d; ++i) h += (i > 1 ? "," : "") + prefix + std::to_string(i);
    return h;
}

std::string csv_vec(const Vec& x) {
    std::string s;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += (i ? "," : "") + csv_num(x[i]);
    return s;
}

// Collects output files so the manifest can list their checksums.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void write(const std::string& name, const std::string& content) {
        std::ofstream f(dir_ / name, std::ios::binary);
        f << content;
        if (!f) throw Error("io", "cannot write " + (dir_ / name).string());
        files_[name] = content;
    }

    const std::map<std::string, std::string>& files() const { return files_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::map<std::string, std::string> files_;
};

std::string json_lines(const std::vector<json>& rows) {
    std::string s;
    for (const json& r : rows) s += r.dump() + "\n";
    return s;
}

json run_coeff_table(const Scenario& sc, const Pipeline& p, Outputs& out) {
    const CoeffTableSpec t = sc.coeff_table.value_or(
        CoeffTableSpec{sc.singularities.box_lo, sc.singularities.box_hi, 21});
    const int d = sc.dim();
    std::string csv = axis_header("x", d) + "," + axis_header("b", d) + "," + axis_header("bt", d);
    for (int i = 1; i <= d; ++i) {
        for (int j = 1; j <= d; ++j) csv += ",a" + std::to_string(i) + std::to_string(j);
    }
    csv += "\n";
    long total = 1;
    for (int i = 0; i < d; ++i) total *= t.n;
    CoeffSample cs;
    for (long k = 0; k < total; ++k) {
        Vec x(d);
        long rem = k;
        for (int i = d - 1; i >= 0; --i) {
            const long idx = rem % t.n;
            rem /= t.n;
            const auto ui = static_cast<std::size_t>(i);
            x[i] = t.n == 1 ? t.lo[ui] : t.lo[ui] + (t.hi[ui] - t.lo[ui]) * static_cast<double>(idx) / (t.n - 1);
        }
        p.field.evaluate(x, cs);
        csv += csv_vec(x) + "," + csv_vec(cs.b) + "," + csv_vec(cs.bt);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) csv += "," + csv_num(cs.a(i, j));
        }
        csv += "\n";
    }
    out.write("coeff_table.csv", csv);
    return {{"rows", total}, {"file", "coeff_table.csv"}};
}

json run_classify(const Scenario& sc, const Pipeline& p, Outputs& out) {
    const ClassifySpec t = sc.classify.value_or(ClassifySpec{});
    std::vector<json> rows;
    if (sc.dim() == 1) {
        std::vector<double> pts;
        for (const Vec& g : p.gamma.points) pts.push_back(g[0]);
        std::sort(pts.begin(), pts.end());
        if (pts.size() < 2) {
            throw UnboundedIntervalError("classify in d = 1 needs two singularities bounding an interval");
        }
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const double mid = 0.5 * (pts[i] + pts[i + 1]);
            Dim1Verdict v = classify_dim1(p.model, p.kernel, p.gamma, mid);
            const ScaleVerdicts sv = scale_functions(p.field, v.c, v.c_prime, mid, t.eps);
            json j = {{"c", v.c},
                      {"c_prime", v.c_prime},
                      {"alpha", num(v.alpha)},
                      {"beta", num(v.beta)},
                      {"alpha_alt", num(v.alpha_alt)},
                      {"beta_alt", num(v.beta_alt)},
                      {"case", to_string(v.kase)}};
            j["scale"] = {{"eps", t.eps},
                          {"p_left", to_string(sv.p_left)},
                          {"p_right", to_string(sv.p_right)},
                          {"v_left", to_string(sv.v_left)},
                          {"v_right", to_string(sv.v_right)},
                          {"p_exponent_left", num(sv.p_exponent_left)},
                          {"p_exponent_right", num(sv.p_exponent_right)},
                          {"v_exponent_left", num(sv.v_exponent_left)},
                          {"v_exponent_right", num(sv.v_exponent_right)}};
            rows.push_back(j);
        }
    } else {
        for (const Vec& y : p.gamma.points) {
            const DimDVerdict v = classify_dimd(p.model, p.kernel, y, t.radius, t.samples, sc.seed);
            rows.push_back({{"y", to_json(v.y)},
                            {"verdict", to_string(v.verdict)},
                            {"a_upper", num(v.a_upper)},
                            {"a_lower", num(v.a_lower)},
                            {"bt_upper", num(v.bt_upper)},
                            {"bt_lower", num(v.bt_lower)},
                            {"criterion_a", num(v.criterion_a)},
                            {"criterion_b", num(v.criterion_b)},
                            {"eig_min", num(v.eig_min)},
                            {"eig_max", num(v.eig_max)},
                            {"d_invertible", v.d_invertible},
                            {"d_matrix", to_json(v.d_matrix)},
                            {"a_upper_bound", num(v.a_upper_bound)},
                            {"a_lower_bound", num(v.a_lower_bound)},
                            {"bt_envelope", num(v.bt_envelope)},
                            {"samples", v.samples}});
        }
    }
    out.write("classify.jsonl", json_lines(rows));
    return {{"verdicts", rows}};
}

json run_simulate(const Scenario& sc, const Pipeline& p, const RunOptions& opts, Outputs& out) {
    if (!sc.sim) throw ConfigError("simulate needs a 'sim' block", 0, "sim");
    const SimSpec& t = *sc.sim;
    SimConfig cfg;
    cfg.eps = t.eps;
    cfg.dt = t.dt;
    cfg.t_max = t.t_max;
    cfg.absorb_tube = t.absorb_tube;
    cfg.seed = sc.seed;
    cfg.stride = opts.stride.value_or(t.stride);
    const Vec x0 = to_vec(t.x0);
    const int d = sc.dim();

    const Trajectory tr = simulate(p.field, x0, cfg, {});
    std::string csv = "t," + axis_header("x", d) + ",absorbed\n";
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const bool absorbed = tr.absorbed_at && tr.times[i] >= *tr.absorbed_at;
        csv += csv_num(tr.times[i]) + "," + csv_vec(tr.points[i]) + "," + (absorbed ? "1" : "0") + "\n";
    }
    out.write("trajectory.csv", csv);

    SimConfig bcfg = cfg;
    bcfg.store_path = false;
    const BatchResult batch = simulate_batch(p.field, x0, bcfg, {}, t.n_paths, opts.workers, false);
    std::vector<json> rows;
    int absorbed = 0;
    for (const TrajectorySummary& s : batch.paths) {
        if (s.absorbed_at) ++absorbed;
        rows.push_back({{"path_index", s.path_index},
                        {"t_end", s.t_end},
                        {"terminal", to_json(s.terminal)},
                        {"absorbed_at", s.absorbed_at ? json(*s.absorbed_at) : json(nullptr)}});
    }
    out.write("summaries.jsonl", json_lines(rows));
    return {{"n_paths", t.n_paths},
            {"n_absorbed", absorbed},
            {"path0_absorbed_at", tr.absorbed_at ? json(*tr.absorbed_at) : json(nullptr)},
            {"path0_points", tr.times.size()}};
}

QuasiPotentialOptions qp_options(const Scenario& sc) {
    QuasiPotentialOptions o;
    if (const auto& q = sc.quasipotential) {
        o.n_nodes = q->n_nodes;
        o.t_grid = q->t_grid;
        o.max_iters = q->max_iters;
        o.tol = q->tol;
        o.origin_rho = q->origin_rho;
    }
    return o;
}

json run_quasipotential(const Scenario& sc, const Pipeline& p, Outputs& out) {
    if (!sc.quasipotential) throw ConfigError("quasipotential needs a 'quasipotential' block", 0, "quasipotential");
    const QuasiPotentialResult r =
        quasipotential(p.field, to_vec(sc.quasipotential->y), to_vec(sc.quasipotential->z), qp_options(sc));
    std::string csv = "t," + axis_header("x", sc.dim()) + "\n";
    for (std::size_t i = 0; i < r.path.times.size(); ++i) {
        csv += csv_num(r.path.times[i]) + "," + csv_vec(r.path.points[i]) + "\n";
    }
    out.write("path.csv", csv);
    const json j = {{"value", num(r.value)},
                    {"t_star", r.t_star},
                    {"connector_cost_bound", num(r.connector_cost_bound)},
                    {"path_action", num(r.path_action)},
                    {"quadrature_error", num(r.quadrature_error)},
                    {"converged", r.converged},
                    {"iterations", r.iterations},
                    {"y", to_json(r.start)},
                    {"z", to_json(r.end)}};
    out.write("quasipotential.json", j.dump(2) + "\n");
    return j;
}

Domain make_domain(const Scenario& sc) {
    if (!sc.domain) throw ConfigError("this command needs a 'domain' block", 0, "domain");
    const DomainSpec& t = *sc.domain;
    if (t.kind == "interval") return Domain::interval(t.lo, t.hi);
    if (t.kind == "polygon") {
        std::vector<Vec> v;
        for (const auto& row : t.vertices) v.push_back(to_vec(row));
        return Domain::polygon(std::move(v));
    }
    return Domain::ball(to_vec(t.center), t.radius);
}

ExitCostResult solve_exit_cost(const Scenario& sc, const Pipeline& p, const Domain& dom, int workers) {
    ExitCostOptions o;
    o.n_boundary = sc.exit_cost ? sc.exit_cost->n_boundary : ExitCostSpec{}.n_boundary;
    o.qp = qp_options(sc);
    o.workers = workers;
    return exit_cost(p.field, dom, o);
}

json run_exit_cost(const Scenario& sc, const Pipeline& p, const RunOptions& opts, Outputs& out) {
    const Domain dom = make_domain(sc);
    const ExitCostResult r = solve_exit_cost(sc, p, dom, opts.workers);
    std::string csv = axis_header("bx", sc.dim()) + ",V\n";
    bool all_converged = true;
    for (const BoundaryPoint& b : r.boundary_profile) {
        csv += csv_vec(b.point) + "," + csv_num(b.v) + "\n";
        all_converged = all_converged && b.converged;
    }
    out.write("boundary_profile.csv", csv);
    const json j = {{"v_bar", num(r.v_bar)},
                    {"z_star", to_json(r.z_star)},
                    {"singularity", to_json(r.singularity)},
                    {"attracting_ok", r.attracting_ok},
                    {"all_converged", all_converged},
                    {"n_boundary", r.boundary_profile.size()}};
    out.write("exit_cost.json", j.dump(2) + "\n");
    return j;
}

json run_exit_experiment(const Scenario& sc, const Pipeline& p, const RunOptions& opts, Outputs& out) {
    if (!sc.exit) throw ConfigError("exit-experiment needs an 'exit' block", 0, "exit");
    const ExitSpec& t = *sc.exit;
    const Domain dom = make_domain(sc);
    const Vec x0 = to_vec(t.x0);
    if (!dom.contains(x0)) throw PreconditionError("exit.x0 must lie strictly inside the domain");

    double v_bar = 0.0;
    Vec z_star;
    if (t.v_bar && t.z_star) {
        v_bar = *t.v_bar;
        z_star = to_vec(*t.z_star);
    } else {
        const ExitCostResult ec = solve_exit_cost(sc, p, dom, opts.workers);
        v_bar = t.v_bar.value_or(ec.v_bar);
        z_star = t.z_star ? to_vec(*t.z_star) : ec.z_star;
    }

    SimConfig cfg;
    cfg.dt = t.dt;
    cfg.absorb_tube = t.absorb_tube;
    cfg.seed = sc.seed;
    ExitExperimentOptions eo;
    eo.t_max_cap = t.t_max_cap;
    eo.near_radius = t.near_radius;
    eo.workers = opts.workers;
    const ExitExperimentResult r = run_exit_experiment(p.field, dom, x0, t.eps_values, t.n_paths, cfg, v_bar,
                                                       z_star, t.delta_frac * v_bar, eo);

    const int d = sc.dim();
    std::string csv = "eps,seed_index,t_exit," + axis_header("bx", d) + ",censored\n";
    std::vector<json> rows;
    for (const EpsExitResult& e : r.per_eps) {
        for (std::size_t i = 0; i < e.exit_times.size(); ++i) {
            csv += csv_num(e.eps) + "," + std::to_string(i) + "," + csv_num(e.exit_times[i]) + "," +
                   csv_vec(e.exit_points[i]) + "," + (e.censored[i] ? "1" : "0") + "\n";
        }
        rows.push_back({{"eps", e.eps},
                        {"n_paths", e.n_paths},
                        {"t_max", e.t_max},
                        {"n_censored", e.n_censored},
                        {"n_absorbed", e.n_absorbed},
                        {"all_censored", e.all_censored},
                        {"threshold", num(e.threshold)},
                        {"frac_exceeding_threshold", e.frac_exceeding_threshold},
                        {"eps_log_median", num(e.eps_log_median)},
                        {"eps_log_median_se", num(e.eps_log_median_se)},
                        {"frac_near_z_star", num(e.frac_near_z_star)},
                        {"v_bar", v_bar},
                        {"z_star", to_json(z_star)},
                        {"delta", r.delta},
                        {"near_radius", r.near_radius}});
    }
    out.write("exit_points.csv", csv);
    out.write("exit_summary.jsonl", json_lines(rows));
    return {{"v_bar", v_bar}, {"z_star", to_json(z_star)}, {"per_eps", rows}};
}

}  // namespace

Pipeline build_pipeline(const Scenario& s) {
    FitnessModel model = s.model.name == "quad1d"   ? quad1d()
                         : s.model.name == "band1d" ? band1d(s.model.kappa)
                                                    : radial2d();
    const int d = model.dim();
    MutationKernel kernel = MutationKernel::gaussian_isotropic(d, s.kernel.s);
    if (s.kernel.name == "gaussian_full") {
        Mat k(d, d);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                k(i, j) = s.kernel.covariance[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            }
        }
        kernel = MutationKernel::gaussian_full(k);
    }
    const Box box{to_vec(s.singularities.box_lo), to_vec(s.singularities.box_hi)};
    SingularitySet gamma = find_singularities(model, box, s.singularities.grid);
    Backend backend = s.backend.kind == "quadrature" ? Backend::quad(s.backend.tol) : Backend::closed_form();
    backend.gh_points = s.backend.gh_points;
    CoefficientField field = build_field(model, kernel, gamma, backend);
    return {std::move(model), std::move(kernel), std::move(gamma), std::move(field)};
}

namespace {

int report(std::ostream& err) {
    try {
        throw;
    } catch (const ConfigError& e) {
        err << json{{"error", e.kind()}, {"message", e.what()}, {"line", e.line}, {"key", e.key}}.dump() << "\n";
        return exit_code_for(e.kind());
    } catch (const Error& e) {
        err << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
        return exit_code_for("internal");
    }
}

}  // namespace

int run_command(const std::string& cmd, const std::string& scenario_path, const RunOptions& opts,
                std::ostream& out, std::ostream& err) {
    Scenario sc;
    try {
        sc = load_scenario(scenario_path);
    } catch (...) {
        return report(err);
    }
    return dispatch(cmd, std::move(sc), opts, out, err);
}

int dispatch(const std::string& cmd, Scenario sc, const RunOptions& opts, std::ostream& out,
             std::ostream& err) {
    const auto started = std::chrono::steady_clock::now();
    auto manifest_for = [&](const json& outputs) {
        const std::string canonical = serialize_scenario(sc);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return json{{"command", cmd},
                    {"artifact_version", kArtifactVersion},
                    {"scenario_sha256", sha256_hex(canonical)},
                    {"scenario", canonical},
                    {"defaults_applied", sc.defaults_applied},
                    {"seed", sc.seed},
                    {"workers", opts.workers},
                    {"wall_time_s", wall},
                    {"outputs", outputs}};
    };
    if (opts.seed) sc.seed = *opts.seed;
    if (opts.out_dir) sc.output_dir = *opts.out_dir;
    try {
        if (std::find(subcommands().begin(), subcommands().end(), cmd) == subcommands().end()) {
            throw ConfigError("unknown subcommand '" + cmd + "'", 0, "");
        }
        if (opts.workers < 1) throw PreconditionError("workers must be >= 1");

        const Pipeline p = build_pipeline(sc);
        Outputs files(sc.output_dir);
        json result;
        if (cmd == "coeff-table") result = run_coeff_table(sc, p, files);
        if (cmd == "classify") result = run_classify(sc, p, files);
        if (cmd == "simulate") result = run_simulate(sc, p, opts, files);
        if (cmd == "quasipotential") result = run_quasipotential(sc, p, files);
        if (cmd == "exit-cost") result = run_exit_cost(sc, p, opts, files);
        if (cmd == "exit-experiment") result = run_exit_experiment(sc, p, opts, files);

        json outputs = json::array();
        for (const auto& [name, content] : files.files()) {
            outputs.push_back({{"file", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
        }
        json manifest = manifest_for(outputs);
        manifest["status"] = "ok";
        std::ofstream(files.dir() / "manifest.json") << manifest.dump(2) << "\n";
        out << json{{"command", cmd}, {"output_dir", sc.output_dir}, {"result", result}}.dump() << "\n";
        return 0;
    } catch (...) {
        std::ostringstream detail;
        const int code = report(detail);
        err << detail.str();
        // failed runs still leave a manifest when the output directory is usable
        std::error_code ec;
        fs::create_directories(sc.output_dir, ec);
        if (!ec) {
            json manifest = manifest_for(json::array());
            manifest["status"] = "error";
            manifest["error"] = json::parse(detail.str());
            std::ofstream(fs::path(sc.output_dir) / "manifest.json") << manifest.dump(2) << "\n";
        }
        return code;
    }
}

}  // namespace punctual
