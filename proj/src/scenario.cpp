#include "punctual/scenario.hpp"

#include "punctual/error.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace punctual {

int Scenario::dim() const {
    if (model.name == "radial2d") return 2;
    return 1;
}

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

// One map node with its dotted prefix; records every key read so that
// leftovers can be rejected.
class Section {
public:
    Section(YAML::Node node, std::string prefix, Scenario& sc)
        : node_(std::move(node)), prefix_(std::move(prefix)), sc_(sc) {
        if (!node_.IsMap()) {
            throw ConfigError("'" + prefix_ + "' must be a map", line_of(node_), prefix_);
        }
    }

    std::string key(const std::string& k) const { return prefix_.empty() ? k : prefix_ + "." + k; }

    bool has(const std::string& k) const { return static_cast<bool>(node_[k]); }

    template <class T>
    void get(const std::string& k, T& out, bool required = false) {
        seen_.insert(k);
        const YAML::Node v = node_[k];
        if (!v) {
            if (required) throw ConfigError("missing required field '" + key(k) + "'", line_of(node_), key(k));
            sc_.defaults_applied.push_back(key(k));
            return;
        }
        out = convert<T>(v, key(k));
    }

    template <class T>
    void get_optional(const std::string& k, std::optional<T>& out) {
        seen_.insert(k);
        const YAML::Node v = node_[k];
        if (v) out = convert<T>(v, key(k));
    }

    std::optional<Section> sub(const std::string& k) {
        seen_.insert(k);
        const YAML::Node v = node_[k];
        if (!v) return std::nullopt;
        return Section(v, key(k), sc_);
    }

    void finish() const {
        for (const auto& kv : node_) {
            const std::string k = kv.first.as<std::string>();
            if (!seen_.count(k)) throw ConfigError("unknown key '" + key(k) + "'", line_of(kv.first), key(k));
        }
    }

    int line(const std::string& k) const { return node_[k] ? line_of(node_[k]) : line_of(node_); }

private:
    template <class T>
    static T convert(const YAML::Node& v, const std::string& where) {
        auto fail = [&](const char* what) -> ConfigError {
            return ConfigError("type mismatch for '" + where + "': expected " + what, line_of(v), where);
        };
        if constexpr (std::is_same_v<T, std::string>) {
            if (!v.IsScalar()) throw fail("a string");
            return v.as<std::string>();
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            if (!v.IsSequence()) throw fail("a list of numbers");
            std::vector<double> out;
            for (const auto& e : v) out.push_back(convert<double>(e, where));
            return out;
        } else if constexpr (std::is_same_v<T, std::vector<std::vector<double>>>) {
            if (!v.IsSequence()) throw fail("a list of number lists");
            std::vector<std::vector<double>> out;
            for (const auto& e : v) out.push_back(convert<std::vector<double>>(e, where));
            return out;
        } else {
            if (!v.IsScalar()) throw fail(std::is_integral_v<T> ? "an integer" : "a number");
            const std::string raw = v.Scalar();
            if constexpr (std::is_unsigned_v<T>) {
                if (!raw.empty() && raw[0] == '-') throw fail("a non-negative integer");
            }
            try {
                return v.as<T>();
            } catch (const YAML::Exception&) {
                throw fail(std::is_integral_v<T> ? "an integer" : "a number");
            }
        }
    }

    YAML::Node node_;
    std::string prefix_;
    Scenario& sc_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& msg, const Section& sec, const std::string& k) {
    if (!ok) throw ConfigError(msg, sec.line(k), sec.key(k));
}

void require_dim(const std::vector<double>& v, int d, const Section& sec, const std::string& k) {
    require(static_cast<int>(v.size()) == d,
            "'" + sec.key(k) + "' must have " + std::to_string(d) + " entries", sec, k);
}

void fill_vec(std::vector<double>& v, int d, double value, Scenario& sc, const std::string& k) {
    if (v.empty()) {
        v.assign(static_cast<std::size_t>(d), value);
        sc.defaults_applied.push_back(k);
    }
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("syntax error: " + e.msg, e.mark.line + 1, "");
    }
    if (!root || root.IsNull()) throw ConfigError("empty scenario", 0, "");
    Scenario sc;
    Section top(root, "", sc);
    top.get("seed", sc.seed);
    top.get("output_dir", sc.output_dir);

    auto model = top.sub("model");
    if (!model) throw ConfigError("missing required field 'model'", 0, "model");
    model->get("name", sc.model.name, true);
    require(sc.model.name == "quad1d" || sc.model.name == "band1d" || sc.model.name == "radial2d",
            "unknown model '" + sc.model.name + "' (quad1d, band1d, radial2d)", *model, "name");
    if (sc.model.name == "band1d") {
        model->get("kappa", sc.model.kappa);
    } else {
        require(!model->has("kappa"), "'model.kappa' only applies to band1d", *model, "kappa");
    }
    model->finish();
    const int d = sc.dim();

    if (auto k = top.sub("kernel")) {
        k->get("name", sc.kernel.name);
        if (sc.kernel.name == "gaussian_isotropic") {
            k->get("s", sc.kernel.s);
            require(sc.kernel.s > 0.0, "'kernel.s' must be positive", *k, "s");
            require(!k->has("covariance"), "'kernel.covariance' needs name gaussian_full", *k, "covariance");
        } else if (sc.kernel.name == "gaussian_full") {
            k->get("covariance", sc.kernel.covariance, true);
            require(!k->has("s"), "'kernel.s' applies to gaussian_isotropic only", *k, "s");
            bool ok = static_cast<int>(sc.kernel.covariance.size()) == d;
            for (const auto& row : sc.kernel.covariance) ok = ok && static_cast<int>(row.size()) == d;
            require(ok, "'kernel.covariance' must be " + std::to_string(d) + "x" + std::to_string(d), *k,
                    "covariance");
        } else {
            require(false, "unknown kernel '" + sc.kernel.name + "' (gaussian_isotropic, gaussian_full)", *k,
                    "name");
        }
        k->finish();
    } else {
        sc.defaults_applied.push_back("kernel");
    }

    if (auto b = top.sub("backend")) {
        b->get("kind", sc.backend.kind);
        require(sc.backend.kind == "closed_form" || sc.backend.kind == "quadrature",
                "unknown backend '" + sc.backend.kind + "' (closed_form, quadrature)", *b, "kind");
        b->get("tol", sc.backend.tol);
        require(sc.backend.tol > 0.0, "'backend.tol' must be positive", *b, "tol");
        b->get("gh_points", sc.backend.gh_points);
        require(sc.backend.gh_points >= 2, "'backend.gh_points' must be >= 2", *b, "gh_points");
        b->finish();
    } else {
        sc.defaults_applied.push_back("backend");
    }

    if (auto s = top.sub("singularities")) {
        s->get("box_lo", sc.singularities.box_lo);
        s->get("box_hi", sc.singularities.box_hi);
        s->get("grid", sc.singularities.grid);
        if (!sc.singularities.box_lo.empty()) require_dim(sc.singularities.box_lo, d, *s, "box_lo");
        if (!sc.singularities.box_hi.empty()) require_dim(sc.singularities.box_hi, d, *s, "box_hi");
        require(sc.singularities.grid >= 1, "'singularities.grid' must be >= 1", *s, "grid");
        s->finish();
    }
    fill_vec(sc.singularities.box_lo, d, -2.0, sc, "singularities.box_lo");
    fill_vec(sc.singularities.box_hi, d, 2.0, sc, "singularities.box_hi");

    if (auto c = top.sub("coeff_table")) {
        CoeffTableSpec t;
        c->get("lo", t.lo);
        c->get("hi", t.hi);
        c->get("n", t.n);
        if (!t.lo.empty()) require_dim(t.lo, d, *c, "lo");
        if (!t.hi.empty()) require_dim(t.hi, d, *c, "hi");
        require(t.n >= 1, "'coeff_table.n' must be >= 1", *c, "n");
        c->finish();
        if (t.lo.empty()) {
            t.lo = sc.singularities.box_lo;
            sc.defaults_applied.push_back("coeff_table.lo");
        }
        if (t.hi.empty()) {
            t.hi = sc.singularities.box_hi;
            sc.defaults_applied.push_back("coeff_table.hi");
        }
        sc.coeff_table = t;
    }

    if (auto c = top.sub("classify")) {
        ClassifySpec t;
        c->get("eps", t.eps);
        c->get("radius", t.radius);
        c->get("samples", t.samples);
        require(t.eps > 0.0, "'classify.eps' must be positive", *c, "eps");
        require(t.radius > 0.0, "'classify.radius' must be positive", *c, "radius");
        require(t.samples >= 2, "'classify.samples' must be >= 2", *c, "samples");
        c->finish();
        sc.classify = t;
    }

    if (auto c = top.sub("sim")) {
        SimSpec t;
        c->get("x0", t.x0, true);
        require_dim(t.x0, d, *c, "x0");
        c->get("eps", t.eps);
        c->get("dt", t.dt);
        c->get("t_max", t.t_max);
        c->get("absorb_tube", t.absorb_tube);
        c->get("n_paths", t.n_paths);
        c->get("stride", t.stride);
        require(t.n_paths >= 1, "'sim.n_paths' must be >= 1", *c, "n_paths");
        c->finish();
        sc.sim = t;
    }

    if (auto c = top.sub("quasipotential")) {
        QuasiPotentialSpec t;
        c->get("y", t.y);
        c->get("z", t.z, true);
        if (t.y.empty()) {
            t.y.assign(static_cast<std::size_t>(d), 0.0);
        }
        require_dim(t.y, d, *c, "y");
        require_dim(t.z, d, *c, "z");
        c->get("n_nodes", t.n_nodes);
        c->get("t_grid", t.t_grid);
        c->get("max_iters", t.max_iters);
        c->get("tol", t.tol);
        c->get("origin_rho", t.origin_rho);
        require(t.n_nodes >= 3, "'quasipotential.n_nodes' must be >= 3", *c, "n_nodes");
        require(!t.t_grid.empty(), "'quasipotential.t_grid' must not be empty", *c, "t_grid");
        c->finish();
        sc.quasipotential = t;
    }

    if (auto c = top.sub("domain")) {
        DomainSpec t;
        c->get("kind", t.kind);
        if (t.kind == "ball") {
            c->get("center", t.center);
            c->get("radius", t.radius);
            if (t.center.empty()) {
                t.center.assign(static_cast<std::size_t>(d), 0.0);
            }
            require_dim(t.center, d, *c, "center");
            require(t.radius > 0.0, "'domain.radius' must be positive", *c, "radius");
        } else if (t.kind == "interval") {
            require(d == 1, "interval domains need a 1-d model", *c, "kind");
            c->get("lo", t.lo, true);
            c->get("hi", t.hi, true);
            require(t.hi > t.lo, "'domain.hi' must exceed 'domain.lo'", *c, "hi");
        } else if (t.kind == "polygon") {
            require(d == 2, "polygon domains need a 2-d model", *c, "kind");
            c->get("vertices", t.vertices, true);
            require(t.vertices.size() >= 3, "'domain.vertices' needs at least 3 points", *c, "vertices");
            for (const auto& v : t.vertices) require_dim(v, 2, *c, "vertices");
        } else {
            require(false, "unknown domain kind '" + t.kind + "' (ball, interval, polygon)", *c, "kind");
        }
        c->finish();
        sc.domain = t;
    }

    if (auto c = top.sub("exit_cost")) {
        ExitCostSpec t;
        c->get("n_boundary", t.n_boundary);
        require(t.n_boundary >= 1, "'exit_cost.n_boundary' must be >= 1", *c, "n_boundary");
        c->finish();
        sc.exit_cost = t;
    }

    if (auto c = top.sub("exit")) {
        ExitSpec t;
        c->get("x0", t.x0, true);
        require_dim(t.x0, d, *c, "x0");
        c->get("eps_values", t.eps_values, true);
        require(!t.eps_values.empty(), "'exit.eps_values' must not be empty", *c, "eps_values");
        c->get("n_paths", t.n_paths);
        c->get("dt", t.dt);
        c->get("absorb_tube", t.absorb_tube);
        c->get_optional("v_bar", t.v_bar);
        c->get_optional("z_star", t.z_star);
        if (t.z_star) require_dim(*t.z_star, d, *c, "z_star");
        c->get("delta_frac", t.delta_frac);
        c->get("t_max_cap", t.t_max_cap);
        c->get("near_radius", t.near_radius);
        require(t.n_paths >= 1, "'exit.n_paths' must be >= 1", *c, "n_paths");
        c->finish();
        sc.exit = t;
    }
    top.finish();
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read scenario file '" + path + "'", 0, "");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

namespace {

std::string num(double x) { return fmt::format("{}", x); }

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
    return s + "]";
}

std::string list2(const std::vector<std::vector<double>>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + list(v[i]);
    return s + "]";
}

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
    std::string o;
    auto kv = [&o](const std::string& k, const std::string& v) { o += "  " + k + ": " + v + "\n"; };
    o += "seed: " + std::to_string(s.seed) + "\n";
    o += "output_dir: " + quoted(s.output_dir) + "\n";
    o += "model:\n";
    kv("name", quoted(s.model.name));
    if (s.model.name == "band1d") kv("kappa", num(s.model.kappa));
    o += "kernel:\n";
    kv("name", quoted(s.kernel.name));
    if (s.kernel.name == "gaussian_full") {
        kv("covariance", list2(s.kernel.covariance));
    } else {
        kv("s", num(s.kernel.s));
    }
    o += "backend:\n";
    kv("kind", quoted(s.backend.kind));
    kv("tol", num(s.backend.tol));
    kv("gh_points", std::to_string(s.backend.gh_points));
    o += "singularities:\n";
    kv("box_lo", list(s.singularities.box_lo));
    kv("box_hi", list(s.singularities.box_hi));
    kv("grid", std::to_string(s.singularities.grid));
    if (const auto& t = s.coeff_table) {
        o += "coeff_table:\n";
        kv("lo", list(t->lo));
        kv("hi", list(t->hi));
        kv("n", std::to_string(t->n));
    }
    if (const auto& t = s.classify) {
        o += "classify:\n";
        kv("eps", num(t->eps));
        kv("radius", num(t->radius));
        kv("samples", std::to_string(t->samples));
    }
    if (const auto& t = s.sim) {
        o += "sim:\n";
        kv("x0", list(t->x0));
        kv("eps", num(t->eps));
        kv("dt", num(t->dt));
        kv("t_max", num(t->t_max));
        kv("absorb_tube", num(t->absorb_tube));
        kv("n_paths", std::to_string(t->n_paths));
        kv("stride", std::to_string(t->stride));
    }
    if (const auto& t = s.quasipotential) {
        o += "quasipotential:\n";
        kv("y", list(t->y));
        kv("z", list(t->z));
        kv("n_nodes", std::to_string(t->n_nodes));
        kv("t_grid", list(t->t_grid));
        kv("max_iters", std::to_string(t->max_iters));
        kv("tol", num(t->tol));
        kv("origin_rho", num(t->origin_rho));
    }
    if (const auto& t = s.domain) {
        o += "domain:\n";
        kv("kind", quoted(t->kind));
        if (t->kind == "ball") {
            kv("center", list(t->center));
            kv("radius", num(t->radius));
        } else if (t->kind == "interval") {
            kv("lo", num(t->lo));
            kv("hi", num(t->hi));
        } else {
            kv("vertices", list2(t->vertices));
        }
    }
    if (const auto& t = s.exit_cost) {
        o += "exit_cost:\n";
        kv("n_boundary", std::to_string(t->n_boundary));
    }
    if (const auto& t = s.exit) {
        o += "exit:\n";
        kv("x0", list(t->x0));
        kv("eps_values", list(t->eps_values));
        kv("n_paths", std::to_string(t->n_paths));
        kv("dt", num(t->dt));
        kv("absorb_tube", num(t->absorb_tube));
        if (t->v_bar) kv("v_bar", num(*t->v_bar));
        if (t->z_star) kv("z_star", list(*t->z_star));
        kv("delta_frac", num(t->delta_frac));
        kv("t_max_cap", num(t->t_max_cap));
        kv("near_radius", num(t->near_radius));
    }
    return o;
}

}  // namespace punctual
