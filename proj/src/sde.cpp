#include "punctual/sde.hpp"

#include "punctual/error.hpp"
#include "punctual/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace punctual {

void SimConfig::validate() const {
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw PreconditionError("eps must be >= 0");
    if (!(dt > 0.0)) throw PreconditionError("dt must be > 0");
    if (!(t_max > 0.0)) throw PreconditionError("t_max must be > 0");
    if (dt > t_max) throw PreconditionError("dt must not exceed t_max");
    if (!(absorb_tube > kGammaResidualTol)) {
        throw PreconditionError("absorb_tube must exceed the singularity residual tolerance 1e-8");
    }
    if (stride < 1) throw PreconditionError("stride must be >= 1");
}

StopRule StopRule::sphere_exit(std::string label, Vec center, double radius, bool terminal) {
    return {std::move(label),
            [c = std::move(center), radius](const Vec& x) { return (x - c).norm() - radius; }, terminal};
}

StopRule StopRule::sphere_entry(std::string label, Vec center, double radius, bool terminal) {
    return {std::move(label),
            [c = std::move(center), radius](const Vec& x) { return radius - (x - c).norm(); }, terminal};
}

Trajectory simulate(const CoefficientField& field, const Vec& x0, const SimConfig& cfg,
                    const std::vector<StopRule>& stops) {
    cfg.validate();
    const int d = field.dim();
    if (x0.size() != d) throw DimensionMismatch("x0 dimension differs from the field");
    if (!x0.allFinite()) throw PreconditionError("x0 must be finite");

    Trajectory tr;
    tr.stride = cfg.stride;
    tr.path_index = cfg.path_index;
    const auto n_steps = static_cast<std::int64_t>(std::ceil(cfg.t_max / cfg.dt - 1e-9));
    auto time_at = [&](std::int64_t n) { return std::min(cfg.t_max, static_cast<double>(n) * cfg.dt); };

    Vec x = x0;
    auto push = [&](double t, const Vec& p) {
        if (!cfg.store_path && !tr.times.empty()) {
            tr.times.back() = t;
            tr.points.back() = p;
            return;
        }
        tr.times.push_back(t);
        tr.points.push_back(p);
    };
    push(0.0, x);

    if (field.gamma().distance(x) <= cfg.absorb_tube) {
        tr.absorbed_at = 0.0;
        push(cfg.t_max, x);
        return tr;
    }

    std::vector<double> levels(stops.size());
    std::vector<char> fired(stops.size(), 0);
    for (std::size_t r = 0; r < stops.size(); ++r) levels[r] = stops[r].level(x);

    RandomStream rng(cfg.seed, cfg.path_index);
    CoeffSample cs;
    Vec xi(d);
    Vec next(d);
    const double sqrt_eps_dt = std::sqrt(cfg.eps * cfg.dt);
    for (std::int64_t n = 0; n < n_steps; ++n) {
        const double t = time_at(n);
        const double h = time_at(n + 1) - t;
        try {
            field.evaluate(x, cs);
        } catch (const ModelEvaluationError& e) {
            throw ModelEvaluationError(std::string(e.what()) + " (step " + std::to_string(n) + ")");
        }
        for (int i = 0; i < d; ++i) xi[i] = rng.normal();
        const double noise_scale = h == cfg.dt ? sqrt_eps_dt : std::sqrt(cfg.eps * h);
        next = x + (cs.b + cfg.eps * cs.bt) * h + noise_scale * (cs.sigma * xi);
        if (!next.allFinite()) {
            throw NumericalBlowup("non-finite state at step " + std::to_string(n));
        }
        ++tr.steps;

        bool stop = false;
        for (std::size_t r = 0; r < stops.size(); ++r) {
            const double lv = stops[r].level(next);
            if (!fired[r] && levels[r] < 0.0 && lv >= 0.0) {
                const double theta = levels[r] / (levels[r] - lv);
                ExitEvent ev{t + theta * h, stops[r].label, x + theta * (next - x)};
                fired[r] = 1;
                if (stops[r].terminal) {
                    stop = true;
                    push(ev.time, ev.point);
                    tr.exit_events.push_back(std::move(ev));
                    break;
                }
                tr.exit_events.push_back(std::move(ev));
            }
            levels[r] = lv;
        }
        if (stop) return tr;

        x = next;
        if (field.gamma().distance(x) <= cfg.absorb_tube) {
            tr.absorbed_at = t + h;
            push(t + h, x);
            if (t + h < cfg.t_max) push(cfg.t_max, x);
            return tr;
        }
        if ((n + 1) % cfg.stride == 0 || n + 1 == n_steps) push(t + h, x);
    }
    if (tr.times.back() != cfg.t_max) push(cfg.t_max, x);
    return tr;
}

const ExitEvent* TrajectorySummary::event(const std::string& label) const {
    for (const ExitEvent& e : exit_events) {
        if (e.label == label) return &e;
    }
    return nullptr;
}

int default_workers() {
    if (const char* env = std::getenv("PUNCTUAL_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

BatchResult simulate_batch(const CoefficientField& field, const Vec& x0, const SimConfig& cfg,
                           const std::vector<StopRule>& stops, int n_paths, int workers,
                           bool keep_paths) {
    if (n_paths < 1) throw PreconditionError("n_paths must be >= 1");
    cfg.validate();
    BatchResult out;
    for (const StopRule& r : stops) out.labels.push_back(r.label);
    out.paths.resize(static_cast<std::size_t>(n_paths));
    parallel_for(n_paths, workers, [&](int i) {
        SimConfig c = cfg;
        c.path_index = static_cast<std::uint64_t>(i);
        c.store_path = keep_paths && cfg.store_path;
        Trajectory tr = simulate(field, x0, c, stops);
        TrajectorySummary& s = out.paths[static_cast<std::size_t>(i)];
        s.path_index = c.path_index;
        s.terminal = tr.points.back();
        s.t_end = tr.times.back();
        s.absorbed_at = tr.absorbed_at;
        s.exit_events = tr.exit_events;
        if (keep_paths) s.path = std::move(tr);
    });
    return out;
}

double sorted_quantile(const std::vector<double>& sorted, double prob) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = prob * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

HittingStats hitting_time_stats(const BatchResult& batch, const std::string& label,
                                const std::vector<double>& probs) {
    if (std::find(batch.labels.begin(), batch.labels.end(), label) == batch.labels.end()) {
        throw UnknownLabel("no stop rule labelled '" + label + "' in the batch");
    }
    std::vector<double> times;
    for (const TrajectorySummary& s : batch.paths) {
        if (const ExitEvent* e = s.event(label)) times.push_back(e->time);
    }
    std::sort(times.begin(), times.end());
    HittingStats st;
    st.count = static_cast<int>(times.size());
    st.censored = static_cast<int>(batch.paths.size()) - st.count;
    st.probs = probs;
    st.quantiles_defined = !times.empty();
    for (double p : probs) st.quantiles.push_back(sorted_quantile(times, p));
    if (!times.empty()) {
        double acc = 0.0;
        for (double t : times) acc += std::log(t);
        st.mean_of_logs = acc / static_cast<double>(times.size());
    } else {
        st.mean_of_logs = std::numeric_limits<double>::quiet_NaN();
    }
    return st;
}

}  // namespace punctual
