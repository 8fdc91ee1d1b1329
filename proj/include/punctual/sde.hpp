#pragma once

#include "punctual/coeff.hpp"
#include "punctual/linalg.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace punctual {

struct SimConfig {
    double eps = 0.1;
    double dt = 1e-3;
    double t_max = 1.0;
    /// Distance to Gamma at or below which the path is absorbed and frozen.
    double absorb_tube = 1e-5;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    /// Keep every stride-th grid point (the initial and final points always).
    int stride = 1;
    bool store_path = true;

    void validate() const;
};

/// A stopping condition given by a level function: the rule fires at the
/// first step where the level goes from < 0 to >= 0, with the crossing time
/// and point linearly interpolated inside the step. Each rule fires once.
struct StopRule {
    std::string label;
    std::function<double(const Vec&)> level;
    bool terminal = true;

    /// Leaving the ball B(center, radius) (level |x - c| - r).
    static StopRule sphere_exit(std::string label, Vec center, double radius, bool terminal = true);
    /// Entering the ball B(center, radius) (level r - |x - c|).
    static StopRule sphere_entry(std::string label, Vec center, double radius, bool terminal = true);
};

struct ExitEvent {
    double time = 0.0;
    std::string label;
    Vec point;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> points;
    std::optional<double> absorbed_at;
    std::vector<ExitEvent> exit_events;
    int stride = 1;
    std::uint64_t path_index = 0;
    std::int64_t steps = 0;

    bool full_resolution() const { return stride == 1 && !times.empty(); }
    const Vec& terminal() const { return points.back(); }
};

/// Euler-Maruyama for dX = (b + eps bt) dt + sqrt(eps) sigma dW, stopped on
/// entering the Gamma tube (then frozen) or at a terminal stop rule.
/// Noise comes from the (cfg.seed, cfg.path_index) stream only.
Trajectory simulate(const CoefficientField& field, const Vec& x0, const SimConfig& cfg,
                    const std::vector<StopRule>& stops);

struct TrajectorySummary {
    std::uint64_t path_index = 0;
    Vec terminal;
    double t_end = 0.0;
    std::optional<double> absorbed_at;
    std::vector<ExitEvent> exit_events;
    /// Present when the batch keeps paths.
    std::optional<Trajectory> path;

    const ExitEvent* event(const std::string& label) const;
};

struct BatchResult {
    std::vector<std::string> labels;
    std::vector<TrajectorySummary> paths;
};

/// n_paths independent runs with path indices 0..n_paths-1 (cfg.path_index
/// is ignored). Output order and content do not depend on `workers`.
BatchResult simulate_batch(const CoefficientField& field, const Vec& x0, const SimConfig& cfg,
                           const std::vector<StopRule>& stops, int n_paths, int workers,
                           bool keep_paths = false);

struct HittingStats {
    int count = 0;
    int censored = 0;
    std::vector<double> probs;
    std::vector<double> quantiles;
    bool quantiles_defined = false;
    double mean_of_logs = 0.0;
};

/// Statistics of the labelled hitting time; paths without the event are
/// censored. Throws UnknownLabel if the batch did not register `label`.
HittingStats hitting_time_stats(const BatchResult& batch, const std::string& label,
                                const std::vector<double>& probs = {0.1, 0.25, 0.5, 0.75, 0.9});

/// Linear-interpolation sample quantile of sorted data (type 7).
double sorted_quantile(const std::vector<double>& sorted, double prob);

/// Default worker count: PUNCTUAL_WORKERS if set, else the hardware count.
int default_workers();

/// Runs fn(i) for i in [0, n) on `workers` threads. fn must only write to
/// slot i of its outputs.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace punctual
