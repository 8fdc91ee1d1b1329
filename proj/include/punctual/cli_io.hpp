#pragma once

#include "punctual/coeff.hpp"
#include "punctual/model.hpp"
#include "punctual/scenario.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace punctual {

inline constexpr const char* kArtifactVersion = "0.3.0";

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"coeff-table",    "classify",  "simulate",
                                                   "quasipotential", "exit-cost", "exit-experiment"};
    return names;
}

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    int workers = 1;
    std::optional<int> stride;  // simulate only
};

/// Exit codes: 0 ok, 2 bad scenario, 3 violated precondition, 4 other
/// library error, 5 anything else.
int exit_code_for(const std::string& error_kind);

/// Runs one subcommand, writes outputs and manifest.json into the output
/// directory and a short JSON result on `out`. Errors are reported as one
/// JSON object on `err`; the return value is the process exit code.
int dispatch(const std::string& cmd, Scenario scenario, const RunOptions& opts, std::ostream& out,
             std::ostream& err);

/// load_scenario + dispatch, with parse errors reported the same way.
int run_command(const std::string& cmd, const std::string& scenario_path, const RunOptions& opts,
                std::ostream& out, std::ostream& err);

/// Model, kernel, singularities and field described by a scenario.
struct Pipeline {
    FitnessModel model;
    MutationKernel kernel;
    SingularitySet gamma;
    CoefficientField field;
};
Pipeline build_pipeline(const Scenario& s);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace punctual
