#include "punctual/cli_io.hpp"
#include "punctual/sde.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

int main(int argc, char** argv) {
    using namespace punctual;
    CLI::App app{"punctual: singular adaptive-dynamics diffusions"};
    app.require_subcommand(1, 1);

    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> stride;
    int workers = default_workers();

    for (const std::string& name : subcommands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "overrides the scenario seed");
        sub->add_option("--workers", workers, "worker threads (default PUNCTUAL_WORKERS or all cores)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        if (name == "simulate") sub->add_option("--stride", stride, "keep every n-th trajectory point");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        // usage errors share the bad-scenario exit code
        std::cerr << "{\"error\":\"usage\",\"message\":" << std::quoted(e.what()) << "}\n";
        return exit_code_for("config");
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    RunOptions opts;
    opts.seed = seed;
    opts.out_dir = out_dir;
    opts.workers = workers;
    opts.stride = stride;
    return run_command(cmd, scenario_path, opts, std::cout, std::cerr);
}
