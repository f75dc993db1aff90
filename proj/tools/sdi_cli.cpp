// Command-line front end; everything goes through the C API.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "sdi/capi.h"

namespace {

int finish(sdi_status status) {
    if (status != SDI_OK) std::cerr << "error: " << sdi_last_error() << "\n";
    return static_cast<int>(status);
}

struct ScenarioGuard {
    sdi_scenario* handle = nullptr;
    ~ScenarioGuard() { sdi_scenario_close(handle); }
};

int run_command(const std::string& config, bool has_seed, std::uint64_t seed, int threads,
                const std::string& out,
                sdi_status (*command)(sdi_scenario*, const char*)) {
    ScenarioGuard guard;
    sdi_status status = sdi_scenario_open(config.c_str(), &guard.handle);
    if (status != SDI_OK) return finish(status);
    if (has_seed) {
        status = sdi_scenario_set_seed(guard.handle, seed);
        if (status != SDI_OK) return finish(status);
    }
    status = sdi_scenario_set_threads(guard.handle, threads);
    if (status != SDI_OK) return finish(status);
    return finish(command(guard.handle, out.empty() ? nullptr : out.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator and verification toolkit for semilinear stochastic "
                 "differential inclusions"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int threads = 1;
    app.add_option("--config", config, "scenario configuration file")->expected(1);
    app.add_option("--seed", seed, "override the scenario seed")
        ->each([&](const std::string&) { has_seed = true; });
    app.add_option("--threads", threads, "worker threads (results are thread-count invariant)");
    app.add_option("--out", out, "output directory (default: scenario [output] dir)");

    auto* simulate = app.add_subcommand("simulate", "run one lagged ensemble");
    auto* convergence = app.add_subcommand("convergence", "run the scheme ladder study");
    auto* verify = app.add_subcommand("verify", "check the standing hypotheses");
    auto* plotdata = app.add_subcommand("plotdata", "emit plot-ready .dat files");
    std::string plot_input;
    plotdata->add_option("input", plot_input, "report.json or ensemble_<n>.bin")->required();
    // Global flags may appear after the subcommand name.
    for (CLI::App* sub : {simulate, convergence, verify, plotdata}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    auto need_config = [&]() {
        if (config.empty()) {
            std::cerr << "error: --config is required\n";
            return false;
        }
        return true;
    };

    if (simulate->parsed()) {
        if (!need_config()) return SDI_CONFIG_ERROR;
        return run_command(config, has_seed, seed, threads, out, sdi_run_simulate);
    }
    if (convergence->parsed()) {
        if (!need_config()) return SDI_CONFIG_ERROR;
        return run_command(config, has_seed, seed, threads, out, sdi_run_convergence);
    }
    if (verify->parsed()) {
        if (!need_config()) return SDI_CONFIG_ERROR;
        return run_command(config, has_seed, seed, threads, out, sdi_run_verify);
    }
    if (plotdata->parsed()) {
        return finish(sdi_run_plotdata(plot_input.c_str(), out.empty() ? "." : out.c_str()));
    }
    return SDI_ERROR;
}
