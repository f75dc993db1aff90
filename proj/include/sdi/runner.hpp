#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sdi/config.hpp"

namespace sdi {

struct RunOptions {
    std::optional<std::uint64_t> seed;     // overrides [scheme] seed
    int threads = 1;
    std::optional<std::string> out_dir;    // overrides [output] dir
};

// simulate: one lagged ensemble; writes ensemble_<n>.bin and summary.csv.
void run_simulate(const ScenarioConfig& cfg, const RunOptions& opt);

// convergence: the n-ladder on shared Brownian paths; writes convergence.csv,
// report.csv and report.json.
void run_convergence(const ScenarioConfig& cfg, const RunOptions& opt);

// verify: hypothesis checks; writes hypotheses.csv.
struct VerifySummary {
    bool pass = true;
    std::string failing;  // first failing hypothesis, when any
};
VerifySummary run_verify(const ScenarioConfig& cfg, const RunOptions& opt);

// plotdata: columnar .dat files from a report.json or ensemble_<n>.bin.
void run_plotdata(const std::string& input_path, const std::string& out_dir);

}  // namespace sdi
