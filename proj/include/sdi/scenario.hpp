#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdi/config.hpp"
#include "sdi/tonelli.hpp"

namespace sdi {

// Execution parameters accompanying a scenario, with defaults filled in.
struct RunParameters {
    double dt = 0.0;
    std::int64_t paths = 0;
    std::uint64_t seed = 0;
    std::int64_t n = 0;  // single-run lag parameter (0 = unset)
    std::vector<std::int64_t> n_ladder;

    std::vector<double> deltas;
    double aldous_eta = 0.5;
    int bl_anchors = 64;
    double osgood_k = 1.0;
    double osgood_R0 = 1.0;
    int osgood_grid = 512;
    int osgood_iters = 100;
    int hyp_samples = 1000;
    double box_halfwidth = 5.0;
    std::vector<double> conv_t_ladder;
    std::int64_t conv_paths = 2000;
    double conv_dt = 0.0;
    std::vector<double> radius_grid;
    int max_anchors = 32;
    std::string out_dir = ".";
};

struct BuiltScenario {
    InclusionScenario scenario;
    RunParameters run;
};

// Materializes the typed scenario from a parsed config; all semantic errors
// (bad dimensions, invalid constants, malformed terms) raise ConfigError.
BuiltScenario build_scenario(const ScenarioConfig& cfg);

}  // namespace sdi
