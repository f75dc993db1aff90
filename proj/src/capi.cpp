#include "sdi/capi.h"

#include <exception>
#include <optional>
#include <string>

#include "sdi/config.hpp"
#include "sdi/errors.hpp"
#include "sdi/runner.hpp"
#include "sdi/scenario.hpp"

namespace {

thread_local std::string g_last_error;

sdi_status status_of(const sdi::Error& e) {
    switch (e.code()) {
        case sdi::ErrorCode::config: return SDI_CONFIG_ERROR;
        case sdi::ErrorCode::blowup: return SDI_BLOWUP_ERROR;
        case sdi::ErrorCode::io: return SDI_IO_ERROR;
        case sdi::ErrorCode::hypothesis: return SDI_HYPOTHESIS_FAIL;
        default: return SDI_ERROR;
    }
}

template <typename Fn>
sdi_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const sdi::Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SDI_ERROR;
    } catch (...) {
        g_last_error = "unknown error";
        return SDI_ERROR;
    }
}

}  // namespace

struct sdi_scenario {
    sdi::ScenarioConfig config;
    std::optional<uint64_t> seed;
    int threads = 1;
};

extern "C" {

SDI_API sdi_status sdi_scenario_open(const char* config_path, sdi_scenario** out) {
    if (!config_path || !out) {
        g_last_error = "null argument";
        return SDI_ERROR;
    }
    *out = nullptr;
    return guarded([&]() {
        auto handle = new sdi_scenario{sdi::parse_config_file(config_path), std::nullopt, 1};
        try {
            (void)sdi::build_scenario(handle->config);  // surface semantic errors now
        } catch (...) {
            delete handle;
            throw;
        }
        *out = handle;
        return SDI_OK;
    });
}

SDI_API void sdi_scenario_close(sdi_scenario* scenario) { delete scenario; }

SDI_API sdi_status sdi_scenario_set_seed(sdi_scenario* scenario, uint64_t seed) {
    if (!scenario) {
        g_last_error = "null scenario";
        return SDI_ERROR;
    }
    scenario->seed = seed;
    return SDI_OK;
}

SDI_API sdi_status sdi_scenario_set_threads(sdi_scenario* scenario, int threads) {
    if (!scenario) {
        g_last_error = "null scenario";
        return SDI_ERROR;
    }
    if (threads < 1) {
        g_last_error = "threads must be >= 1";
        return SDI_ERROR;
    }
    scenario->threads = threads;
    return SDI_OK;
}

namespace {

sdi::RunOptions options_for(const sdi_scenario* scenario, const char* out_dir) {
    sdi::RunOptions opt;
    opt.seed = scenario->seed;
    opt.threads = scenario->threads;
    if (out_dir) opt.out_dir = std::string(out_dir);
    return opt;
}

}  // namespace

SDI_API sdi_status sdi_run_simulate(sdi_scenario* scenario, const char* out_dir) {
    if (!scenario) {
        g_last_error = "null scenario";
        return SDI_ERROR;
    }
    return guarded([&]() {
        sdi::run_simulate(scenario->config, options_for(scenario, out_dir));
        return SDI_OK;
    });
}

SDI_API sdi_status sdi_run_convergence(sdi_scenario* scenario, const char* out_dir) {
    if (!scenario) {
        g_last_error = "null scenario";
        return SDI_ERROR;
    }
    return guarded([&]() {
        sdi::run_convergence(scenario->config, options_for(scenario, out_dir));
        return SDI_OK;
    });
}

SDI_API sdi_status sdi_run_verify(sdi_scenario* scenario, const char* out_dir) {
    if (!scenario) {
        g_last_error = "null scenario";
        return SDI_ERROR;
    }
    return guarded([&]() {
        const sdi::VerifySummary summary =
            sdi::run_verify(scenario->config, options_for(scenario, out_dir));
        if (!summary.pass) {
            g_last_error = "hypothesis failed: " + summary.failing;
            return SDI_HYPOTHESIS_FAIL;
        }
        return SDI_OK;
    });
}

SDI_API sdi_status sdi_run_plotdata(const char* input_path, const char* out_dir) {
    if (!input_path || !out_dir) {
        g_last_error = "null argument";
        return SDI_ERROR;
    }
    return guarded([&]() {
        sdi::run_plotdata(input_path, out_dir);
        return SDI_OK;
    });
}

SDI_API const char* sdi_last_error(void) { return g_last_error.c_str(); }

SDI_API const char* sdi_version(void) { return "0.1.0"; }

}  // extern "C"
