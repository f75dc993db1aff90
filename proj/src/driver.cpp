#include "sdi/driver.hpp"

#include <cmath>

#include "sdi/errors.hpp"
#include "sdi/rng.hpp"

namespace sdi {

namespace {

std::int64_t checked_step_count(double span, double dt, const char* what) {
    if (!(dt > 0.0) || !(span > 0.0)) throw Error(std::string(what) + ": step and span must be > 0");
    const double ratio = span / dt;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-12 * ratio)
        throw Error(std::string(what) + ": step does not divide the span (ratio " +
                    std::to_string(ratio) + ")");
    return static_cast<std::int64_t>(rounded);
}

}  // namespace

BrownianPath generate_brownian(std::uint64_t seed, std::int64_t path_index, int dH, double T,
                               double dt_fine) {
    if (dH < 1) throw Error("generate_brownian: dH must be >= 1");
    const std::int64_t steps = checked_step_count(T, dt_fine, "generate_brownian");

    BrownianPath path;
    path.dH = dH;
    path.T = T;
    path.dt = dt_fine;
    path.dt_fine = dt_fine;
    path.steps = steps;
    path.seed = seed;
    path.path_index = path_index;
    path.increments.resize(static_cast<std::size_t>(steps) * dH);

    const double scale = std::sqrt(dt_fine);
    for (std::int64_t k = 0; k < steps; ++k)
        for (int j = 0; j < dH; ++j)
            path.increments[static_cast<std::size_t>(k) * dH + j] =
                scale * counter_normal(seed, static_cast<std::uint64_t>(path_index),
                                       static_cast<std::uint64_t>(k), static_cast<uint32_t>(j),
                                       philox::kIncrements);

    path.terminal_.assign(static_cast<std::size_t>(dH), 0.0);
    for (std::int64_t k = 0; k < steps; ++k)
        for (int j = 0; j < dH; ++j)
            path.terminal_[static_cast<std::size_t>(j)] +=
                path.increments[static_cast<std::size_t>(k) * dH + j];
    return path;
}

BrownianPath restrict_path(const BrownianPath& path, double dt_coarse) {
    const double ratio = dt_coarse / path.dt;
    const double rounded = std::round(ratio);
    if (!(dt_coarse > 0.0) || rounded < 1.0 || std::abs(ratio - rounded) > 1e-12 * ratio)
        throw Error("restrict_path: coarse step is not an integer multiple of the fine step");
    const std::int64_t block = static_cast<std::int64_t>(rounded);
    if (block == 1) return path;
    if (path.steps % block != 0)
        throw Error("restrict_path: coarse step does not divide the horizon");

    BrownianPath out;
    out.dH = path.dH;
    out.T = path.T;
    out.dt = dt_coarse;
    out.dt_fine = path.dt_fine;
    out.steps = path.steps / block;
    out.seed = path.seed;
    out.path_index = path.path_index;
    out.terminal_ = path.terminal_;
    out.increments.assign(static_cast<std::size_t>(out.steps) * out.dH, 0.0);
    for (std::int64_t k = 0; k < out.steps; ++k)
        for (std::int64_t i = 0; i < block; ++i)
            for (int j = 0; j < out.dH; ++j)
                out.increments[static_cast<std::size_t>(k) * out.dH + j] +=
                    path.increments[static_cast<std::size_t>(k * block + i) * out.dH + j];
    return out;
}

}  // namespace sdi
