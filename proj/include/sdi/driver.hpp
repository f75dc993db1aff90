#pragma once

#include <cstdint>
#include <vector>

#include "sdi/linalg.hpp"

namespace sdi {

// Brownian increments on a uniform grid, fully determined by (seed,
// path_index). Increment (step, coord) comes from a counter-based draw, so
// paths can be generated in any order and on any number of workers with
// bitwise-identical results. Restriction to a coarser grid sums increments in
// ascending step order; the terminal value is fixed once at the finest
// resolution and carried through restrictions unchanged.
struct BrownianPath {
    int dH = 0;
    double T = 0.0;
    double dt = 0.0;           // step of this grid
    double dt_fine = 0.0;      // step of the generating grid
    std::int64_t steps = 0;
    std::uint64_t seed = 0;
    std::int64_t path_index = 0;
    std::vector<double> increments;  // steps x dH, row-major
    std::vector<double> terminal_;   // W(T) per coordinate, finest-grid sum

    [[nodiscard]] double increment(std::int64_t step, int coord) const {
        return increments[static_cast<std::size_t>(step) * dH + coord];
    }
    [[nodiscard]] double terminal(int coord) const { return terminal_[static_cast<std::size_t>(coord)]; }
};

// Generates the path on the finest grid. dt_fine must divide T within 1e-12
// relative tolerance.
BrownianPath generate_brownian(std::uint64_t seed, std::int64_t path_index, int dH, double T,
                               double dt_fine);

// Restriction to a coarser grid; dt_coarse must be an integer multiple of the
// path's step. Coarse increments are exact ascending block sums.
BrownianPath restrict_path(const BrownianPath& path, double dt_coarse);

}  // namespace sdi
