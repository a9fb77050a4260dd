#pragma once

#include "fbsde/grid.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace fbsde {

/// Brownian increments ΔW[m][i] in R^k, each component N(0, Δt), generated
/// counter-based from (seed, path, step, component). Every increment is a
/// pure function of its key, so bundles are reproducible regardless of
/// generation order or worker count.
struct BrownianBundle {
    TimeGrid grid;
    int paths = 0;
    int dim = 0; // k
    std::uint64_t seed = 0;
    std::vector<double> increments; // [m][i][c], i in 0..steps-1

    std::span<const double> at(int m, int i) const {
        return {increments.data() + (static_cast<std::size_t>(m) * grid.steps + i) * dim,
                static_cast<std::size_t>(dim)};
    }
    std::span<double> at(int m, int i) {
        return {increments.data() + (static_cast<std::size_t>(m) * grid.steps + i) * dim,
                static_cast<std::size_t>(dim)};
    }

    /// Exact block sums of `factor` consecutive fine increments; the result
    /// lives on the coarse grid with steps/factor steps. This is how a coarse
    /// bundle consistent with a refined run is built: fine first, then sum.
    BrownianBundle aggregate(int factor) const;

    /// Keeps the first `m` paths (path keys are nested by construction).
    BrownianBundle take_paths(int m) const;
};

BrownianBundle make_noise(std::uint64_t seed, const TimeGrid& grid, int paths, int k,
                          int workers = 1);

} // namespace fbsde
