#include "fbsde/noise.hpp"

#include "fbsde/parallel.hpp"
#include "fbsde/philox.hpp"

#include <cmath>
#include <stdexcept>

namespace fbsde {

BrownianBundle make_noise(std::uint64_t seed, const TimeGrid& grid, int paths, int k,
                          int workers) {
    if (paths < 1) throw std::invalid_argument("make_noise: paths must be >= 1");
    if (k < 1) throw std::invalid_argument("make_noise: wiener dimension must be >= 1");

    BrownianBundle b;
    b.grid = grid;
    b.paths = paths;
    b.dim = k;
    b.seed = seed;
    b.increments.resize(static_cast<std::size_t>(paths) * grid.steps * k);

    const double sqrt_dt = std::sqrt(grid.dt());
    parallel_chunks(paths, workers, [&](int, std::int64_t begin, std::int64_t end) {
        for (std::int64_t m = begin; m < end; ++m) {
            double* row = b.increments.data() + static_cast<std::size_t>(m) * grid.steps * k;
            for (int i = 0; i < grid.steps; ++i)
                for (int c = 0; c < k; ++c)
                    row[static_cast<std::size_t>(i) * k + c] =
                        sqrt_dt * gaussian_draw(seed, static_cast<std::uint64_t>(m),
                                                static_cast<std::uint32_t>(i),
                                                static_cast<std::uint32_t>(c));
        }
    });
    return b;
}

BrownianBundle BrownianBundle::aggregate(int factor) const {
    if (factor < 1 || grid.steps % factor != 0)
        throw std::invalid_argument("aggregate: factor must divide the step count");
    BrownianBundle out;
    out.grid = TimeGrid(grid.horizon, grid.steps / factor);
    out.paths = paths;
    out.dim = dim;
    out.seed = seed;
    out.increments.assign(static_cast<std::size_t>(paths) * out.grid.steps * dim, 0.0);
    for (int m = 0; m < paths; ++m) {
        const double* src = increments.data() + static_cast<std::size_t>(m) * grid.steps * dim;
        double* dst = out.increments.data() + static_cast<std::size_t>(m) * out.grid.steps * dim;
        for (int i = 0; i < out.grid.steps; ++i)
            for (int j = 0; j < factor; ++j)
                for (int c = 0; c < dim; ++c)
                    dst[static_cast<std::size_t>(i) * dim + c] +=
                        src[(static_cast<std::size_t>(i) * factor + j) * dim + c];
    }
    return out;
}

BrownianBundle BrownianBundle::take_paths(int m) const {
    if (m < 1 || m > paths) throw std::invalid_argument("take_paths: bad path count");
    BrownianBundle out;
    out.grid = grid;
    out.paths = m;
    out.dim = dim;
    out.seed = seed;
    out.increments.assign(increments.begin(),
                          increments.begin() + static_cast<std::size_t>(m) * grid.steps * dim);
    return out;
}

} // namespace fbsde
