#pragma once

#include <stdexcept>

namespace fbsde {

/// Uniform time grid on [0, T] with N steps; nodes t_i = i*T/N for i = 0..N.
struct TimeGrid {
    double horizon = 1.0;
    int steps = 1;

    TimeGrid() = default;
    TimeGrid(double T, int N) : horizon(T), steps(N) {
        if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
        if (N < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
    }

    double dt() const { return horizon / steps; }
    double node(int i) const { return horizon * (static_cast<double>(i) / steps); }
    int node_count() const { return steps + 1; }

    bool operator==(const TimeGrid&) const = default;
};

} // namespace fbsde
