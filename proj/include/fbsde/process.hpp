#pragma once

#include "fbsde/grid.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fbsde {

/// Dense storage for a sampled vector process: one value in R^dim per
/// (path, node). Layout is path-major, node-minor, contiguous components.
class PathProcess {
public:
    PathProcess() = default;
    PathProcess(int paths, int nodes, int dim, double fill = 0.0)
        : paths_(paths), nodes_(nodes), dim_(dim),
          data_(static_cast<std::size_t>(paths) * nodes * dim, fill) {
        if (paths < 1 || nodes < 1 || dim < 1)
            throw std::invalid_argument("PathProcess: paths, nodes, dim must be positive");
    }

    int paths() const { return paths_; }
    int nodes() const { return nodes_; }
    int dim() const { return dim_; }
    bool empty() const { return data_.empty(); }

    std::span<double> at(int m, int i) {
        return {data_.data() + offset(m, i), static_cast<std::size_t>(dim_)};
    }
    std::span<const double> at(int m, int i) const {
        return {data_.data() + offset(m, i), static_cast<std::size_t>(dim_)};
    }

    std::span<double> raw() { return data_; }
    std::span<const double> raw() const { return data_; }

private:
    std::size_t offset(int m, int i) const {
        return (static_cast<std::size_t>(m) * nodes_ + i) * dim_;
    }

    int paths_ = 0;
    int nodes_ = 0;
    int dim_ = 0;
    std::vector<double> data_;
};

/// The iterate u = (X, Y, Z) sampled on a grid. Z is stored row-major as an
/// m*k vector per node.
struct TripleProcess {
    TimeGrid grid;
    PathProcess X; // dim d
    PathProcess Y; // dim m
    PathProcess Z; // dim m*k

    static TripleProcess zeros(const TimeGrid& grid, int paths, int d, int m, int k) {
        TripleProcess u;
        u.grid = grid;
        u.X = PathProcess(paths, grid.node_count(), d);
        u.Y = PathProcess(paths, grid.node_count(), m);
        u.Z = PathProcess(paths, grid.node_count(), m * k);
        return u;
    }
};

/// a - b, elementwise; shapes must match.
PathProcess difference(const PathProcess& a, const PathProcess& b);

/// a + scale * b, elementwise; shapes must match.
PathProcess add_scaled(const PathProcess& a, const PathProcess& b, double scale);

inline PathProcess difference(const PathProcess& a, const PathProcess& b) {
    if (a.paths() != b.paths() || a.nodes() != b.nodes() || a.dim() != b.dim())
        throw std::invalid_argument("difference: shape mismatch");
    PathProcess out = a;
    auto o = out.raw();
    auto bb = b.raw();
    for (std::size_t n = 0; n < o.size(); ++n) o[n] -= bb[n];
    return out;
}

inline PathProcess add_scaled(const PathProcess& a, const PathProcess& b, double scale) {
    if (a.paths() != b.paths() || a.nodes() != b.nodes() || a.dim() != b.dim())
        throw std::invalid_argument("add_scaled: shape mismatch");
    PathProcess out = a;
    auto o = out.raw();
    auto bb = b.raw();
    for (std::size_t n = 0; n < o.size(); ++n) o[n] += scale * bb[n];
    return out;
}

} // namespace fbsde
