#include "fbsde/norms.hpp"

#include <cmath>
#include <stdexcept>

namespace fbsde {

namespace {

double sq_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

} // namespace

double estimate_s2_norm(const PathProcess& proc) {
    if (proc.empty()) throw std::invalid_argument("estimate_s2_norm: empty path set");
    double acc = 0.0;
    for (int m = 0; m < proc.paths(); ++m) {
        double sup = 0.0;
        for (int i = 0; i < proc.nodes(); ++i) sup = std::max(sup, sq_norm(proc.at(m, i)));
        acc += sup;
    }
    return std::sqrt(acc / proc.paths());
}

double estimate_h2_norm(const PathProcess& proc, const TimeGrid& grid) {
    if (proc.empty()) throw std::invalid_argument("estimate_h2_norm: empty path set");
    if (proc.nodes() != grid.node_count())
        throw std::invalid_argument("estimate_h2_norm: grid mismatch");
    const double dt = grid.dt();
    double acc = 0.0;
    for (int m = 0; m < proc.paths(); ++m) {
        double sum = 0.0;
        for (int i = 0; i < grid.steps; ++i) sum += sq_norm(proc.at(m, i));
        acc += sum * dt;
    }
    return std::sqrt(acc / proc.paths());
}

double estimate_weighted_norm(const PathProcess& Y, const PathProcess& Z, double alpha,
                              const TimeGrid& grid) {
    if (Y.empty() || Z.empty()) throw std::invalid_argument("estimate_weighted_norm: empty input");
    if (Y.paths() != Z.paths() || Y.nodes() != grid.node_count() || Z.nodes() != grid.node_count())
        throw std::invalid_argument("estimate_weighted_norm: shape mismatch");
    if (!std::isfinite(alpha)) throw std::invalid_argument("estimate_weighted_norm: alpha not finite");
    const double dt = grid.dt();
    double acc_sup = 0.0, acc_int = 0.0;
    for (int m = 0; m < Y.paths(); ++m) {
        double sup = 0.0;
        for (int i = 0; i < Y.nodes(); ++i) {
            const double q = sq_norm(Y.at(m, i));
            if (q == 0.0) continue; // avoids 0 * inf when the weight overflows
            sup = std::max(sup, std::exp(alpha * grid.node(i)) * q);
        }
        acc_sup += sup;
        double sum = 0.0;
        for (int i = 0; i < grid.steps; ++i) {
            const double q = sq_norm(Z.at(m, i));
            if (q == 0.0) continue;
            sum += std::exp(alpha * grid.node(i)) * q;
        }
        acc_int += sum * dt;
    }
    return std::sqrt(acc_sup / Y.paths() + acc_int / Y.paths());
}

NormReport measure_norms(const TripleProcess& u, double alpha) {
    NormReport r;
    r.s2_X = estimate_s2_norm(u.X);
    r.s2_Y = estimate_s2_norm(u.Y);
    r.h2_Z = estimate_h2_norm(u.Z, u.grid);
    r.alpha = alpha;
    r.weighted_YZ = estimate_weighted_norm(u.Y, u.Z, alpha, u.grid);
    return r;
}

double combined_norm(const TripleProcess& u) {
    const double sx = estimate_s2_norm(u.X);
    const double sy = estimate_s2_norm(u.Y);
    const double hz = estimate_h2_norm(u.Z, u.grid);
    return std::sqrt(sx * sx + sy * sy + hz * hz);
}

double combined_diff_norm(const TripleProcess& a, const TripleProcess& b) {
    if (a.X.paths() != b.X.paths() || a.X.nodes() != b.X.nodes() || a.X.dim() != b.X.dim() ||
        a.Y.dim() != b.Y.dim() || a.Z.dim() != b.Z.dim() || !(a.grid == b.grid))
        throw std::invalid_argument("combined_diff_norm: shape mismatch");
    const int M = a.X.paths(), nodes = a.X.nodes();
    const double dt = a.grid.dt();
    auto diff_sq = [](std::span<const double> u, std::span<const double> v) {
        double s = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) {
            const double d = u[j] - v[j];
            s += d * d;
        }
        return s;
    };
    double acc_x = 0.0, acc_y = 0.0, acc_z = 0.0;
    for (int m = 0; m < M; ++m) {
        double sup_x = 0.0, sup_y = 0.0, sum_z = 0.0;
        for (int i = 0; i < nodes; ++i) {
            sup_x = std::max(sup_x, diff_sq(a.X.at(m, i), b.X.at(m, i)));
            sup_y = std::max(sup_y, diff_sq(a.Y.at(m, i), b.Y.at(m, i)));
            if (i < nodes - 1) sum_z += diff_sq(a.Z.at(m, i), b.Z.at(m, i));
        }
        acc_x += sup_x;
        acc_y += sup_y;
        acc_z += sum_z * dt;
    }
    return std::sqrt(acc_x / M + acc_y / M + acc_z / M);
}

} // namespace fbsde
