#pragma once

#include "fbsde/grid.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fbsde {

/// A decoupled forward-backward system
///   X(t) = x0 + int b(s, X) ds + int sigma(s, X) dW
///   Y(t) = phi(X(T)) + int_t^T f(s, X, Y, Z) ds - int_t^T Z dW
/// with X in R^d, Y in R^m, W in R^k, Z in R^{m x k}.
///
/// All coefficients are deterministic functions of (t, state). Jacobian
/// layouts (row-major):
///   drift_dx      d x d        [i*d + j]       = db_i/dx_j
///   diffusion_dx  (d*k) x d    [(i*k+j)*d + l] = dsigma_ij/dx_l
///   driver_dx     m x d
///   driver_dy     m x m
///   driver_dz     m x (m*k)    [i*(m*k) + (j*k+l)] = df_i/dz_jl
///   terminal_dx   m x d
struct FbsdeProblem {
    int dim_x = 1; // d
    int dim_y = 1; // m
    int dim_w = 1; // k
    std::vector<double> x0;

    using StateFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
    using DriverFn = std::function<void(double t, std::span<const double> x,
                                        std::span<const double> y, std::span<const double> z,
                                        std::span<double> out)>;
    using TerminalFn = std::function<void(std::span<const double> x, std::span<double> out)>;

    StateFn drift;          // b: R^d
    StateFn diffusion;      // sigma: R^{d x k}
    DriverFn driver;        // f: R^m
    TerminalFn terminal;    // phi: R^m

    StateFn drift_dx;
    StateFn diffusion_dx;
    DriverFn driver_dx;
    DriverFn driver_dy;
    DriverFn driver_dz;
    TerminalFn terminal_dx;

    /// Optional fused evaluator filling f, f_x, f_y, f_z in one call; heavy
    /// inner loops use it when set (shared transcendentals), else fall back
    /// to the four separate functions.
    std::function<void(double t, std::span<const double> x, std::span<const double> y,
                       std::span<const double> z, std::span<double> f, std::span<double> fx,
                       std::span<double> fy, std::span<double> fz)>
        driver_full;

    /// Optional fused evaluator filling b, b_x, sigma, sigma_x in one call.
    std::function<void(double t, std::span<const double> x, std::span<double> b,
                       std::span<double> bx, std::span<double> sigma, std::span<double> sigma_dx)>
        forward_full;

    // Declared sup norms of the Jacobians; the driver bound covers the full
    // Jacobian [f_x f_y f_z].
    double bound_drift = 0.0;
    double bound_diffusion = 0.0;
    double bound_driver = 0.0;
    double bound_terminal = 0.0;

    void eval_driver_full(double t, std::span<const double> x, std::span<const double> y,
                          std::span<const double> z, std::span<double> f, std::span<double> fx,
                          std::span<double> fy, std::span<double> fz) const {
        if (driver_full) {
            driver_full(t, x, y, z, f, fx, fy, fz);
        } else {
            driver(t, x, y, z, f);
            driver_dx(t, x, y, z, fx);
            driver_dy(t, x, y, z, fy);
            driver_dz(t, x, y, z, fz);
        }
    }

    void eval_forward_full(double t, std::span<const double> x, std::span<double> b,
                           std::span<double> bx, std::span<double> sigma,
                           std::span<double> sigma_dx) const {
        if (forward_full) {
            forward_full(t, x, b, bx, sigma, sigma_dx);
        } else {
            drift(t, x, b);
            drift_dx(t, x, bx);
            diffusion(t, x, sigma);
            diffusion_dx(t, x, sigma_dx);
        }
    }
};

/// Spot-checks the problem definition on `samples` pseudo-random states:
/// supplied Jacobians against central finite differences (relative tolerance
/// 1e-5), sampled Jacobian norms against the declared bounds, and finiteness
/// of b(t,0), sigma(t,0), f(t,0,0,0) on the grid. Throws std::invalid_argument
/// with a description on the first violation.
void check_problem(const FbsdeProblem& problem, const TimeGrid& grid, int samples,
                   std::uint64_t seed);

} // namespace fbsde
