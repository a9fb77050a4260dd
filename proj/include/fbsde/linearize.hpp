#pragma once

#include "fbsde/problem.hpp"
#include "fbsde/process.hpp"

#include <span>

namespace fbsde {

/// The affine coefficients frozen along a reference iterate u_n:
///   b_n(s, x)   = b(s, X_n) + b'_x(s, X_n)(x - X_n)
///   sigma_n     analogous
///   f_n(s,x,y,z)= f(s, u_n) + f'(s, u_n) . (x - X_n, y - Y_n, z - Z_n)
///   phi_n(x)    = phi(X_n(T)) + phi'(X_n(T))(x - X_n(T))
/// Holds references only; the caller keeps problem and u_n alive.
struct LinearizedProblem {
    const FbsdeProblem* problem = nullptr;
    const TripleProcess* base = nullptr; // u_n

    int dim_x() const { return problem->dim_x; }
    int dim_y() const { return problem->dim_y; }
    int dim_w() const { return problem->dim_w; }

    /// b_n at (t_i, x) along path m.
    void drift(int m, int i, std::span<const double> x, std::span<double> out) const;
    /// sigma_n at (t_i, x) along path m.
    void diffusion(int m, int i, std::span<const double> x, std::span<double> out) const;
    /// f_n at (t_i, x, y, z) along path m.
    void driver(int m, int i, std::span<const double> x, std::span<const double> y,
                std::span<const double> z, std::span<double> out) const;
    /// phi_n(x) along path m (expansion point X_n(T)).
    void terminal(int m, std::span<const double> x, std::span<double> out) const;
};

/// Freezes the affine expansion of the problem along u_n. Validates that u_n
/// is finite everywhere.
LinearizedProblem linearize(const FbsdeProblem& problem, const TripleProcess& u_n);

} // namespace fbsde
