#pragma once

#include "fbsde/noise.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/process.hpp"

#include <functional>
#include <vector>

namespace fbsde {

/// The two rows of the solution map evaluated at an iterate: a triple solves
/// the discrete system iff both rows vanish.
struct ResidualProcess {
    PathProcess forward;  // r_X[m][i] in R^d
    PathProcess backward; // r_Y[m][i] in R^m
};

/// r_X[m][i] = x_i - x_0 - sum_{j<i} b(t_j,x_j) dt - sum_{j<i} sigma(t_j,x_j) dW_j
/// r_Y[m][i] = y_i - phi(x_N) - sum_{j>=i} f(t_j,u_j) dt + sum_{j>=i} z_j dW_j
ResidualProcess evaluate_residual(const FbsdeProblem& problem, const TripleProcess& u,
                                  const BrownianBundle& noise, int workers = 1);

/// Directional derivative of the map at u in direction h, same shape as the
/// residual: forward row uses b'_x h_x and sigma'_x h_x, backward row uses
/// phi'(x_N) h_x(N), f'(u) h, and the h_z Ito sums.
ResidualProcess gateaux_derivative(const FbsdeProblem& problem, const TripleProcess& u,
                                   const TripleProcess& h, const BrownianBundle& noise,
                                   int workers = 1);

/// Scalar size of a residual: sqrt(s2(forward)^2 + s2(backward)^2).
double residual_norm(const ResidualProcess& r);

/// Lagrange remainder R_g(base)(delta) = g(base+delta) - g(base) - g'(base) delta,
/// computed by that identity. g_jac rows are laid out [out_dim x in_dim].
std::vector<double> lagrange_remainder(
    const std::function<void(std::span<const double>, std::span<double>)>& g,
    const std::function<void(std::span<const double>, std::span<double>)>& g_jac,
    std::span<const double> base, std::span<const double> delta, int out_dim);

} // namespace fbsde
