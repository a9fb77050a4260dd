#pragma once

#include "fbsde/linearize.hpp"
#include "fbsde/noise.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/process.hpp"

#include <vector>

namespace fbsde {

/// Euler scheme for the forward SDE along the given increments:
///   X_0 = x0,  X_{i+1} = X_i + b(t_i, X_i) dt + sigma(t_i, X_i) dW_i.
/// Throws numerical_blowup_error naming the node if a state leaves the
/// representable range.
PathProcess simulate_euler(const FbsdeProblem& problem, const TimeGrid& grid,
                           const BrownianBundle& noise, int workers = 1);

/// Euler scheme for the affine SDE frozen along the linearization base:
/// coefficients b_n, sigma_n from `lin`, started at the problem's x0. The base
/// iterate must itself start at x0 on every path (throws invalid_argument
/// otherwise): the iteration never moves the initial value.
PathProcess forward_newton_step(const LinearizedProblem& lin, const TimeGrid& grid,
                                const BrownianBundle& noise, int workers = 1);

/// Error history of the forward-only iteration: iterate n+1 solves the SDE
/// linearized along iterate n, and errors are measured in the sampled sup
/// norm against the Euler solution on the same grid and noise (which is the
/// exact fixed point of the step map).
struct ForwardIterationRecord {
    std::vector<double> error; // ||X_euler - X_n||_S2, n = 0..iters
    std::vector<double> ratio; // error[n+1] / error[n]
    PathProcess euler;         // the fixed point
    PathProcess last;          // final iterate
};

/// Runs `iters` forward linearization steps starting from `start` (a constant
/// process at x0 when null) and records errors against the same-grid Euler
/// solution.
ForwardIterationRecord run_forward_newton(const FbsdeProblem& problem, const TimeGrid& grid,
                                          const BrownianBundle& noise, int iters,
                                          const PathProcess* start = nullptr, int workers = 1);

} // namespace fbsde
