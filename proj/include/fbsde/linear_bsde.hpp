#pragma once

#include "fbsde/linearize.hpp"
#include "fbsde/noise.hpp"
#include "fbsde/process.hpp"
#include "fbsde/regression.hpp"

#include <vector>

namespace fbsde {

/// Pair (Y, Z) produced by a backward solve. Y has nodes 0..N and exact
/// terminal values; Z has nodes 0..N with node N copied from node N-1.
struct BsdeSolution {
    PathProcess Y;
    PathProcess Z;
};

/// Frozen per-step regression: the basis (including its standardization), the
/// fitted coefficient blocks for the conditional-expectation and integrand
/// estimates, and the truncation level used when predicting.
struct BsdeStepLog {
    PolynomialBasis basis;
    Eigen::MatrixXd coef_y; // basis_size x dim_y
    Eigen::MatrixXd coef_z; // basis_size x (dim_y * dim_w)
    double clip = 0.0;
};

/// One BsdeStepLog per time step, index i in [0, N). Recording a solve and
/// replaying it against different inputs re-evaluates the same fitted
/// functions instead of refitting, which pins down exactly what the solver
/// measured at each step.
struct BsdeRegressionLog {
    std::vector<BsdeStepLog> steps;
};

/// Solves the linear BSDE with driver f_n and terminal condition phi_n from
/// `lin`, along the forward paths `X_next` and the increments `noise`.
/// Backward induction with least-squares conditional expectations; the
/// y-dependence of f_n is handled implicitly (a small per-path linear solve),
/// so throws step_size_error if I - dt * f_y is singular. If `record` is
/// non-null the fitted regressions are appended per step; if `replay` is
/// non-null no fitting happens and the logged functions are evaluated
/// instead.
BsdeSolution solve_linear_bsde(const LinearizedProblem& lin, const PathProcess& X_next,
                               const TimeGrid& grid, const BrownianBundle& noise,
                               const RegressionConfig& config, int workers = 1,
                               BsdeRegressionLog* record = nullptr,
                               const BsdeRegressionLog* replay = nullptr);

/// Backward solve with the driver frozen at previous-iterate values:
/// coefficients of the step recursion use f(t, X, Y_prev, Z_prev) with no
/// dependence on the unknowns, and the exact terminal condition phi(X(T)).
/// This is the backward half of a Picard iteration.
BsdeSolution solve_frozen_bsde(const FbsdeProblem& problem, const PathProcess& X,
                               const PathProcess& Y_prev, const PathProcess& Z_prev,
                               const TimeGrid& grid, const BrownianBundle& noise,
                               const RegressionConfig& config, int workers = 1);

} // namespace fbsde
