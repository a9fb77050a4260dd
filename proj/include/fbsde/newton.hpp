#pragma once

#include "fbsde/constants.hpp"
#include "fbsde/linear_bsde.hpp"
#include "fbsde/linearize.hpp"
#include "fbsde/noise.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/process.hpp"

#include <cstdint>
#include <vector>

namespace fbsde {

/// One Newton iterate: freeze the affine expansion along u_n, solve its
/// forward equation, then its backward equation, all on the shared noise.
/// u_n's X must start at x0 on every path; so does the result.
TripleProcess newton_step(const FbsdeProblem& problem, const TripleProcess& u_n,
                          const TimeGrid& grid, const BrownianBundle& noise,
                          const RegressionConfig& reg, int workers = 1);

/// One Picard iterate: X stays u_n's forward component (the Euler solution —
/// the forward equation does not involve Y or Z), and (Y, Z) solve the BSDE
/// with the driver frozen at u_n's values.
TripleProcess picard_step(const FbsdeProblem& problem, const TripleProcess& u_n,
                          const TimeGrid& grid, const BrownianBundle& noise,
                          const RegressionConfig& reg, int workers = 1);

/// Everything measured about one iterate. Errors are against the reference
/// solution when one was supplied, NaN otherwise; ratio and succ_diff are NaN
/// at iterate 0.
struct IterationStats {
    int iter = 0;
    double err_X = 0.0;         // S2 norm of X - X_n
    double err_Y = 0.0;         // S2 norm of Y - Y_n
    double err_Z = 0.0;         // H2 norm of Z - Z_n
    double combined = 0.0;      // sqrt(err_X^2 + err_Y^2 + err_Z^2)
    double weighted_alpha = 0.0; // weighted (Y,Z) error norm at the report alpha
    double ratio = 0.0;         // combined_n / combined_{n-1}
    double residual = 0.0;      // residual norm of the solution map at u_n
    double succ_diff = 0.0;     // ||u_n - u_{n-1}|| combined
};

struct IterationConfig {
    int iters = 6;
    double eps = 0.5;   // target contraction factor (also feeds the constants)
    double slack = 0.1; // allowed excess over eps in measured ratios
    double floor = 0.0; // measurement floor; ratio checks need errors > 10x this
    bool early_stop = true; // stop once the error vs the reference drops below floor
    bool track_residual = true;
    RegressionConfig regression;
    int workers = 1;
};

/// Full history of a run: stats per iterate (index = iterate number), the
/// final iterate, and which pre-floor iterations broke the ratio bound
/// eps + slack.
struct ConvergenceRecord {
    std::vector<IterationStats> iterations;
    TripleProcess last;
    TimeGrid grid;
    int paths = 0;
    std::uint64_t seed = 0;
    double eps = 0.5;
    double slack = 0.1;
    double floor = 0.0;
    double alpha = 0.0;
    std::vector<int> ratio_violations;

    bool ratios_ok() const { return ratio_violations.empty(); }
};

/// Newton iteration from `start` (default: X = Euler solution, Y = Z = 0).
/// Stops after cfg.iters steps or once the combined error falls below
/// cfg.floor, whichever comes first. Ratios are checked against
/// eps + slack wherever both endpoints sit above 10x floor.
ConvergenceRecord run_newton(const FbsdeProblem& problem, const TimeGrid& grid,
                             const BrownianBundle& noise, const IterationConfig& cfg,
                             const TripleProcess* reference = nullptr,
                             const TripleProcess* start = nullptr);

/// Picard iteration with the same recording conventions as run_newton.
ConvergenceRecord run_picard(const FbsdeProblem& problem, const TimeGrid& grid,
                             const BrownianBundle& noise, const IterationConfig& cfg,
                             const TripleProcess* reference = nullptr,
                             const TripleProcess* start = nullptr);

} // namespace fbsde
