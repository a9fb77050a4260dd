#pragma once

#include "fbsde/grid.hpp"
#include "fbsde/noise.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/process.hpp"
#include "fbsde/regression.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fbsde {

/// A problem instance with a reference solution: either closed-form maps
/// Y*(t,x), Z*(t,x), or a refined-resolution run of the solver itself.
struct BenchmarkCase {
    enum class OracleKind { analytic, fine_grid };

    std::string id;
    std::string summary;
    FbsdeProblem problem;
    double horizon = 1.0;
    OracleKind kind = OracleKind::analytic;

    using SolutionMap = std::function<void(double t, std::span<const double> x,
                                           std::span<double> out)>;
    SolutionMap y_star; // set iff kind == analytic
    SolutionMap z_star;

    int default_steps = 100;
    int default_paths = 10000;

    // fine-grid reference recipe
    int refine_time = 16;
    int refine_paths = 4;
    int oracle_degree = 3;
    double oracle_tol = 1e-4;   // successive-difference stopping threshold
    int oracle_max_iters = 12;
};

/// The built-in cases, stable ids:
///   P-ZERO   everything zero except sigma = 1: Y* = Z* = 0
///   P-AFF    f = 1, phi(x) = x: Y* = x + (1-t), Z* = 1
///   P-AFFY   f = y: Y* = e^{1-t} x, Z* = e^{1-t}
///   P-AFFY4  f = 4y: Y* = e^{4(1-t)} x, Z* = e^{4(1-t)}
///   P-NL     b = sin x, f = cos y + sin(z)/2, phi = tanh x: fine-grid oracle
///   P-SDE    b = sin x with trivial backward data (forward iteration case)
///   P-2D     d = 2, k = 2 shape-coverage case with constant matrix sigma
const std::vector<BenchmarkCase>& catalog();

/// Case lookup by id; throws std::invalid_argument for unknown ids, listing
/// the known ones.
const BenchmarkCase& find_case(const std::string& id);

struct OracleStats {
    int fine_steps = 0;
    int fine_paths = 0;
    int iterations = 0;            // refined-run iterations (0 for analytic)
    double final_succ_diff = 0.0;  // last successive difference of the refined run
    double self_consistency = 0.0; // gap vs the half-refinement recipe
};

/// Reference triple on (grid, noise). Analytic cases evaluate (Y*, Z*) along
/// the Euler X simulated on `noise`. Fine-grid cases rerun the refined recipe
/// on the fine bundle that `noise` aggregates — so `noise` must equal the
/// aggregation of make_noise(noise.seed, fine grid, refine_paths * paths)
/// (use build_oracle to construct the pair); anything else is rejected.
/// Throws oracle_failure_error if the refined run does not reach its
/// successive-difference threshold.
TripleProcess oracle_solution(const BenchmarkCase& bc, const TimeGrid& grid,
                              const BrownianBundle& noise, int workers = 1,
                              OracleStats* stats = nullptr);

/// An oracle and the coarse noise consistent with its construction, plus the
/// measurement floor below which no convergence assertion is meaningful.
struct OracleBundle {
    TripleProcess solution;
    BrownianBundle noise;  // use this bundle for the coarse runs
    double probe = 0.0;    // one newton_step away from the oracle, combined norm
    double floor = 0.0;    // max(self_consistency, probe)
    OracleStats stats;
};

/// Generates the fine bundle for (seed, grid, paths), aggregates the coarse
/// bundle from it, evaluates or runs the reference, and estimates the floor:
/// the half-refinement self-consistency gap plus a one-step probe under the
/// coarse regression config.
OracleBundle build_oracle(const BenchmarkCase& bc, const TimeGrid& grid, int paths,
                          std::uint64_t seed, const RegressionConfig& coarse_reg,
                          int workers = 1);

} // namespace fbsde
