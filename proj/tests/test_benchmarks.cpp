#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fbsde/benchmarks.hpp"
#include "fbsde/errors.hpp"
#include "fbsde/noise.hpp"
#include "fbsde/norms.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/residual.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

using namespace fbsde;

TEST_CASE("the catalog carries exactly the documented cases") {
    std::set<std::string> ids;
    for (const BenchmarkCase& bc : catalog()) ids.insert(bc.id);
    const std::set<std::string> expected{"P-ZERO", "P-AFF", "P-AFFY", "P-AFFY4",
                                         "P-NL",   "P-SDE", "P-2D"};
    CHECK(ids == expected);
    for (const BenchmarkCase& bc : catalog()) {
        CHECK(!bc.summary.empty());
        CHECK(bc.horizon > 0.0);
        CHECK(bc.default_steps >= 1);
        CHECK(bc.default_paths >= 1);
        CHECK(bc.problem.x0.size() == static_cast<std::size_t>(bc.problem.dim_x));
    }
}

TEST_CASE("unknown ids are rejected with the catalog in the message") {
    try {
        find_case("P-NOPE");
        CHECK(false);
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("P-NOPE") != std::string::npos);
        CHECK(msg.find("P-AFF") != std::string::npos);
    }
}

TEST_CASE("every case passes the jacobian and shape self-check") {
    for (const BenchmarkCase& bc : catalog()) {
        const TimeGrid g(bc.horizon, 16);
        CHECK_NOTHROW(check_problem(bc.problem, g, 50, 2024));
    }
}

TEST_CASE("analytic references satisfy the discrete equations to first order") {
    for (const BenchmarkCase& bc : catalog()) {
        if (bc.kind != BenchmarkCase::OracleKind::analytic) continue;
        CAPTURE(bc.id);
        double r[2];
        const int Ns[2] = {64, 128};
        for (int k = 0; k < 2; ++k) {
            const TimeGrid g(bc.horizon, Ns[k]);
            const BrownianBundle noise = make_noise(91, g, 4000, bc.problem.dim_w);
            const TripleProcess u = oracle_solution(bc, g, noise);
            r[k] = residual_norm(evaluate_residual(bc.problem, u, noise));
        }
        // halving the step halves the defect — or both sit at roundoff
        CHECK(r[0] <= std::max(3.0 * r[1], 1e-10));
    }
}

TEST_CASE("analytic bundles use the probe as their floor") {
    const BenchmarkCase& bc = find_case("P-AFF");
    const TimeGrid g(bc.horizon, 50);
    const OracleBundle ob = build_oracle(bc, g, 3000, 12, RegressionConfig{});
    CHECK(ob.stats.self_consistency == 0.0); // no recipe to cross-check
    CHECK(ob.stats.iterations == 0);
    CHECK(ob.probe > 0.0);
    CHECK(ob.floor == ob.probe);
    CHECK(ob.noise.grid == g);
    CHECK(ob.noise.paths == 3000);
    CHECK(ob.solution.X.paths() == 3000);
    CHECK(ob.solution.X.nodes() == g.node_count());
}

TEST_CASE("refined bundles record the recipe that produced them") {
    const BenchmarkCase& bc = find_case("P-NL");
    const TimeGrid g(bc.horizon, 20);
    const OracleBundle ob = build_oracle(bc, g, 500, 13, RegressionConfig{});
    CHECK(ob.stats.fine_steps == 20 * bc.refine_time);
    CHECK(ob.stats.fine_paths == 500 * bc.refine_paths);
    CHECK(ob.stats.iterations >= 1);
    CHECK(ob.stats.final_succ_diff <= bc.oracle_tol);
    CHECK(ob.stats.self_consistency > 0.0);
    CHECK(ob.floor == std::max(ob.stats.self_consistency, ob.probe));
    // the coarse bundle aggregates the fine one, so its increments are sums
    // of refine_time fine gaussians: still mean zero, variance dt
    const double dt = g.dt();
    double acc = 0.0, sq = 0.0;
    int n = 0;
    for (int m = 0; m < ob.noise.paths; ++m)
        for (int i = 0; i < g.steps; ++i) {
            acc += ob.noise.at(m, i)[0];
            sq += ob.noise.at(m, i)[0] * ob.noise.at(m, i)[0];
            ++n;
        }
    const double mean = acc / n;
    CHECK(std::fabs(mean) <= 5.0 * std::sqrt(dt / n));
    CHECK(std::fabs(sq / n - dt) <= 5.0 * dt * std::sqrt(2.0 / n));
}

TEST_CASE("a directly generated bundle is rejected for a refined reference") {
    const BenchmarkCase& bc = find_case("P-NL");
    const TimeGrid g(bc.horizon, 20);
    const BrownianBundle direct = make_noise(13, g, 500, 1); // not an aggregation
    CHECK_THROWS_AS(oracle_solution(bc, g, direct), std::invalid_argument);
}

TEST_CASE("an unreachable stopping threshold fails loudly") {
    BenchmarkCase bc = find_case("P-NL"); // copy, then break the recipe
    bc.oracle_tol = 1e-20;
    bc.oracle_max_iters = 2;
    const TimeGrid g(bc.horizon, 10);
    CHECK_THROWS_AS(build_oracle(bc, g, 200, 14, RegressionConfig{}),
                    oracle_failure_error);
}

TEST_CASE("the two-dimensional case produces correctly shaped references") {
    const BenchmarkCase& bc = find_case("P-2D");
    REQUIRE(bc.problem.dim_x == 2);
    REQUIRE(bc.problem.dim_w == 2);
    const TimeGrid g(bc.horizon, 32);
    const BrownianBundle noise = make_noise(15, g, 1000, 2);
    const TripleProcess u = oracle_solution(bc, g, noise);
    CHECK(u.X.dim() == 2);
    CHECK(u.Y.dim() == bc.problem.dim_y);
    CHECK(u.Z.dim() == bc.problem.dim_y * 2);
    for (double v : u.Y.raw()) REQUIRE(std::isfinite(v));
    for (double v : u.Z.raw()) REQUIRE(std::isfinite(v));
    // and the reference actually solves the discrete system to first order
    const ResidualProcess r = evaluate_residual(bc.problem, u, noise);
    CHECK(residual_norm(r) <= 1.0); // coarse sanity: defect is O(dt), not O(1)
}

TEST_CASE("zero-data case has the zero solution and a tiny floor") {
    const BenchmarkCase& bc = find_case("P-ZERO");
    const TimeGrid g(bc.horizon, 40);
    const OracleBundle ob = build_oracle(bc, g, 1000, 16, RegressionConfig{});
    for (double v : ob.solution.Y.raw()) REQUIRE(v == 0.0);
    for (double v : ob.solution.Z.raw()) REQUIRE(v == 0.0);
    CHECK(ob.floor <= 1e-8);
}
