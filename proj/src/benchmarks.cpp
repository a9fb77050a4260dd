#include "fbsde/benchmarks.hpp"

#include "fbsde/errors.hpp"
#include "fbsde/forward.hpp"
#include "fbsde/newton.hpp"
#include "fbsde/norms.hpp"
#include "fbsde/parallel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace fbsde {

namespace {

using Span = std::span<const double>;
using Out = std::span<double>;

void fill_zero(Out out) {
    for (double& v : out) v = 0.0;
}

// d = m = k = 1 skeleton: b = 0, sigma = 1, all Jacobians 0. Cases override
// what they need.
FbsdeProblem scalar_skeleton() {
    FbsdeProblem p;
    p.dim_x = p.dim_y = p.dim_w = 1;
    p.x0 = {0.0};
    p.drift = [](double, Span, Out out) { out[0] = 0.0; };
    p.diffusion = [](double, Span, Out out) { out[0] = 1.0; };
    p.drift_dx = [](double, Span, Out out) { out[0] = 0.0; };
    p.diffusion_dx = [](double, Span, Out out) { out[0] = 0.0; };
    p.driver = [](double, Span, Span, Span, Out out) { out[0] = 0.0; };
    p.driver_dx = [](double, Span, Span, Span, Out out) { out[0] = 0.0; };
    p.driver_dy = [](double, Span, Span, Span, Out out) { out[0] = 0.0; };
    p.driver_dz = [](double, Span, Span, Span, Out out) { out[0] = 0.0; };
    p.terminal = [](Span, Out out) { out[0] = 0.0; };
    p.terminal_dx = [](Span, Out out) { out[0] = 0.0; };
    return p;
}

BenchmarkCase make_p_zero() {
    BenchmarkCase bc;
    bc.id = "P-ZERO";
    bc.summary = "b = 0, sigma = 1, f = 0, phi = 0: Y* = Z* = 0";
    bc.problem = scalar_skeleton();
    bc.kind = BenchmarkCase::OracleKind::analytic;
    bc.y_star = [](double, Span, Out out) { out[0] = 0.0; };
    bc.z_star = [](double, Span, Out out) { out[0] = 0.0; };
    bc.default_steps = 100;
    bc.default_paths = 2000;
    return bc;
}

BenchmarkCase make_p_aff() {
    BenchmarkCase bc;
    bc.id = "P-AFF";
    bc.summary = "f = 1, phi(x) = x: Y* = x + (1 - t), Z* = 1";
    bc.problem = scalar_skeleton();
    bc.problem.driver = [](double, Span, Span, Span, Out out) { out[0] = 1.0; };
    bc.problem.terminal = [](Span x, Out out) { out[0] = x[0]; };
    bc.problem.terminal_dx = [](Span, Out out) { out[0] = 1.0; };
    bc.problem.bound_terminal = 1.0;
    bc.kind = BenchmarkCase::OracleKind::analytic;
    bc.y_star = [](double t, Span x, Out out) { out[0] = x[0] + (1.0 - t); };
    bc.z_star = [](double, Span, Out out) { out[0] = 1.0; };
    bc.default_steps = 100;
    bc.default_paths = 10000;
    return bc;
}

BenchmarkCase make_p_affy(double a, const std::string& id) {
    BenchmarkCase bc;
    bc.id = id;
    bc.summary = "f = " + std::to_string(static_cast<int>(a)) +
                 "*y, phi(x) = x: Y* = e^{a(1-t)} x, Z* = e^{a(1-t)}";
    bc.problem = scalar_skeleton();
    bc.problem.driver = [a](double, Span, Span y, Span, Out out) { out[0] = a * y[0]; };
    bc.problem.driver_dy = [a](double, Span, Span, Span, Out out) { out[0] = a; };
    bc.problem.terminal = [](Span x, Out out) { out[0] = x[0]; };
    bc.problem.terminal_dx = [](Span, Out out) { out[0] = 1.0; };
    bc.problem.bound_driver = a;
    bc.problem.bound_terminal = 1.0;
    bc.kind = BenchmarkCase::OracleKind::analytic;
    bc.y_star = [a](double t, Span x, Out out) { out[0] = std::exp(a * (1.0 - t)) * x[0]; };
    bc.z_star = [a](double t, Span, Out out) { out[0] = std::exp(a * (1.0 - t)); };
    bc.default_steps = 100;
    bc.default_paths = 10000;
    return bc;
}

BenchmarkCase make_p_nl() {
    BenchmarkCase bc;
    bc.id = "P-NL";
    bc.summary = "b = sin x, f = cos y + sin(z)/2, phi = tanh x: fine-grid reference";
    bc.problem = scalar_skeleton();
    bc.problem.drift = [](double, Span x, Out out) { out[0] = std::sin(x[0]); };
    bc.problem.drift_dx = [](double, Span x, Out out) { out[0] = std::cos(x[0]); };
    bc.problem.driver = [](double, Span, Span y, Span z, Out out) {
        out[0] = std::cos(y[0]) + 0.5 * std::sin(z[0]);
    };
    bc.problem.driver_dy = [](double, Span, Span y, Span, Out out) { out[0] = -std::sin(y[0]); };
    bc.problem.driver_dz = [](double, Span, Span, Span z, Out out) { out[0] = 0.5 * std::cos(z[0]); };
    bc.problem.terminal = [](Span x, Out out) { out[0] = std::tanh(x[0]); };
    bc.problem.terminal_dx = [](Span x, Out out) {
        const double c = std::cosh(x[0]);
        out[0] = 1.0 / (c * c);
    };
    bc.problem.driver_full = [](double, Span, Span y, Span z, Out f, Out fx, Out fy, Out fz) {
        const double sy = std::sin(y[0]), cy = std::cos(y[0]);
        const double sz = std::sin(z[0]), cz = std::cos(z[0]);
        f[0] = cy + 0.5 * sz;
        fx[0] = 0.0;
        fy[0] = -sy;
        fz[0] = 0.5 * cz;
    };
    bc.problem.forward_full = [](double, Span x, Out b, Out bx, Out s, Out sx) {
        b[0] = std::sin(x[0]);
        bx[0] = std::cos(x[0]);
        s[0] = 1.0;
        sx[0] = 0.0;
    };
    bc.problem.bound_drift = 1.0;
    bc.problem.bound_driver = std::sqrt(1.25); // sup |(0, -sin y, cos(z)/2)|
    bc.problem.bound_terminal = 1.0;
    bc.kind = BenchmarkCase::OracleKind::fine_grid;
    bc.default_steps = 100;
    bc.default_paths = 5000;
    return bc;
}

BenchmarkCase make_p_sde() {
    BenchmarkCase bc;
    bc.id = "P-SDE";
    bc.summary = "b = sin x with trivial backward data: forward-iteration case";
    bc.problem = scalar_skeleton();
    bc.problem.drift = [](double, Span x, Out out) { out[0] = std::sin(x[0]); };
    bc.problem.drift_dx = [](double, Span x, Out out) { out[0] = std::cos(x[0]); };
    bc.problem.forward_full = [](double, Span x, Out b, Out bx, Out s, Out sx) {
        b[0] = std::sin(x[0]);
        bx[0] = std::cos(x[0]);
        s[0] = 1.0;
        sx[0] = 0.0;
    };
    bc.problem.bound_drift = 1.0;
    bc.kind = BenchmarkCase::OracleKind::analytic;
    bc.y_star = [](double, Span, Out out) { out[0] = 0.0; };
    bc.z_star = [](double, Span, Out out) { out[0] = 0.0; };
    bc.default_steps = 192;
    bc.default_paths = 4000;
    return bc;
}

BenchmarkCase make_p_2d() {
    BenchmarkCase bc;
    bc.id = "P-2D";
    bc.summary = "d = 2, k = 2, constant matrix sigma, phi = x1 + x2: shape coverage";
    FbsdeProblem p;
    p.dim_x = 2;
    p.dim_y = 1;
    p.dim_w = 2;
    p.x0 = {0.0, 0.0};
    p.drift = [](double, Span, Out out) { fill_zero(out); };
    p.drift_dx = [](double, Span, Out out) { fill_zero(out); };
    // sigma rows: dX1 = dW1, dX2 = 0.3 dW1 + 0.8 dW2
    p.diffusion = [](double, Span, Out out) {
        out[0] = 1.0;
        out[1] = 0.0;
        out[2] = 0.3;
        out[3] = 0.8;
    };
    p.diffusion_dx = [](double, Span, Out out) { fill_zero(out); };
    p.driver = [](double, Span, Span, Span, Out out) { out[0] = 0.0; };
    p.driver_dx = [](double, Span, Span, Span, Out out) { fill_zero(out); };
    p.driver_dy = [](double, Span, Span, Span, Out out) { out[0] = 0.0; };
    p.driver_dz = [](double, Span, Span, Span, Out out) { fill_zero(out); };
    p.terminal = [](Span x, Out out) { out[0] = x[0] + x[1]; };
    p.terminal_dx = [](Span, Out out) {
        out[0] = 1.0;
        out[1] = 1.0;
    };
    p.bound_terminal = std::sqrt(2.0);
    bc.problem = std::move(p);
    bc.kind = BenchmarkCase::OracleKind::analytic;
    bc.y_star = [](double, Span x, Out out) { out[0] = x[0] + x[1]; };
    bc.z_star = [](double, Span, Out out) {
        out[0] = 1.3;
        out[1] = 0.8;
    };
    bc.default_steps = 50;
    bc.default_paths = 2000;
    return bc;
}

TripleProcess downsample(const TripleProcess& fine, const TimeGrid& coarse, int factor,
                         int paths) {
    TripleProcess out;
    out.grid = coarse;
    out.X = PathProcess(paths, coarse.node_count(), fine.X.dim());
    out.Y = PathProcess(paths, coarse.node_count(), fine.Y.dim());
    out.Z = PathProcess(paths, coarse.node_count(), fine.Z.dim());
    for (int m = 0; m < paths; ++m)
        for (int i = 0; i <= coarse.steps; ++i) {
            const int fi = i * factor;
            auto cp = [&](const PathProcess& src, PathProcess& dst) {
                auto s = src.at(m, fi);
                auto d = dst.at(m, i);
                std::copy(s.begin(), s.end(), d.begin());
            };
            cp(fine.X, out.X);
            cp(fine.Y, out.Y);
            cp(fine.Z, out.Z);
        }
    return out;
}

// Newton iteration at the refined resolution until successive differences
// fall below the case's threshold.
TripleProcess run_fine_recipe(const BenchmarkCase& bc, const TimeGrid& fine_grid,
                              const BrownianBundle& fine_noise, int workers,
                              int* iterations_out, double* succ_diff_out) {
    RegressionConfig reg;
    reg.degree = bc.oracle_degree;
    // Current-state features: for a decoupled problem X never changes across
    // iterates and (Y_n, Z_n) are functions of it by construction, so X alone
    // is a sufficient regression state. With a fixed basis the iteration map
    // is deterministic and successive differences genuinely contract, instead
    // of stalling at the noise scale of re-fitted iterate-dependent features.
    reg.feature_map = RegressionConfig::FeatureMap::CurrentState;
    const FbsdeProblem& p = bc.problem;
    TripleProcess u = TripleProcess::zeros(fine_grid, fine_noise.paths, p.dim_x, p.dim_y, p.dim_w);
    u.X = simulate_euler(p, fine_grid, fine_noise, workers);
    double sd = std::numeric_limits<double>::infinity();
    int performed = 0;
    while (performed < bc.oracle_max_iters) {
        TripleProcess next = newton_step(p, u, fine_grid, fine_noise, reg, workers);
        ++performed;
        sd = combined_diff_norm(next, u);
        u = std::move(next);
        if (sd < bc.oracle_tol) break;
    }
    if (!(sd < bc.oracle_tol))
        throw oracle_failure_error("oracle_solution: refined reference for " + bc.id +
                                   " stalled at successive difference " + std::to_string(sd) +
                                   " after " + std::to_string(performed) +
                                   " iterations (threshold " + std::to_string(bc.oracle_tol) + ")");
    if (iterations_out) *iterations_out = performed;
    if (succ_diff_out) *succ_diff_out = sd;
    return u;
}

} // namespace

const std::vector<BenchmarkCase>& catalog() {
    static const std::vector<BenchmarkCase> cases = [] {
        std::vector<BenchmarkCase> v;
        v.push_back(make_p_zero());
        v.push_back(make_p_aff());
        v.push_back(make_p_affy(1.0, "P-AFFY"));
        v.push_back(make_p_affy(4.0, "P-AFFY4"));
        v.push_back(make_p_nl());
        v.push_back(make_p_sde());
        v.push_back(make_p_2d());
        return v;
    }();
    return cases;
}

const BenchmarkCase& find_case(const std::string& id) {
    for (const auto& bc : catalog())
        if (bc.id == id) return bc;
    std::string known;
    for (const auto& bc : catalog()) {
        if (!known.empty()) known += ", ";
        known += bc.id;
    }
    throw std::invalid_argument("unknown benchmark id '" + id + "' (known: " + known + ")");
}

TripleProcess oracle_solution(const BenchmarkCase& bc, const TimeGrid& grid,
                              const BrownianBundle& noise, int workers, OracleStats* stats) {
    const FbsdeProblem& p = bc.problem;
    if (grid.horizon != bc.horizon)
        throw std::invalid_argument("oracle_solution: " + bc.id + " is defined on horizon " +
                                    std::to_string(bc.horizon));
    if (!(noise.grid == grid) || noise.dim != p.dim_w)
        throw std::invalid_argument("oracle_solution: noise does not match the grid or dim_w");

    if (bc.kind == BenchmarkCase::OracleKind::analytic) {
        TripleProcess u;
        u.grid = grid;
        u.X = simulate_euler(p, grid, noise, workers);
        u.Y = PathProcess(noise.paths, grid.node_count(), p.dim_y);
        u.Z = PathProcess(noise.paths, grid.node_count(), p.dim_y * p.dim_w);
        parallel_chunks(noise.paths, workers, [&](int, std::int64_t begin, std::int64_t end) {
            for (std::int64_t m = begin; m < end; ++m)
                for (int i = 0; i <= grid.steps; ++i) {
                    const double t = grid.node(i);
                    const auto x = u.X.at(static_cast<int>(m), i);
                    bc.y_star(t, x, u.Y.at(static_cast<int>(m), i));
                    bc.z_star(t, x, u.Z.at(static_cast<int>(m), i));
                }
        });
        if (stats) {
            *stats = OracleStats{};
            stats->fine_steps = grid.steps;
            stats->fine_paths = noise.paths;
        }
        return u;
    }

    // Fine-grid reference: rebuild the fine bundle this noise aggregates.
    const TimeGrid fine_grid{grid.horizon, grid.steps * bc.refine_time};
    const int fine_paths = noise.paths * bc.refine_paths;
    const BrownianBundle fine = make_noise(noise.seed, fine_grid, fine_paths, p.dim_w, workers);
    {
        const BrownianBundle check = fine.aggregate(bc.refine_time).take_paths(noise.paths);
        if (check.increments != noise.increments)
            throw std::invalid_argument(
                "oracle_solution: the supplied noise is not the aggregation of the fine bundle "
                "for seed " +
                std::to_string(noise.seed) + " (build the pair with build_oracle)");
    }

    OracleStats st;
    st.fine_steps = fine_grid.steps;
    st.fine_paths = fine_paths;
    TripleProcess u_fine = run_fine_recipe(bc, fine_grid, fine, workers, &st.iterations,
                                           &st.final_succ_diff);

    // Self-consistency: repeat at half the time refinement on a path subset
    // and compare on the coarse nodes.
    if (bc.refine_time % 2 == 0 && bc.refine_time >= 2) {
        const int cp = std::min(1000, noise.paths);
        const BrownianBundle half = fine.take_paths(cp).aggregate(2);
        const TimeGrid half_grid = half.grid;
        TripleProcess u_half = run_fine_recipe(bc, half_grid, half, workers, nullptr, nullptr);
        const TripleProcess a = downsample(u_fine, grid, bc.refine_time, cp);
        const TripleProcess b = downsample(u_half, grid, bc.refine_time / 2, cp);
        st.self_consistency = combined_diff_norm(a, b);
    }

    TripleProcess out = downsample(u_fine, grid, bc.refine_time, noise.paths);
    if (stats) *stats = st;
    return out;
}

OracleBundle build_oracle(const BenchmarkCase& bc, const TimeGrid& grid, int paths,
                          std::uint64_t seed, const RegressionConfig& coarse_reg, int workers) {
    OracleBundle ob;
    if (bc.kind == BenchmarkCase::OracleKind::analytic) {
        ob.noise = make_noise(seed, grid, paths, bc.problem.dim_w, workers);
    } else {
        const TimeGrid fine_grid{grid.horizon, grid.steps * bc.refine_time};
        const BrownianBundle fine =
            make_noise(seed, fine_grid, paths * bc.refine_paths, bc.problem.dim_w, workers);
        ob.noise = fine.aggregate(bc.refine_time).take_paths(paths);
    }
    ob.solution = oracle_solution(bc, grid, ob.noise, workers, &ob.stats);

    const TripleProcess stepped =
        newton_step(bc.problem, ob.solution, grid, ob.noise, coarse_reg, workers);
    ob.probe = combined_diff_norm(stepped, ob.solution);
    ob.floor = std::max(ob.stats.self_consistency, ob.probe);
    return ob;
}

} // namespace fbsde
