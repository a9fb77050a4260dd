#include "fbsde/newton.hpp"

#include "fbsde/forward.hpp"
#include "fbsde/norms.hpp"
#include "fbsde/residual.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fbsde {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_finite(const PathProcess& p, const char* what) {
    for (double v : p.raw())
        if (!std::isfinite(v))
            throw std::invalid_argument(std::string("linearize: reference iterate has non-finite ") +
                                        what + " values");
}

TripleProcess triple_difference(const TripleProcess& a, const TripleProcess& b) {
    TripleProcess d;
    d.grid = a.grid;
    d.X = difference(a.X, b.X);
    d.Y = difference(a.Y, b.Y);
    d.Z = difference(a.Z, b.Z);
    return d;
}

void require_triple(const FbsdeProblem& problem, const TripleProcess& u, const TimeGrid& grid,
                    int paths, const char* who) {
    if (!(u.grid == grid))
        throw std::invalid_argument(std::string(who) + ": iterate grid does not match");
    const int nodes = grid.node_count();
    if (u.X.paths() != paths || u.X.nodes() != nodes || u.X.dim() != problem.dim_x ||
        u.Y.paths() != paths || u.Y.nodes() != nodes || u.Y.dim() != problem.dim_y ||
        u.Z.paths() != paths || u.Z.nodes() != nodes || u.Z.dim() != problem.dim_y * problem.dim_w)
        throw std::invalid_argument(std::string(who) + ": iterate shape does not match");
}

ConvergenceRecord run_iteration(const FbsdeProblem& problem, const TimeGrid& grid,
                                const BrownianBundle& noise, const IterationConfig& cfg,
                                const TripleProcess* reference, const TripleProcess* start,
                                bool newton) {
    if (cfg.iters < 1) throw std::invalid_argument("run_newton: iters must be >= 1");
    const int M = noise.paths;

    const ConstantsReport consts = evaluate_constants(problem, grid.horizon, cfg.eps);

    ConvergenceRecord rec;
    rec.grid = grid;
    rec.paths = M;
    rec.seed = noise.seed;
    rec.eps = cfg.eps;
    rec.slack = cfg.slack;
    rec.floor = cfg.floor;
    rec.alpha = consts.alpha;

    if (reference) require_triple(problem, *reference, grid, M, "run_newton reference");

    TripleProcess u;
    if (start) {
        require_triple(problem, *start, grid, M, "run_newton start");
        u = *start;
    } else {
        u = TripleProcess::zeros(grid, M, problem.dim_x, problem.dim_y, problem.dim_w);
        u.X = simulate_euler(problem, grid, noise, cfg.workers);
    }

    auto measure = [&](const TripleProcess& iterate, int n) {
        IterationStats st;
        st.iter = n;
        if (reference) {
            const TripleProcess d = triple_difference(*reference, iterate);
            st.err_X = estimate_s2_norm(d.X);
            st.err_Y = estimate_s2_norm(d.Y);
            st.err_Z = estimate_h2_norm(d.Z, grid);
            st.combined = std::sqrt(st.err_X * st.err_X + st.err_Y * st.err_Y +
                                    st.err_Z * st.err_Z);
            st.weighted_alpha = estimate_weighted_norm(d.Y, d.Z, rec.alpha, grid);
        } else {
            st.err_X = st.err_Y = st.err_Z = st.combined = st.weighted_alpha = kNaN;
        }
        st.residual = cfg.track_residual
                          ? residual_norm(evaluate_residual(problem, iterate, noise, cfg.workers))
                          : kNaN;
        st.ratio = kNaN;
        st.succ_diff = kNaN;
        rec.iterations.push_back(st);
    };

    measure(u, 0);
    for (int n = 1; n <= cfg.iters; ++n) {
        if (cfg.early_stop && reference && rec.iterations.back().combined < cfg.floor) break;
        TripleProcess next = newton ? newton_step(problem, u, grid, noise, cfg.regression,
                                                  cfg.workers)
                                    : picard_step(problem, u, grid, noise, cfg.regression,
                                                  cfg.workers);
        const double sd = combined_norm(triple_difference(next, u));
        u = std::move(next);
        measure(u, n);
        rec.iterations.back().succ_diff = sd;
        if (reference) {
            const double prev = rec.iterations[n - 1].combined;
            rec.iterations.back().ratio = prev > 0.0 ? rec.iterations[n].combined / prev : kNaN;
        }
    }

    if (reference) {
        const double gate = 10.0 * cfg.floor;
        for (std::size_t n = 1; n < rec.iterations.size(); ++n) {
            const double prev = rec.iterations[n - 1].combined;
            const double cur = rec.iterations[n].combined;
            if (prev > gate && cur > gate && !(rec.iterations[n].ratio <= cfg.eps + cfg.slack))
                rec.ratio_violations.push_back(static_cast<int>(n));
        }
    }

    rec.last = std::move(u);
    return rec;
}

} // namespace

void LinearizedProblem::drift(int m, int i, std::span<const double> x,
                              std::span<double> out) const {
    const int d = dim_x();
    const double t = base->grid.node(i);
    const auto xb = base->X.at(m, i);
    std::vector<double> jac(static_cast<std::size_t>(d) * d);
    problem->drift(t, xb, out);
    problem->drift_dx(t, xb, jac);
    for (int r = 0; r < d; ++r) {
        double acc = out[r];
        for (int c = 0; c < d; ++c) acc += jac[r * d + c] * (x[c] - xb[c]);
        out[r] = acc;
    }
}

void LinearizedProblem::diffusion(int m, int i, std::span<const double> x,
                                  std::span<double> out) const {
    const int d = dim_x(), k = dim_w();
    const double t = base->grid.node(i);
    const auto xb = base->X.at(m, i);
    std::vector<double> jac(static_cast<std::size_t>(d) * k * d);
    problem->diffusion(t, xb, out);
    problem->diffusion_dx(t, xb, jac);
    for (int r = 0; r < d * k; ++r) {
        double acc = out[r];
        for (int c = 0; c < d; ++c) acc += jac[r * d + c] * (x[c] - xb[c]);
        out[r] = acc;
    }
}

void LinearizedProblem::driver(int m, int i, std::span<const double> x, std::span<const double> y,
                               std::span<const double> z, std::span<double> out) const {
    const int d = dim_x(), my = dim_y(), k = dim_w();
    const double t = base->grid.node(i);
    const auto xb = base->X.at(m, i);
    const auto yb = base->Y.at(m, i);
    const auto zb = base->Z.at(m, i);
    std::vector<double> fx(static_cast<std::size_t>(my) * d), fy(static_cast<std::size_t>(my) * my),
        fz(static_cast<std::size_t>(my) * my * k);
    problem->eval_driver_full(t, xb, yb, zb, out, fx, fy, fz);
    for (int r = 0; r < my; ++r) {
        double acc = out[r];
        for (int c = 0; c < d; ++c) acc += fx[r * d + c] * (x[c] - xb[c]);
        for (int c = 0; c < my; ++c) acc += fy[r * my + c] * (y[c] - yb[c]);
        for (int c = 0; c < my * k; ++c) acc += fz[r * my * k + c] * (z[c] - zb[c]);
        out[r] = acc;
    }
}

void LinearizedProblem::terminal(int m, std::span<const double> x, std::span<double> out) const {
    const int d = dim_x(), my = dim_y();
    const int last = base->grid.steps;
    const auto xb = base->X.at(m, last);
    std::vector<double> jac(static_cast<std::size_t>(my) * d);
    problem->terminal(xb, out);
    problem->terminal_dx(xb, jac);
    for (int r = 0; r < my; ++r) {
        double acc = out[r];
        for (int c = 0; c < d; ++c) acc += jac[r * d + c] * (x[c] - xb[c]);
        out[r] = acc;
    }
}

LinearizedProblem linearize(const FbsdeProblem& problem, const TripleProcess& u_n) {
    const int paths = u_n.X.paths();
    require_triple(problem, u_n, u_n.grid, paths, "linearize");
    require_finite(u_n.X, "X");
    require_finite(u_n.Y, "Y");
    require_finite(u_n.Z, "Z");
    LinearizedProblem lin;
    lin.problem = &problem;
    lin.base = &u_n;
    return lin;
}

TripleProcess newton_step(const FbsdeProblem& problem, const TripleProcess& u_n,
                          const TimeGrid& grid, const BrownianBundle& noise,
                          const RegressionConfig& reg, int workers) {
    if (!(u_n.grid == grid))
        throw std::invalid_argument("newton_step: iterate grid does not match");
    const LinearizedProblem lin = linearize(problem, u_n);
    PathProcess x_next = forward_newton_step(lin, grid, noise, workers);
    BsdeSolution sol = solve_linear_bsde(lin, x_next, grid, noise, reg, workers);
    TripleProcess out;
    out.grid = grid;
    out.X = std::move(x_next);
    out.Y = std::move(sol.Y);
    out.Z = std::move(sol.Z);
    return out;
}

TripleProcess picard_step(const FbsdeProblem& problem, const TripleProcess& u_n,
                          const TimeGrid& grid, const BrownianBundle& noise,
                          const RegressionConfig& reg, int workers) {
    if (!(u_n.grid == grid))
        throw std::invalid_argument("picard_step: iterate grid does not match");
    require_triple(problem, u_n, grid, u_n.X.paths(), "picard_step");
    BsdeSolution sol = solve_frozen_bsde(problem, u_n.X, u_n.Y, u_n.Z, grid, noise, reg, workers);
    TripleProcess out;
    out.grid = grid;
    out.X = u_n.X;
    out.Y = std::move(sol.Y);
    out.Z = std::move(sol.Z);
    return out;
}

ConvergenceRecord run_newton(const FbsdeProblem& problem, const TimeGrid& grid,
                             const BrownianBundle& noise, const IterationConfig& cfg,
                             const TripleProcess* reference, const TripleProcess* start) {
    return run_iteration(problem, grid, noise, cfg, reference, start, true);
}

ConvergenceRecord run_picard(const FbsdeProblem& problem, const TimeGrid& grid,
                             const BrownianBundle& noise, const IterationConfig& cfg,
                             const TripleProcess* reference, const TripleProcess* start) {
    return run_iteration(problem, grid, noise, cfg, reference, start, false);
}

} // namespace fbsde
