#include "fbsde/forward.hpp"

#include "fbsde/errors.hpp"
#include "fbsde/norms.hpp"
#include "fbsde/parallel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbsde {

namespace {

void require_forward_inputs(const FbsdeProblem& problem, const TimeGrid& grid,
                            const BrownianBundle& noise, const char* who) {
    if (static_cast<int>(problem.x0.size()) != problem.dim_x)
        throw std::invalid_argument(std::string(who) + ": x0 dimension does not match dim_x");
    if (!(noise.grid == grid))
        throw std::invalid_argument(std::string(who) + ": noise grid does not match");
    if (noise.dim != problem.dim_w)
        throw std::invalid_argument(std::string(who) + ": noise dimension does not match dim_w");
    if (noise.paths < 1) throw std::invalid_argument(std::string(who) + ": no paths");
}

} // namespace

PathProcess simulate_euler(const FbsdeProblem& problem, const TimeGrid& grid,
                           const BrownianBundle& noise, int workers) {
    require_forward_inputs(problem, grid, noise, "simulate_euler");
    const int d = problem.dim_x, k = problem.dim_w;
    const int M = noise.paths, N = grid.steps;
    const double dt = grid.dt();

    PathProcess X(M, N + 1, d);
    const int nchunks = chunk_count(M);
    std::vector<std::string> errs(nchunks);
    parallel_chunks(M, workers, [&](int c, std::int64_t begin, std::int64_t end) {
        std::vector<double> b(d), sig(static_cast<std::size_t>(d) * k);
        for (std::int64_t m = begin; m < end; ++m) {
            auto x = X.at(static_cast<int>(m), 0);
            for (int j = 0; j < d; ++j) x[j] = problem.x0[j];
            for (int i = 0; i < N; ++i) {
                const double t = grid.node(i);
                auto cur = X.at(static_cast<int>(m), i);
                auto nxt = X.at(static_cast<int>(m), i + 1);
                problem.drift(t, cur, b);
                problem.diffusion(t, cur, sig);
                const auto dw = noise.at(static_cast<int>(m), i);
                bool finite = true;
                for (int r = 0; r < d; ++r) {
                    double acc = cur[r] + b[r] * dt;
                    for (int j = 0; j < k; ++j) acc += sig[r * k + j] * dw[j];
                    nxt[r] = acc;
                    finite = finite && std::isfinite(acc);
                }
                if (!finite) {
                    errs[c] = "simulate_euler: non-finite state at node " + std::to_string(i + 1) +
                              " on path " + std::to_string(m);
                    return;
                }
            }
        }
    });
    for (const auto& e : errs)
        if (!e.empty()) throw numerical_blowup_error(e);
    return X;
}

PathProcess forward_newton_step(const LinearizedProblem& lin, const TimeGrid& grid,
                                const BrownianBundle& noise, int workers) {
    if (lin.problem == nullptr || lin.base == nullptr)
        throw std::invalid_argument("forward_newton_step: linearization is empty");
    const FbsdeProblem& problem = *lin.problem;
    require_forward_inputs(problem, grid, noise, "forward_newton_step");
    const int d = problem.dim_x, k = problem.dim_w;
    const int M = noise.paths, N = grid.steps;
    const double dt = grid.dt();

    const PathProcess& xb = lin.base->X;
    if (xb.paths() != M || xb.nodes() != N + 1 || xb.dim() != d)
        throw std::invalid_argument("forward_newton_step: base iterate shape does not match");
    if (!(lin.base->grid == grid))
        throw std::invalid_argument("forward_newton_step: base iterate grid does not match");
    for (int m = 0; m < M; ++m) {
        auto x0 = xb.at(m, 0);
        for (int j = 0; j < d; ++j)
            if (x0[j] != problem.x0[j])
                throw std::invalid_argument(
                    "forward_newton_step: base iterate does not start at x0 on path " +
                    std::to_string(m));
    }

    PathProcess X(M, N + 1, d);
    const int nchunks = chunk_count(M);
    std::vector<std::string> errs(nchunks);
    parallel_chunks(M, workers, [&](int c, std::int64_t begin, std::int64_t end) {
        std::vector<double> b(d), bx(static_cast<std::size_t>(d) * d);
        std::vector<double> sig(static_cast<std::size_t>(d) * k),
            sx(static_cast<std::size_t>(d) * k * d);
        for (std::int64_t m = begin; m < end; ++m) {
            auto x = X.at(static_cast<int>(m), 0);
            for (int j = 0; j < d; ++j) x[j] = problem.x0[j];
            for (int i = 0; i < N; ++i) {
                const double t = grid.node(i);
                auto cur = X.at(static_cast<int>(m), i);
                auto nxt = X.at(static_cast<int>(m), i + 1);
                auto ref = xb.at(static_cast<int>(m), i);
                problem.eval_forward_full(t, ref, b, bx, sig, sx);
                const auto dw = noise.at(static_cast<int>(m), i);
                bool finite = true;
                for (int r = 0; r < d; ++r) {
                    // affine drift b_n(cur) = b(ref) + b'(ref)(cur - ref)
                    double bn = b[r];
                    for (int l = 0; l < d; ++l) bn += bx[r * d + l] * (cur[l] - ref[l]);
                    double acc = cur[r] + bn * dt;
                    for (int j = 0; j < k; ++j) {
                        double sn = sig[r * k + j];
                        for (int l = 0; l < d; ++l)
                            sn += sx[(r * k + j) * d + l] * (cur[l] - ref[l]);
                        acc += sn * dw[j];
                    }
                    nxt[r] = acc;
                    finite = finite && std::isfinite(acc);
                }
                if (!finite) {
                    errs[c] = "forward_newton_step: non-finite state at node " +
                              std::to_string(i + 1) + " on path " + std::to_string(m);
                    return;
                }
            }
        }
    });
    for (const auto& e : errs)
        if (!e.empty()) throw numerical_blowup_error(e);
    return X;
}

ForwardIterationRecord run_forward_newton(const FbsdeProblem& problem, const TimeGrid& grid,
                                          const BrownianBundle& noise, int iters,
                                          const PathProcess* start, int workers) {
    require_forward_inputs(problem, grid, noise, "run_forward_newton");
    if (iters < 1) throw std::invalid_argument("run_forward_newton: iters must be >= 1");
    const int d = problem.dim_x;
    const int M = noise.paths, N = grid.steps;

    ForwardIterationRecord rec;
    rec.euler = simulate_euler(problem, grid, noise, workers);

    PathProcess current;
    if (start != nullptr) {
        if (start->paths() != M || start->nodes() != N + 1 || start->dim() != d)
            throw std::invalid_argument("run_forward_newton: start iterate shape does not match");
        for (int m = 0; m < M; ++m) {
            auto x0 = start->at(m, 0);
            for (int j = 0; j < d; ++j)
                if (x0[j] != problem.x0[j])
                    throw std::invalid_argument(
                        "run_forward_newton: start iterate does not begin at x0");
        }
        current = *start;
    } else {
        current = PathProcess(M, N + 1, d);
        for (int m = 0; m < M; ++m)
            for (int i = 0; i <= N; ++i) {
                auto x = current.at(m, i);
                for (int j = 0; j < d; ++j) x[j] = problem.x0[j];
            }
    }

    rec.error.push_back(estimate_s2_norm(difference(rec.euler, current)));
    TripleProcess base;
    base.grid = grid;
    base.Y = PathProcess(M, N + 1, problem.dim_y);
    base.Z = PathProcess(M, N + 1, problem.dim_y * problem.dim_w);
    for (int n = 0; n < iters; ++n) {
        base.X = std::move(current);
        const LinearizedProblem lin = linearize(problem, base);
        current = forward_newton_step(lin, grid, noise, workers);
        rec.error.push_back(estimate_s2_norm(difference(rec.euler, current)));
        const double prev = rec.error[rec.error.size() - 2];
        rec.ratio.push_back(prev > 0.0 ? rec.error.back() / prev
                                       : std::numeric_limits<double>::quiet_NaN());
    }
    rec.last = std::move(current);
    return rec;
}

} // namespace fbsde
