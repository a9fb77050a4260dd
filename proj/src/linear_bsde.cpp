#include "fbsde/linear_bsde.hpp"

#include "fbsde/errors.hpp"
#include "fbsde/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbsde {

namespace {

// Design matrix of a fixed basis over row features; identical fill code to
// RegressionStep so that replaying a logged fit reproduces its arithmetic.
Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& features, const PolynomialBasis& basis,
                              int workers) {
    const Eigen::Index M = features.rows();
    const int q = static_cast<int>(features.cols());
    const int B = basis.size();
    Eigen::MatrixXd phi(M, B);
    parallel_chunks(M, workers, [&](int, std::int64_t begin, std::int64_t end) {
        std::vector<double> feat(q), row(B);
        for (std::int64_t m = begin; m < end; ++m) {
            for (int j = 0; j < q; ++j) feat[j] = features(m, j);
            basis.evaluate(feat, row);
            for (int b = 0; b < B; ++b) phi(m, b) = row[b];
        }
    });
    return phi;
}

Eigen::MatrixXd clipped(Eigen::MatrixXd v, double clip) {
    if (std::isfinite(clip)) v = v.cwiseMax(-clip).cwiseMin(clip);
    return v;
}

// Backward induction over the grid. The Model supplies the per-path terminal
// values, the regression features at each node, and the step map that turns
// the conditional-expectation estimate (e_hat) and integrand estimate (z_hat)
// into Y_i. Everything else — the two-stage fits, truncation, logging,
// replay — is shared between the linearized and frozen-driver solvers.
//
// Per step i (descending), with dW = increments over [t_i, t_{i+1}):
//   stage A:  E0 = fit of Y_{i+1};  Z0 = fit of (Y_{i+1} - E0) dW^T / dt
//   stage B:  E  = fit of Y_{i+1} - Z0(x) dW          (martingale control variate)
//             Z  = fit of (Y_{i+1} - E(x)) dW^T / dt
//                      - Z0(x) (dW dW^T - dt I) / dt   (second-order variate)
// Both corrections are conditionally centered, so they change no conditional
// expectation — they only cancel the dominant noise in the targets.
template <class Model>
BsdeSolution run_backward(const Model& model, const TimeGrid& grid, const BrownianBundle& noise,
                          const RegressionConfig& config, int workers,
                          BsdeRegressionLog* record, const BsdeRegressionLog* replay) {
    const int M = model.paths();
    const int N = grid.steps;
    const int my = model.dim_y();
    const int k = model.dim_w();
    const int q = model.feature_dim();
    const double dt = grid.dt();

    if (!(noise.grid == grid))
        throw std::invalid_argument("solve_linear_bsde: noise grid does not match the solve grid");
    if (noise.paths != M)
        throw std::invalid_argument("solve_linear_bsde: noise path count does not match");
    if (noise.dim != k)
        throw std::invalid_argument("solve_linear_bsde: noise dimension does not match");
    if (replay && static_cast<int>(replay->steps.size()) != N)
        throw std::invalid_argument("solve_linear_bsde: replay log step count does not match grid");
    if (!replay) {
        const int B = PolynomialBasis(q, config.degree).size();
        if (static_cast<std::int64_t>(M) < 10 * static_cast<std::int64_t>(B))
            throw std::invalid_argument(
                "solve_linear_bsde: needs at least 10x basis-size paths (basis size " +
                std::to_string(B) + ", paths " + std::to_string(M) + ")");
    }
    if (record) record->steps.assign(N, BsdeStepLog{});

    BsdeSolution sol{PathProcess(M, N + 1, my), PathProcess(M, N + 1, my * k)};

    parallel_chunks(M, workers, [&](int, std::int64_t begin, std::int64_t end) {
        for (std::int64_t m = begin; m < end; ++m)
            model.terminal(static_cast<int>(m), sol.Y.at(static_cast<int>(m), N));
    });

    double term_max = 0.0;
    for (int m = 0; m < M; ++m)
        for (double v : sol.Y.at(m, N)) {
            if (!std::isfinite(v))
                throw numerical_blowup_error("solve_linear_bsde: non-finite terminal value on path " +
                                             std::to_string(m));
            term_max = std::max(term_max, std::abs(v));
        }
    const double clip =
        std::isnan(config.truncation) ? 10.0 * std::max(1.0, term_max) : config.truncation;

    Eigen::MatrixXd feat(M, q);
    Eigen::MatrixXd ynext(M, my);
    Eigen::MatrixXd t_y(M, my), t_z(M, static_cast<Eigen::Index>(my) * k);
    for (int m = 0; m < M; ++m) {
        auto ts = sol.Y.at(m, N);
        for (int j = 0; j < my; ++j) ynext(m, j) = ts[j];
    }

    const int nchunks = chunk_count(M);
    std::vector<std::string> step_errs(nchunks), blowup_errs(nchunks);

    for (int i = N - 1; i >= 0; --i) {
        parallel_chunks(M, workers, [&](int, std::int64_t begin, std::int64_t end) {
            std::vector<double> row(q);
            for (std::int64_t m = begin; m < end; ++m) {
                model.features(static_cast<int>(m), i, row);
                for (int j = 0; j < q; ++j) feat(m, j) = row[j];
            }
        });

        Eigen::MatrixXd e1, z1;
        double step_clip = clip;
        if (replay) {
            const BsdeStepLog& lg = replay->steps[i];
            if (lg.basis.num_features() != q)
                throw std::invalid_argument(
                    "solve_linear_bsde: replay log feature dimension does not match");
            const Eigen::MatrixXd phi = design_matrix(feat, lg.basis, workers);
            step_clip = lg.clip;
            e1 = clipped(phi * lg.coef_y, step_clip);
            z1 = clipped(phi * lg.coef_z, step_clip);
        } else {
            RegressionStep step(feat, config.degree, config.ridge, workers);

            const Eigen::MatrixXd coef_y0 = step.solve(ynext);
            const Eigen::MatrixXd e0 = step.predict(coef_y0, clip);
            parallel_chunks(M, workers, [&](int, std::int64_t begin, std::int64_t end) {
                for (std::int64_t m = begin; m < end; ++m) {
                    const auto dw = noise.at(static_cast<int>(m), i);
                    for (int j = 0; j < my; ++j) {
                        const double res = ynext(m, j) - e0(m, j);
                        for (int l = 0; l < k; ++l) t_z(m, j * k + l) = res * dw[l] / dt;
                    }
                }
            });
            const Eigen::MatrixXd coef_z0 = step.solve(t_z);
            const Eigen::MatrixXd z0 = step.predict(coef_z0, clip);

            parallel_chunks(M, workers, [&](int, std::int64_t begin, std::int64_t end) {
                for (std::int64_t m = begin; m < end; ++m) {
                    const auto dw = noise.at(static_cast<int>(m), i);
                    for (int j = 0; j < my; ++j) {
                        double acc = ynext(m, j);
                        for (int l = 0; l < k; ++l) acc -= z0(m, j * k + l) * dw[l];
                        t_y(m, j) = acc;
                    }
                }
            });
            const Eigen::MatrixXd coef_y1 = step.solve(t_y);
            e1 = step.predict(coef_y1, clip);

            parallel_chunks(M, workers, [&](int, std::int64_t begin, std::int64_t end) {
                for (std::int64_t m = begin; m < end; ++m) {
                    const auto dw = noise.at(static_cast<int>(m), i);
                    for (int j = 0; j < my; ++j) {
                        const double res = ynext(m, j) - e1(m, j);
                        for (int l = 0; l < k; ++l) {
                            double acc = res * dw[l] / dt;
                            for (int c = 0; c < k; ++c)
                                acc -= z0(m, j * k + c) * (dw[c] * dw[l] - (c == l ? dt : 0.0)) / dt;
                            t_z(m, j * k + l) = acc;
                        }
                    }
                }
            });
            const Eigen::MatrixXd coef_z1 = step.solve(t_z);
            z1 = step.predict(coef_z1, clip);

            if (record) {
                BsdeStepLog& lg = record->steps[i];
                lg.basis = step.basis();
                lg.coef_y = coef_y1;
                lg.coef_z = coef_z1;
                lg.clip = clip;
            }
        }

        parallel_chunks(M, workers, [&](int c, std::int64_t begin, std::int64_t end) {
            if (!step_errs[c].empty() || !blowup_errs[c].empty()) return;
            auto scratch = model.make_scratch();
            std::vector<double> erow(my), zrow(static_cast<std::size_t>(my) * k);
            for (std::int64_t m = begin; m < end; ++m) {
                for (int j = 0; j < my; ++j) erow[j] = e1(m, j);
                for (int j = 0; j < my * k; ++j) zrow[j] = z1(m, j);
                auto ys = sol.Y.at(static_cast<int>(m), i);
                try {
                    model.assemble(static_cast<int>(m), i, erow, zrow, ys, scratch);
                } catch (const std::exception& ex) {
                    step_errs[c] = ex.what();
                    return;
                }
                auto zs = sol.Z.at(static_cast<int>(m), i);
                bool finite = true;
                for (int j = 0; j < my; ++j) finite = finite && std::isfinite(ys[j]);
                for (int j = 0; j < my * k; ++j) {
                    zs[j] = zrow[j];
                    finite = finite && std::isfinite(zrow[j]);
                }
                if (!finite) {
                    blowup_errs[c] = "solve_linear_bsde: non-finite value at node " +
                                     std::to_string(i) + " on path " + std::to_string(m);
                    return;
                }
                for (int j = 0; j < my; ++j) ynext(m, j) = ys[j];
            }
        });
        for (int c = 0; c < nchunks; ++c) {
            if (!step_errs[c].empty()) throw step_size_error(step_errs[c]);
            if (!blowup_errs[c].empty()) throw numerical_blowup_error(blowup_errs[c]);
        }
    }

    // Z has no dynamics of its own at the final node; carry the last fitted
    // integrand forward so the process is defined on every grid node.
    for (int m = 0; m < M; ++m) {
        auto src = sol.Z.at(m, N - 1);
        auto dst = sol.Z.at(m, N);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return sol;
}

// Affine step map of a Newton inner solve: driver and terminal data are the
// first-order expansions of the problem around the base iterate. The step is
// implicit in y, so each path solves a my-by-my linear system per node.
class LinearizedModel {
public:
    LinearizedModel(const LinearizedProblem& lin, const PathProcess& x_next,
                    const RegressionConfig& config, const TimeGrid& grid)
        : lin_(lin), xn_(x_next), grid_(grid),
          joint_(config.feature_map == RegressionConfig::FeatureMap::JointState) {}

    int paths() const { return xn_.paths(); }
    int dim_y() const { return lin_.dim_y(); }
    int dim_w() const { return lin_.dim_w(); }
    int feature_dim() const { return joint_ ? 2 * lin_.dim_x() + lin_.dim_y() : lin_.dim_x(); }

    void features(int m, int i, std::span<double> out) const {
        const int d = lin_.dim_x();
        auto x1 = xn_.at(m, i);
        std::copy(x1.begin(), x1.end(), out.begin());
        if (joint_) {
            auto xb = lin_.base->X.at(m, i);
            auto yb = lin_.base->Y.at(m, i);
            std::copy(xb.begin(), xb.end(), out.begin() + d);
            std::copy(yb.begin(), yb.end(), out.begin() + 2 * d);
        }
    }

    void terminal(int m, std::span<double> out) const {
        lin_.terminal(m, xn_.at(m, grid_.steps), out);
    }

    struct Scratch {
        std::vector<double> f, fx, fy, fz;
        Eigen::MatrixXd a;
        Eigen::VectorXd rhs;
        Eigen::FullPivLU<Eigen::MatrixXd> lu;
    };

    Scratch make_scratch() const {
        const int d = lin_.dim_x(), my = dim_y(), k = dim_w();
        Scratch s;
        s.f.resize(my);
        s.fx.resize(static_cast<std::size_t>(my) * d);
        s.fy.resize(static_cast<std::size_t>(my) * my);
        s.fz.resize(static_cast<std::size_t>(my) * my * k);
        s.a.resize(my, my);
        s.rhs.resize(my);
        return s;
    }

    void assemble(int m, int i, std::span<const double> e_hat, std::span<const double> z_hat,
                  std::span<double> y_out, Scratch& s) const {
        const int d = lin_.dim_x(), my = dim_y(), k = dim_w();
        const double t = grid_.node(i);
        const double dt = grid_.dt();
        auto xb = lin_.base->X.at(m, i);
        auto yb = lin_.base->Y.at(m, i);
        auto zb = lin_.base->Z.at(m, i);
        lin_.problem->eval_driver_full(t, xb, yb, zb, s.f, s.fx, s.fy, s.fz);
        auto x1 = xn_.at(m, i);
        for (int r = 0; r < my; ++r) {
            double acc = s.f[r];
            for (int c = 0; c < d; ++c) acc += s.fx[r * d + c] * (x1[c] - xb[c]);
            for (int c = 0; c < my; ++c) acc -= s.fy[r * my + c] * yb[c];
            for (int c = 0; c < my * k; ++c) acc += s.fz[r * my * k + c] * (z_hat[c] - zb[c]);
            s.rhs(r) = e_hat[r] + dt * acc;
        }
        if (my == 1) {
            const double den = 1.0 - dt * s.fy[0];
            if (std::abs(den) < 1e-12)
                throw step_size_error("solve_linear_bsde: I - dt*f_y is singular at node " +
                                      std::to_string(i) +
                                      "; increase N so the implicit y-step is solvable");
            y_out[0] = s.rhs(0) / den;
            return;
        }
        for (int r = 0; r < my; ++r)
            for (int c = 0; c < my; ++c) s.a(r, c) = (r == c ? 1.0 : 0.0) - dt * s.fy[r * my + c];
        s.lu.compute(s.a);
        if (!s.lu.isInvertible())
            throw step_size_error("solve_linear_bsde: I - dt*f_y is singular at node " +
                                  std::to_string(i) +
                                  "; increase N so the implicit y-step is solvable");
        Eigen::VectorXd y = s.lu.solve(s.rhs);
        for (int r = 0; r < my; ++r) y_out[r] = y(r);
    }

private:
    const LinearizedProblem& lin_;
    const PathProcess& xn_;
    TimeGrid grid_;
    bool joint_;
};

// Step map with the driver frozen at previous-iterate values: the driver is a
// known constant per (path, node), so the step is explicit.
class FrozenModel {
public:
    FrozenModel(const FbsdeProblem& problem, const PathProcess& x, const PathProcess& y_prev,
                const PathProcess& z_prev, const RegressionConfig& config, const TimeGrid& grid)
        : problem_(problem), x_(x), yprev_(y_prev), zprev_(z_prev), grid_(grid),
          joint_(config.feature_map == RegressionConfig::FeatureMap::JointState) {}

    int paths() const { return x_.paths(); }
    int dim_y() const { return problem_.dim_y; }
    int dim_w() const { return problem_.dim_w; }
    int feature_dim() const { return joint_ ? 2 * problem_.dim_x + problem_.dim_y : problem_.dim_x; }

    void features(int m, int i, std::span<double> out) const {
        const int d = problem_.dim_x;
        auto x = x_.at(m, i);
        std::copy(x.begin(), x.end(), out.begin());
        if (joint_) {
            auto y = yprev_.at(m, i);
            std::copy(x.begin(), x.end(), out.begin() + d);
            std::copy(y.begin(), y.end(), out.begin() + 2 * d);
        }
    }

    void terminal(int m, std::span<double> out) const {
        problem_.terminal(x_.at(m, grid_.steps), out);
    }

    struct Scratch {
        std::vector<double> f;
    };

    Scratch make_scratch() const { return Scratch{std::vector<double>(dim_y())}; }

    void assemble(int m, int i, std::span<const double> e_hat, std::span<const double>,
                  std::span<double> y_out, Scratch& s) const {
        const int my = dim_y();
        const double t = grid_.node(i);
        const double dt = grid_.dt();
        problem_.driver(t, x_.at(m, i), yprev_.at(m, i), zprev_.at(m, i), s.f);
        for (int r = 0; r < my; ++r) y_out[r] = e_hat[r] + dt * s.f[r];
    }

private:
    const FbsdeProblem& problem_;
    const PathProcess& x_;
    const PathProcess& yprev_;
    const PathProcess& zprev_;
    TimeGrid grid_;
    bool joint_;
};

void require_process(const PathProcess& p, int paths, int nodes, int dim, const char* name) {
    if (p.paths() != paths || p.nodes() != nodes || p.dim() != dim)
        throw std::invalid_argument(std::string("solve_linear_bsde: ") + name +
                                    " has the wrong shape");
}

} // namespace

BsdeSolution solve_linear_bsde(const LinearizedProblem& lin, const PathProcess& X_next,
                               const TimeGrid& grid, const BrownianBundle& noise,
                               const RegressionConfig& config, int workers,
                               BsdeRegressionLog* record, const BsdeRegressionLog* replay) {
    if (lin.problem == nullptr || lin.base == nullptr)
        throw std::invalid_argument("solve_linear_bsde: linearization is empty");
    if (!(lin.base->grid == grid))
        throw std::invalid_argument("solve_linear_bsde: base iterate grid does not match");
    const int M = X_next.paths();
    const int d = lin.dim_x(), my = lin.dim_y(), k = lin.dim_w();
    require_process(X_next, M, grid.node_count(), d, "X_next");
    require_process(lin.base->X, M, grid.node_count(), d, "base X");
    require_process(lin.base->Y, M, grid.node_count(), my, "base Y");
    require_process(lin.base->Z, M, grid.node_count(), my * k, "base Z");
    LinearizedModel model(lin, X_next, config, grid);
    return run_backward(model, grid, noise, config, workers, record, replay);
}

BsdeSolution solve_frozen_bsde(const FbsdeProblem& problem, const PathProcess& X,
                               const PathProcess& Y_prev, const PathProcess& Z_prev,
                               const TimeGrid& grid, const BrownianBundle& noise,
                               const RegressionConfig& config, int workers) {
    const int M = X.paths();
    const int d = problem.dim_x, my = problem.dim_y, k = problem.dim_w;
    require_process(X, M, grid.node_count(), d, "X");
    require_process(Y_prev, M, grid.node_count(), my, "Y_prev");
    require_process(Z_prev, M, grid.node_count(), my * k, "Z_prev");
    FrozenModel model(problem, X, Y_prev, Z_prev, config, grid);
    return run_backward(model, grid, noise, config, workers, nullptr, nullptr);
}

} // namespace fbsde
