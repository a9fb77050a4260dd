#include "fbsde/residual.hpp"

#include "fbsde/norms.hpp"
#include "fbsde/parallel.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace fbsde {

namespace {

void require_shapes(const FbsdeProblem& p, const TripleProcess& u, const BrownianBundle& noise) {
    if (u.X.paths() != noise.paths || u.X.nodes() != noise.grid.node_count() ||
        !(u.grid == noise.grid))
        throw std::invalid_argument("residual: iterate and noise disagree on grid or paths");
    if (u.X.dim() != p.dim_x || u.Y.dim() != p.dim_y || u.Z.dim() != p.dim_y * p.dim_w)
        throw std::invalid_argument("residual: iterate dimensions disagree with problem");
    if (noise.dim != p.dim_w) throw std::invalid_argument("residual: wiener dimension mismatch");
}

} // namespace

ResidualProcess evaluate_residual(const FbsdeProblem& p, const TripleProcess& u,
                                  const BrownianBundle& noise, int workers) {
    require_shapes(p, u, noise);
    const int d = p.dim_x, m_dim = p.dim_y, k = p.dim_w;
    const int nodes = u.grid.node_count();
    const double dt = u.grid.dt();

    ResidualProcess r;
    r.forward = PathProcess(u.X.paths(), nodes, d);
    r.backward = PathProcess(u.X.paths(), nodes, m_dim);

    parallel_chunks(u.X.paths(), workers, [&](int, std::int64_t begin, std::int64_t end) {
        std::vector<double> b(d), sig(d * k), f(m_dim), phi(m_dim);
        std::vector<double> acc_x(d), suffix(m_dim);
        for (std::int64_t mp = begin; mp < end; ++mp) {
            const int m = static_cast<int>(mp);
            // forward row: running Euler sums
            const auto x0 = u.X.at(m, 0);
            for (int c = 0; c < d; ++c) acc_x[c] = 0.0;
            for (int i = 0; i < nodes; ++i) {
                const auto xi = u.X.at(m, i);
                auto out = r.forward.at(m, i);
                for (int c = 0; c < d; ++c) out[c] = xi[c] - x0[c] - acc_x[c];
                if (i < nodes - 1) {
                    const double t = u.grid.node(i);
                    p.drift(t, xi, b);
                    p.diffusion(t, xi, sig);
                    const auto dw = noise.at(m, i);
                    for (int c = 0; c < d; ++c) {
                        double s = b[c] * dt;
                        for (int l = 0; l < k; ++l) s += sig[c * k + l] * dw[l];
                        acc_x[c] += s;
                    }
                }
            }
            // backward row: suffix sums from the terminal node
            p.terminal(u.X.at(m, nodes - 1), phi);
            for (int c = 0; c < m_dim; ++c) suffix[c] = 0.0;
            for (int i = nodes - 1; i >= 0; --i) {
                if (i < nodes - 1) {
                    const double t = u.grid.node(i);
                    p.driver(t, u.X.at(m, i), u.Y.at(m, i), u.Z.at(m, i), f);
                    const auto dw = noise.at(m, i);
                    const auto zi = u.Z.at(m, i);
                    for (int c = 0; c < m_dim; ++c) {
                        double s = f[c] * dt;
                        for (int l = 0; l < k; ++l) s -= zi[c * k + l] * dw[l];
                        suffix[c] += s;
                    }
                }
                const auto yi = u.Y.at(m, i);
                auto out = r.backward.at(m, i);
                for (int c = 0; c < m_dim; ++c) out[c] = yi[c] - phi[c] - suffix[c];
            }
        }
    });
    return r;
}

ResidualProcess gateaux_derivative(const FbsdeProblem& p, const TripleProcess& u,
                                   const TripleProcess& h, const BrownianBundle& noise,
                                   int workers) {
    require_shapes(p, u, noise);
    require_shapes(p, h, noise);
    const int d = p.dim_x, m_dim = p.dim_y, k = p.dim_w;
    const int nodes = u.grid.node_count();
    const double dt = u.grid.dt();

    ResidualProcess r;
    r.forward = PathProcess(u.X.paths(), nodes, d);
    r.backward = PathProcess(u.X.paths(), nodes, m_dim);

    parallel_chunks(u.X.paths(), workers, [&](int, std::int64_t begin, std::int64_t end) {
        std::vector<double> jb(d * d), js(d * k * d), jfx(m_dim * d), jfy(m_dim * m_dim),
            jfz(m_dim * m_dim * k), jphi(m_dim * d), fdir(m_dim);
        std::vector<double> acc_x(d), suffix(m_dim), term(m_dim);
        for (std::int64_t mp = begin; mp < end; ++mp) {
            const int m = static_cast<int>(mp);
            // forward row
            for (int c = 0; c < d; ++c) acc_x[c] = 0.0;
            const auto hx0 = h.X.at(m, 0);
            for (int i = 0; i < nodes; ++i) {
                const auto hxi = h.X.at(m, i);
                auto out = r.forward.at(m, i);
                for (int c = 0; c < d; ++c) out[c] = hxi[c] - hx0[c] - acc_x[c];
                if (i < nodes - 1) {
                    const double t = u.grid.node(i);
                    const auto xi = u.X.at(m, i);
                    p.drift_dx(t, xi, jb);
                    p.diffusion_dx(t, xi, js);
                    const auto dw = noise.at(m, i);
                    for (int c = 0; c < d; ++c) {
                        double bh = 0.0;
                        for (int j = 0; j < d; ++j) bh += jb[c * d + j] * hxi[j];
                        double s = bh * dt;
                        for (int l = 0; l < k; ++l) {
                            double sh = 0.0;
                            for (int j = 0; j < d; ++j) sh += js[(c * k + l) * d + j] * hxi[j];
                            s += sh * dw[l];
                        }
                        acc_x[c] += s;
                    }
                }
            }
            // backward row: phi'(x_N) h_x(N) plus driver/ito suffix sums
            p.terminal_dx(u.X.at(m, nodes - 1), jphi);
            const auto hxN = h.X.at(m, nodes - 1);
            for (int c = 0; c < m_dim; ++c) {
                double s = 0.0;
                for (int j = 0; j < d; ++j) s += jphi[c * d + j] * hxN[j];
                term[c] = s;
            }
            for (int c = 0; c < m_dim; ++c) suffix[c] = 0.0;
            for (int i = nodes - 1; i >= 0; --i) {
                if (i < nodes - 1) {
                    const double t = u.grid.node(i);
                    const auto xi = u.X.at(m, i);
                    const auto yi = u.Y.at(m, i);
                    const auto zi = u.Z.at(m, i);
                    p.driver_dx(t, xi, yi, zi, jfx);
                    p.driver_dy(t, xi, yi, zi, jfy);
                    p.driver_dz(t, xi, yi, zi, jfz);
                    const auto hxi = h.X.at(m, i);
                    const auto hyi = h.Y.at(m, i);
                    const auto hzi = h.Z.at(m, i);
                    for (int c = 0; c < m_dim; ++c) {
                        double s = 0.0;
                        for (int j = 0; j < d; ++j) s += jfx[c * d + j] * hxi[j];
                        for (int j = 0; j < m_dim; ++j) s += jfy[c * m_dim + j] * hyi[j];
                        for (int j = 0; j < m_dim * k; ++j) s += jfz[c * m_dim * k + j] * hzi[j];
                        fdir[c] = s;
                    }
                    const auto dw = noise.at(m, i);
                    for (int c = 0; c < m_dim; ++c) {
                        double s = fdir[c] * dt;
                        for (int l = 0; l < k; ++l) s -= hzi[c * k + l] * dw[l];
                        suffix[c] += s;
                    }
                }
                const auto hyi = h.Y.at(m, i);
                auto out = r.backward.at(m, i);
                for (int c = 0; c < m_dim; ++c) out[c] = hyi[c] - term[c] - suffix[c];
            }
        }
    });
    return r;
}

double residual_norm(const ResidualProcess& r) {
    const double fwd = estimate_s2_norm(r.forward);
    const double bwd = estimate_s2_norm(r.backward);
    return std::sqrt(fwd * fwd + bwd * bwd);
}

std::vector<double> lagrange_remainder(
    const std::function<void(std::span<const double>, std::span<double>)>& g,
    const std::function<void(std::span<const double>, std::span<double>)>& g_jac,
    std::span<const double> base, std::span<const double> delta, int out_dim) {
    const int n = static_cast<int>(base.size());
    std::vector<double> shifted(base.begin(), base.end());
    for (int j = 0; j < n; ++j) shifted[j] += delta[j];
    std::vector<double> g_shift(out_dim), g_base(out_dim), jac(out_dim * n);
    g(shifted, g_shift);
    g(base, g_base);
    g_jac(base, jac);
    std::vector<double> r(out_dim);
    for (int i = 0; i < out_dim; ++i) {
        double lin = 0.0;
        for (int j = 0; j < n; ++j) lin += jac[i * n + j] * delta[j];
        r[i] = g_shift[i] - g_base[i] - lin;
    }
    return r;
}

} // namespace fbsde
