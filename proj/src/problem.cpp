#include "fbsde/problem.hpp"

#include "fbsde/philox.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbsde {

namespace {

double frobenius(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

bool close_rel(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * (1.0 + std::max(std::fabs(a), std::fabs(b)));
}

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("check_problem: " + what); }

// Central finite-difference column of a vector function wrt component j of
// one of its state arguments.
template <typename Eval>
void fd_column(const Eval& eval, std::vector<double>& bumped, int j, double h, int out_dim,
               std::vector<double>& plus, std::vector<double>& minus, const double* base_state) {
    bumped[j] = base_state[j] + h;
    eval(bumped.data(), plus.data());
    bumped[j] = base_state[j] - h;
    eval(bumped.data(), minus.data());
    bumped[j] = base_state[j];
    for (int i = 0; i < out_dim; ++i) plus[i] = (plus[i] - minus[i]) / (2.0 * h);
}

} // namespace

void check_problem(const FbsdeProblem& p, const TimeGrid& grid, int samples, std::uint64_t seed) {
    const int d = p.dim_x, m = p.dim_y, k = p.dim_w;
    if (d < 1 || m < 1 || k < 1) fail("dimensions must be positive");
    if (static_cast<int>(p.x0.size()) != d) fail("x0 has wrong dimension");

    // Growth at the origin stays finite on the grid.
    {
        std::vector<double> zx(d, 0.0), zy(m, 0.0), zz(m * k, 0.0);
        std::vector<double> ob(d), os(d * k), of(m);
        for (int i = 0; i < grid.node_count(); ++i) {
            const double t = grid.node(i);
            p.drift(t, zx, ob);
            p.diffusion(t, zx, os);
            p.driver(t, zx, zy, zz, of);
            for (double v : ob)
                if (!std::isfinite(v)) fail("b(t,0) not finite at t=" + std::to_string(t));
            for (double v : os)
                if (!std::isfinite(v)) fail("sigma(t,0) not finite at t=" + std::to_string(t));
            for (double v : of)
                if (!std::isfinite(v)) fail("f(t,0,0,0) not finite at t=" + std::to_string(t));
        }
    }

    const double rtol = 1e-5;
    const double bound_slack = 1.0 + 1e-9;
    std::vector<double> x(d), y(m), z(m * k);
    std::vector<double> jac_b(d * d), jac_s(d * k * d), jac_fx(m * d), jac_fy(m * m),
        jac_fz(m * m * k), jac_phi(m * d);
    std::vector<double> fval(m);
    const int maxdim = std::max({d, m, m * k});
    std::vector<double> plus(std::max({d, d * k, m})), minus(plus.size()), bumped(maxdim);

    for (int s = 0; s < samples; ++s) {
        const auto u64 = static_cast<std::uint64_t>(s);
        for (int j = 0; j < d; ++j) x[j] = 2.0 * gaussian_draw(seed, u64, 0, j);
        for (int j = 0; j < m; ++j) y[j] = 2.0 * gaussian_draw(seed, u64, 1, j);
        for (int j = 0; j < m * k; ++j) z[j] = 2.0 * gaussian_draw(seed, u64, 2, j);
        const double t = grid.node(s % grid.node_count());

        p.drift_dx(t, x, jac_b);
        p.diffusion_dx(t, x, jac_s);
        p.driver_dx(t, x, y, z, jac_fx);
        p.driver_dy(t, x, y, z, jac_fy);
        p.driver_dz(t, x, y, z, jac_fz);
        p.terminal_dx(x, jac_phi);

        if (frobenius(jac_b) > p.bound_drift * bound_slack) fail("sampled |b'| exceeds declared bound");
        if (frobenius(jac_s) > p.bound_diffusion * bound_slack)
            fail("sampled |sigma'| exceeds declared bound");
        double f2 = 0.0;
        for (double v : jac_fx) f2 += v * v;
        for (double v : jac_fy) f2 += v * v;
        for (double v : jac_fz) f2 += v * v;
        if (std::sqrt(f2) > p.bound_driver * bound_slack)
            fail("sampled |f'| exceeds declared bound");
        if (frobenius(jac_phi) > p.bound_terminal * bound_slack)
            fail("sampled |phi'| exceeds declared bound");

        // Only a handful of expensive finite-difference cross-checks.
        if (s % 97 != 0 && s != 0) continue;

        const double hx = 6e-6;
        bumped.assign(x.begin(), x.end());
        for (int j = 0; j < d; ++j) {
            fd_column([&](const double* in, double* out) {
                p.drift(t, {in, static_cast<std::size_t>(d)}, {out, static_cast<std::size_t>(d)});
            }, bumped, j, hx * (1.0 + std::fabs(x[j])), d, plus, minus, x.data());
            for (int i = 0; i < d; ++i)
                if (!close_rel(plus[i], jac_b[i * d + j], rtol)) fail("b' mismatch vs finite differences");
            fd_column([&](const double* in, double* out) {
                p.diffusion(t, {in, static_cast<std::size_t>(d)},
                            {out, static_cast<std::size_t>(d * k)});
            }, bumped, j, hx * (1.0 + std::fabs(x[j])), d * k, plus, minus, x.data());
            for (int i = 0; i < d * k; ++i)
                if (!close_rel(plus[i], jac_s[i * d + j], rtol))
                    fail("sigma' mismatch vs finite differences");
            fd_column([&](const double* in, double* out) {
                p.driver(t, {in, static_cast<std::size_t>(d)}, y, z, {out, static_cast<std::size_t>(m)});
            }, bumped, j, hx * (1.0 + std::fabs(x[j])), m, plus, minus, x.data());
            for (int i = 0; i < m; ++i)
                if (!close_rel(plus[i], jac_fx[i * d + j], rtol)) fail("f_x mismatch vs finite differences");
            fd_column([&](const double* in, double* out) {
                p.terminal({in, static_cast<std::size_t>(d)}, {out, static_cast<std::size_t>(m)});
            }, bumped, j, hx * (1.0 + std::fabs(x[j])), m, plus, minus, x.data());
            for (int i = 0; i < m; ++i)
                if (!close_rel(plus[i], jac_phi[i * d + j], rtol))
                    fail("phi' mismatch vs finite differences");
        }
        bumped.assign(y.begin(), y.end());
        for (int j = 0; j < m; ++j) {
            fd_column([&](const double* in, double* out) {
                p.driver(t, x, {in, static_cast<std::size_t>(m)}, z, {out, static_cast<std::size_t>(m)});
            }, bumped, j, hx * (1.0 + std::fabs(y[j])), m, plus, minus, y.data());
            for (int i = 0; i < m; ++i)
                if (!close_rel(plus[i], jac_fy[i * m + j], rtol)) fail("f_y mismatch vs finite differences");
        }
        bumped.assign(z.begin(), z.end());
        for (int j = 0; j < m * k; ++j) {
            fd_column([&](const double* in, double* out) {
                p.driver(t, x, y, {in, static_cast<std::size_t>(m * k)},
                         {out, static_cast<std::size_t>(m)});
            }, bumped, j, hx * (1.0 + std::fabs(z[j])), m, plus, minus, z.data());
            for (int i = 0; i < m; ++i)
                if (!close_rel(plus[i], jac_fz[i * m * k + j], rtol))
                    fail("f_z mismatch vs finite differences");
        }

        // Fused evaluators, when present, must agree with the parts.
        if (p.forward_full) {
            std::vector<double> b1(d), b2(d), bx2(d * d), s1(d * k), s2v(d * k), sx2(d * k * d);
            p.drift(t, x, b1);
            p.diffusion(t, x, s1);
            p.forward_full(t, x, b2, bx2, s2v, sx2);
            for (int i = 0; i < d; ++i)
                if (!close_rel(b2[i], b1[i], 1e-12)) fail("forward_full disagrees with drift");
            for (int i = 0; i < d * d; ++i)
                if (!close_rel(bx2[i], jac_b[i], 1e-12)) fail("forward_full b' disagrees");
            for (int i = 0; i < d * k; ++i)
                if (!close_rel(s2v[i], s1[i], 1e-12)) fail("forward_full disagrees with diffusion");
            for (int i = 0; i < d * k * d; ++i)
                if (!close_rel(sx2[i], jac_s[i], 1e-12)) fail("forward_full sigma' disagrees");
        }
        if (p.driver_full) {
            std::vector<double> f2v(m), fx2(m * d), fy2(m * m), fz2(m * m * k);
            p.driver(t, x, y, z, fval);
            p.driver_full(t, x, y, z, f2v, fx2, fy2, fz2);
            for (int i = 0; i < m; ++i)
                if (!close_rel(f2v[i], fval[i], 1e-12)) fail("driver_full disagrees with driver");
            for (int i = 0; i < m * d; ++i)
                if (!close_rel(fx2[i], jac_fx[i], 1e-12)) fail("driver_full f_x disagrees");
            for (int i = 0; i < m * m; ++i)
                if (!close_rel(fy2[i], jac_fy[i], 1e-12)) fail("driver_full f_y disagrees");
            for (int i = 0; i < m * m * k; ++i)
                if (!close_rel(fz2[i], jac_fz[i], 1e-12)) fail("driver_full f_z disagrees");
        }
    }
}

} // namespace fbsde
