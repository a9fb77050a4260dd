#include "fbsde/constants.hpp"

#include <cmath>
#include <stdexcept>

namespace fbsde {

namespace {

// log(exp(a) + exp(b)) without overflow.
double log_add_exp(double a, double b) {
    const double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

} // namespace

ConstantsReport evaluate_constants(const DerivativeBounds& bounds, double T, double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("evaluate_constants: eps must lie in (0,1)");
    if (!(T > 0.0)) throw std::invalid_argument("evaluate_constants: T must be positive");
    if (bounds.drift < 0.0 || bounds.diffusion < 0.0 || bounds.driver < 0.0 ||
        bounds.terminal < 0.0)
        throw std::invalid_argument("evaluate_constants: derivative bounds must be nonnegative");

    ConstantsReport r;
    r.bounds = bounds;
    r.horizon = T;
    r.eps = eps;

    const double b = bounds.drift, s = bounds.diffusion, f = bounds.driver, p = bounds.terminal;
    const double c0_sq = 1.0 + 4.0 * 3.0 * 3.0; // universal martingale-inequality factor, 37

    r.c_bsigma = b + 18.0 * s + s * s;
    r.C0 = 8.0 * r.c_bsigma * T * std::exp(4.0 * r.c_bsigma * T);
    r.alpha = 2.0 * f + 4.0 * f * f + 12.0 * f * c0_sq * std::max(1.0, T) / eps;

    const double brace = 1.0 + (1.0 + 4.0 * (2.0 + T * r.C0) * p * p) * c0_sq;
    r.C1 = brace / eps * std::exp(r.alpha * T + r.C0 / eps);
    r.C3 = std::max(r.C1 + std::exp(r.C0 * T / eps), std::exp(r.alpha * T));
    r.log_C1 = -std::log(eps) + std::log(brace) + r.alpha * T + r.C0 / eps;
    r.log_C3 = std::max(log_add_exp(r.log_C1, r.C0 * T / eps), r.alpha * T);
    return r;
}

ConstantsReport evaluate_constants(const FbsdeProblem& problem, double T, double eps) {
    DerivativeBounds b;
    b.drift = problem.bound_drift;
    b.diffusion = problem.bound_diffusion;
    b.driver = problem.bound_driver;
    b.terminal = problem.bound_terminal;
    return evaluate_constants(b, T, eps);
}

} // namespace fbsde
