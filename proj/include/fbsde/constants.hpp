#pragma once

#include "fbsde/problem.hpp"

namespace fbsde {

/// Sup-norm bounds of the coefficient derivatives.
struct DerivativeBounds {
    double drift = 0.0;     // ||b'||
    double diffusion = 0.0; // ||sigma'||
    double driver = 0.0;    // ||f'||, full Jacobian [f_x f_y f_z]
    double terminal = 0.0;  // ||phi'||
};

/// The explicit constants of the convergence estimates, evaluated from the
/// derivative bounds, the horizon and the weight split eps:
///   c_bsigma = ||b'|| + 18 ||sigma'|| + ||sigma'||^2
///   C0       = 8 c_bsigma T exp(4 c_bsigma T)
///   alpha    = 2||f'|| + 4||f'||^2 + 12 ||f'|| (1 + 4*3^2) max(1, T) / eps
///   C1       = eps^{-1} {1 + (1 + 4 (2 + T C0) ||phi'||^2)(1 + 4*3^2)}
///                 * exp(alpha T + C0 / eps)
///   C3       = max(C1 + exp(C0 T / eps), exp(alpha T))
/// C1 and C3 overflow to +inf already at moderate bounds (the exponents grow
/// like exp(alpha T)); log_C1 and log_C3 carry the same values in log space
/// and are always finite.
struct ConstantsReport {
    DerivativeBounds bounds;
    double horizon = 0.0;
    double eps = 0.0;

    double c_bsigma = 0.0;
    double C0 = 0.0;
    double alpha = 0.0;
    double C1 = 0.0;
    double C3 = 0.0;
    double log_C1 = 0.0;
    double log_C3 = 0.0;
};

/// Evaluates the constants. Throws std::invalid_argument unless eps is in
/// (0,1), T > 0 and all bounds are >= 0.
ConstantsReport evaluate_constants(const DerivativeBounds& bounds, double T, double eps);

/// Convenience overload reading the declared bounds off the problem.
ConstantsReport evaluate_constants(const FbsdeProblem& problem, double T, double eps);

} // namespace fbsde
