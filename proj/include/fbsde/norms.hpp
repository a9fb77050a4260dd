#pragma once

#include "fbsde/grid.hpp"
#include "fbsde/process.hpp"

namespace fbsde {

/// Norm estimates for a sampled triple. weighted_YZ is
/// sqrt( E[sup_i e^{alpha t_i}|Y_i|^2] + E[sum_i e^{alpha t_i}|Z_i|^2 dt] ).
struct NormReport {
    double s2_X = 0.0;
    double s2_Y = 0.0;
    double h2_Z = 0.0;
    double alpha = 0.0;
    double weighted_YZ = 0.0;
};

/// sqrt of the path-average of the grid-maximum of |v_i|^2.
double estimate_s2_norm(const PathProcess& proc);

/// sqrt of the path-average of the left-endpoint Riemann sum of |v_i|^2.
double estimate_h2_norm(const PathProcess& proc, const TimeGrid& grid);

/// Exponentially weighted S2 + H2 combination; may return +inf when
/// e^{alpha T} overflows, never NaN (zero samples contribute exactly 0).
double estimate_weighted_norm(const PathProcess& Y, const PathProcess& Z, double alpha,
                              const TimeGrid& grid);

NormReport measure_norms(const TripleProcess& u, double alpha);

/// sqrt(s2(X)^2 + s2(Y)^2 + h2(Z)^2) of a triple (used on error triples).
double combined_norm(const TripleProcess& u);

/// combined_norm(a - b) computed streaming, without materializing the
/// difference triple.
double combined_diff_norm(const TripleProcess& a, const TripleProcess& b);

} // namespace fbsde
