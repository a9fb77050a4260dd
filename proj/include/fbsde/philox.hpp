#pragma once

#include <array>
#include <cstdint>

namespace fbsde {

/// Philox-4x32-10 counter-based generator. A block is a pure function of
/// (key, counter), so any increment can be produced independently in any
/// order — this is what makes common random numbers across solver runs and
/// worker counts automatic.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 2> key,
                                        std::array<std::uint32_t, 4> counter);

/// Standard normal quantile function (Wichura's algorithm, double precision).
double normal_quantile(double p);

/// Uniform in the open interval (0,1) from 64 random bits.
double uniform_from_bits(std::uint64_t bits);

/// One N(0,1) draw keyed by (seed, path, step, component).
double gaussian_draw(std::uint64_t seed, std::uint64_t path, std::uint32_t step,
                     std::uint32_t component);

} // namespace fbsde
