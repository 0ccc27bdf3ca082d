#pragma once

// Data-parallel inner loops of the density module.
//
// Each kernel has a portable scalar reference in `kernels::scalar` and, on
// x86-64, an AVX2+FMA variant in `kernels::avx2`. The free functions in
// `kernels` dispatch to the best variant the running CPU supports. The
// environment variable GROUNDER_SIMD=scalar (or force_isa) pins the scalar
// path. Variants agree to within a few ulps; they are not bit-identical
// because the vector path uses its own exp and a different summation order.

#include <span>
#include <string_view>

namespace grounder::kernels {

/// Sums of isotropic Gaussian weights w_i = exp(-|z - p_i|^2 * inv_two_var)
/// over a point set, and of the weighted coordinates.
struct GaussianSums {
    double weight = 0.0;
    double weighted_x = 0.0;
    double weighted_y = 0.0;
};

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// Best variant supported by this CPU and build.
Isa detected_isa() noexcept;

/// Variant used by the dispatching entry points.
Isa active_isa() noexcept;

/// Pins the dispatching entry points to `isa`. Requesting an unsupported
/// variant falls back to Scalar. Intended for tests and benchmarking.
void force_isa(Isa isa) noexcept;

/// Returns to the detected (or GROUNDER_SIMD-selected) variant.
void reset_isa() noexcept;

GaussianSums gaussian_sums(std::span<const double> xs, std::span<const double> ys, double zx,
                           double zy, double inv_two_var);

/// Sum of Euclidean distances from (px, py) to every point.
double distance_sum(std::span<const double> xs, std::span<const double> ys, double px,
                    double py);

namespace scalar {
GaussianSums gaussian_sums(std::span<const double> xs, std::span<const double> ys, double zx,
                           double zy, double inv_two_var);
double distance_sum(std::span<const double> xs, std::span<const double> ys, double px,
                    double py);
}  // namespace scalar

#if defined(GROUNDER_HAVE_AVX2)
namespace avx2 {
GaussianSums gaussian_sums(std::span<const double> xs, std::span<const double> ys, double zx,
                           double zy, double inv_two_var);
double distance_sum(std::span<const double> xs, std::span<const double> ys, double px,
                    double py);
}  // namespace avx2
#endif

}  // namespace grounder::kernels
