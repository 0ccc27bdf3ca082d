#include <cmath>
#include <cstddef>

#include "grounder/kernels.hpp"

namespace grounder::kernels::scalar {

GaussianSums gaussian_sums(std::span<const double> xs, std::span<const double> ys, double zx,
                           double zy, double inv_two_var) {
    GaussianSums out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - zx;
        const double dy = ys[i] - zy;
        const double w = std::exp(-(dx * dx + dy * dy) * inv_two_var);
        out.weight += w;
        out.weighted_x += w * xs[i];
        out.weighted_y += w * ys[i];
    }
    return out;
}

double distance_sum(std::span<const double> xs, std::span<const double> ys, double px,
                    double py) {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - px;
        const double dy = ys[i] - py;
        total += std::sqrt(dx * dx + dy * dy);
    }
    return total;
}

}  // namespace grounder::kernels::scalar
