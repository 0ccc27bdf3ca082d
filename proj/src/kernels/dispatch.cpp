#include <atomic>
#include <cstdlib>
#include <string_view>

#include "grounder/kernels.hpp"

namespace grounder::kernels {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(GROUNDER_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa env_or_detected() noexcept {
    const Isa best = detected_isa();
    if (const char* env = std::getenv("GROUNDER_SIMD")) {
        if (std::string_view(env) == "scalar") {
            return Isa::Scalar;
        }
    }
    return best;
}

std::atomic<Isa>& current() noexcept {
    static std::atomic<Isa> isa{env_or_detected()};
    return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::Avx2:
            return "avx2";
        case Isa::Scalar:
            break;
    }
    return "scalar";
}

Isa detected_isa() noexcept {
    static const Isa isa = cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
    return isa;
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) noexcept {
    if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) {
        isa = Isa::Scalar;
    }
    current().store(isa, std::memory_order_relaxed);
}

void reset_isa() noexcept { current().store(env_or_detected(), std::memory_order_relaxed); }

GaussianSums gaussian_sums(std::span<const double> xs, std::span<const double> ys, double zx,
                           double zy, double inv_two_var) {
#if defined(GROUNDER_HAVE_AVX2)
    if (active_isa() == Isa::Avx2) {
        return avx2::gaussian_sums(xs, ys, zx, zy, inv_two_var);
    }
#endif
    return scalar::gaussian_sums(xs, ys, zx, zy, inv_two_var);
}

double distance_sum(std::span<const double> xs, std::span<const double> ys, double px,
                    double py) {
#if defined(GROUNDER_HAVE_AVX2)
    if (active_isa() == Isa::Avx2) {
        return avx2::distance_sum(xs, ys, px, py);
    }
#endif
    return scalar::distance_sum(xs, ys, px, py);
}

}  // namespace grounder::kernels
