// AVX2 + FMA variants of the density kernels. Compiled with -mavx2 -mfma and
// only ever called after the dispatcher has confirmed CPU support.

#include <immintrin.h>

#include <cstddef>
#include <cstdint>

#include "grounder/kernels.hpp"

namespace grounder::kernels::avx2 {

namespace {

[[gnu::always_inline]] inline double hsum(__m256d v) noexcept {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// exp(x) for x <= 0. Cody-Waite range reduction followed by the Cephes (3,3)
// rational approximation; about 1 ulp. Arguments below -708.39 flush to 0.
[[gnu::always_inline]] inline __m256d exp_nonpositive(__m256d x) noexcept {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125E-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212E-6);
    const __m256d underflow = _mm256_set1_pd(-708.39641853226408);

    const __m256d live = _mm256_cmp_pd(x, underflow, _CMP_GE_OQ);
    x = _mm256_max_pd(x, underflow);

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, c1, x);
    r = _mm256_fnmadd_pd(n, c2, r);

    const __m256d rr = _mm256_mul_pd(r, r);
    __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300E-2));
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910E-1));
    p = _mm256_mul_pd(p, r);

    __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192E-3));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766E-1));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009E0));

    __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    e = _mm256_fmadd_pd(e, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

    // 2^n assembled directly in the exponent field.
    const __m256d magic = _mm256_set1_pd(0x1.8p52);
    const __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)),
                                        _mm256_castpd_si256(magic));
    const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
    const __m256d scale = _mm256_castsi256_pd(bits);

    return _mm256_and_pd(_mm256_mul_pd(e, scale), live);
}

inline __m256i tail_mask(std::size_t remaining) noexcept {
    const __m256i lanes = _mm256_set_epi64x(3, 2, 1, 0);
    return _mm256_cmpgt_epi64(_mm256_set1_epi64x(static_cast<std::int64_t>(remaining)), lanes);
}

}  // namespace

GaussianSums gaussian_sums(std::span<const double> xs, std::span<const double> ys, double zx,
                           double zy, double inv_two_var) {
    const std::size_t n = xs.size();
    const __m256d vzx = _mm256_set1_pd(zx);
    const __m256d vzy = _mm256_set1_pd(zy);
    const __m256d vneg = _mm256_set1_pd(-inv_two_var);
    __m256d sw = _mm256_setzero_pd();
    __m256d swx = _mm256_setzero_pd();
    __m256d swy = _mm256_setzero_pd();

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d px = _mm256_loadu_pd(xs.data() + i);
        const __m256d py = _mm256_loadu_pd(ys.data() + i);
        const __m256d dx = _mm256_sub_pd(px, vzx);
        const __m256d dy = _mm256_sub_pd(py, vzy);
        const __m256d d2 = _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dx, dx));
        const __m256d w = exp_nonpositive(_mm256_mul_pd(d2, vneg));
        sw = _mm256_add_pd(sw, w);
        swx = _mm256_fmadd_pd(w, px, swx);
        swy = _mm256_fmadd_pd(w, py, swy);
    }
    if (i < n) {
        const __m256i mask = tail_mask(n - i);
        const __m256d px = _mm256_maskload_pd(xs.data() + i, mask);
        const __m256d py = _mm256_maskload_pd(ys.data() + i, mask);
        const __m256d dx = _mm256_sub_pd(px, vzx);
        const __m256d dy = _mm256_sub_pd(py, vzy);
        const __m256d d2 = _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dx, dx));
        const __m256d w = _mm256_and_pd(exp_nonpositive(_mm256_mul_pd(d2, vneg)),
                                        _mm256_castsi256_pd(mask));
        sw = _mm256_add_pd(sw, w);
        swx = _mm256_fmadd_pd(w, px, swx);
        swy = _mm256_fmadd_pd(w, py, swy);
    }
    return {hsum(sw), hsum(swx), hsum(swy)};
}

double distance_sum(std::span<const double> xs, std::span<const double> ys, double px,
                    double py) {
    const std::size_t n = xs.size();
    const __m256d vpx = _mm256_set1_pd(px);
    const __m256d vpy = _mm256_set1_pd(py);
    __m256d acc = _mm256_setzero_pd();

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs.data() + i), vpx);
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys.data() + i), vpy);
        acc = _mm256_add_pd(acc, _mm256_sqrt_pd(_mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dx, dx))));
    }
    if (i < n) {
        const __m256i mask = tail_mask(n - i);
        const __m256d dx = _mm256_sub_pd(_mm256_maskload_pd(xs.data() + i, mask), vpx);
        const __m256d dy = _mm256_sub_pd(_mm256_maskload_pd(ys.data() + i, mask), vpy);
        const __m256d d = _mm256_sqrt_pd(_mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dx, dx)));
        acc = _mm256_add_pd(acc, _mm256_and_pd(d, _mm256_castsi256_pd(mask)));
    }
    return hsum(acc);
}

}  // namespace grounder::kernels::avx2
