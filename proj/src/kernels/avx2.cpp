// AVX2/FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the runtime CPUID check in dispatch.cpp.

#include "dglcb/kernels.hpp"

#if defined(DGLCB_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>
#include <bit>
#include <vector>

#include "link_scalar.hpp"

namespace dglcb::kernels::avx2 {

namespace {

inline __m256d polevl(__m256d x, const double* c, int degree) {
    __m256d acc = _mm256_set1_pd(c[0]);
    for (int i = 1; i <= degree; ++i) acc = _mm256_fmadd_pd(acc, x, _mm256_set1_pd(c[i]));
    return acc;
}

// Leading coefficient 1 is implicit.
inline __m256d p1evl(__m256d x, const double* c, int degree) {
    __m256d acc = _mm256_add_pd(x, _mm256_set1_pd(c[0]));
    for (int i = 1; i < degree; ++i) acc = _mm256_fmadd_pd(acc, x, _mm256_set1_pd(c[i]));
    return acc;
}

// Cephes-style exp: round-to-nearest range reduction by ln 2, Pade form on
// [-ln2/2, ln2/2], exponent assembled directly in the IEEE bits.
inline __m256d exp_pd(__m256d x) {
    static constexpr double kP[] = {1.26177193074810590878e-4, 3.02994407707441961300e-2,
                                    9.99999999999999999910e-1};
    static constexpr double kQ[] = {3.00198505138664455042e-6, 2.52448340349684104192e-3,
                                    2.27265548208155028766e-1, 2.00000000000000000009e0};
    x = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(-708.0)), _mm256_set1_pd(709.0));
    const __m256d fx = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                       _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    x = _mm256_fnmadd_pd(fx, _mm256_set1_pd(6.93145751953125e-1), x);
    x = _mm256_fnmadd_pd(fx, _mm256_set1_pd(1.42860682030941723212e-6), x);
    const __m256d xx = _mm256_mul_pd(x, x);
    const __m256d px = _mm256_mul_pd(x, polevl(xx, kP, 2));
    const __m256d qx = polevl(xx, kQ, 3);
    __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
    r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), r, _mm256_set1_pd(1.0));
    __m256i n = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(fx));
    n = _mm256_slli_epi64(_mm256_add_epi64(n, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(r, _mm256_castsi256_pd(n));
}

// log1p(z) for z in [0, 1]. log(w) of w = 1 + z by the Cephes rational form on
// [sqrt(1/2), sqrt(2)], then rescaled by z / (w - 1) to recover the bits lost
// when forming w.
inline __m256d log1p_unit_pd(__m256d z) {
    static constexpr double kP[] = {1.01875663804580931796e-4, 4.97494994976747001425e-1,
                                    4.70579119878881725854e0,  1.44989225341610930846e1,
                                    1.79368678507819816313e1,  7.70838733755885391666e0};
    static constexpr double kQ[] = {1.12873587189167450590e1, 4.52279145837532221105e1,
                                    8.29875266912776603211e1, 7.11544750618563894466e1,
                                    2.31251620126765340583e1};
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d w = _mm256_add_pd(one, z);
    const __m256d high = _mm256_cmp_pd(w, _mm256_set1_pd(1.4142135623730950488), _CMP_GT_OQ);
    const __m256d e = _mm256_and_pd(high, one);
    const __m256d m = _mm256_blendv_pd(w, _mm256_mul_pd(w, _mm256_set1_pd(0.5)), high);
    const __m256d x = _mm256_sub_pd(m, one);
    const __m256d x2 = _mm256_mul_pd(x, x);
    __m256d y = _mm256_mul_pd(x, _mm256_div_pd(_mm256_mul_pd(x2, polevl(x, kP, 5)), p1evl(x, kQ, 5)));
    y = _mm256_fnmadd_pd(e, _mm256_set1_pd(2.121944400546905827679e-4), y);
    y = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), x2, y);
    __m256d logw = _mm256_add_pd(x, y);
    logw = _mm256_fmadd_pd(e, _mm256_set1_pd(0.693359375), logw);

    const __m256d wm1 = _mm256_sub_pd(w, one);
    const __m256d exact = _mm256_cmp_pd(wm1, _mm256_setzero_pd(), _CMP_EQ_OQ);
    const __m256d ratio = _mm256_div_pd(z, _mm256_blendv_pd(wm1, one, exact));
    return _mm256_blendv_pd(_mm256_mul_pd(logw, ratio), z, exact);
}

struct LinkLanes {
    __m256d mean;
    __m256d slope;
    __m256d cumulant;
};

inline LinkLanes eval_link(LinkKind link, __m256d u) {
    switch (link) {
        case LinkKind::linear:
            return {u, _mm256_set1_pd(1.0), _mm256_mul_pd(_mm256_set1_pd(0.5), _mm256_mul_pd(u, u))};
        case LinkKind::logistic: {
            const __m256d abs_u = _mm256_andnot_pd(_mm256_set1_pd(-0.0), u);
            const __m256d e = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), abs_u));
            const __m256d inv = _mm256_div_pd(_mm256_set1_pd(1.0), _mm256_add_pd(_mm256_set1_pd(1.0), e));
            const __m256d nonneg = _mm256_cmp_pd(u, _mm256_setzero_pd(), _CMP_GE_OQ);
            const __m256d mean = _mm256_blendv_pd(_mm256_mul_pd(e, inv), inv, nonneg);
            const __m256d slope = _mm256_mul_pd(_mm256_mul_pd(e, inv), inv);
            const __m256d cumulant = _mm256_add_pd(_mm256_max_pd(u, _mm256_setzero_pd()), log1p_unit_pd(e));
            return {mean, slope, cumulant};
        }
        case LinkKind::poisson: {
            const __m256d e = exp_pd(u);
            return {e, e, e};
        }
    }
    return {_mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd()};
}

// Wrapper so std::vector keeps the 32-byte alignment.
struct Lanes {
    __m256d v;
};

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const double l0 = _mm_cvtsd_f64(lo);
    const double l1 = _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
    const double h0 = _mm_cvtsd_f64(hi);
    const double h1 = _mm_cvtsd_f64(_mm_unpackhi_pd(hi, hi));
    return (l0 + l1) + (h0 + h1);
}

}  // namespace

bool compiled() { return true; }

void glm_moments(const GlmBatch& batch, const double* theta, GlmMoments& out) {
    const std::size_t d = batch.d;
    const std::size_t packed = d * (d + 1) / 2;
    const std::size_t stride = batch.stride;
    const double* x = batch.x;

    std::vector<Lanes> grad(d, Lanes{_mm256_setzero_pd()});
    std::vector<Lanes> hess(packed, Lanes{_mm256_setzero_pd()});
    std::vector<Lanes> th(d);
    for (std::size_t j = 0; j < d; ++j) th[j].v = _mm256_set1_pd(theta[j]);
    __m256d objective = _mm256_setzero_pd();
    const __m256d lo = _mm256_set1_pd(-batch.clamp);
    const __m256d hi = _mm256_set1_pd(batch.clamp);

    std::size_t i = 0;
    for (; i + 4 <= batch.n; i += 4) {
        __m256d u = _mm256_setzero_pd();
        for (std::size_t j = 0; j < d; ++j) u = _mm256_fmadd_pd(_mm256_loadu_pd(x + j * stride + i), th[j].v, u);
        u = _mm256_min_pd(_mm256_max_pd(u, lo), hi);
        const LinkLanes e = eval_link(batch.link, u);
        const __m256d y = _mm256_loadu_pd(batch.y + i);
        objective = _mm256_add_pd(objective, _mm256_fnmadd_pd(y, u, e.cumulant));
        const __m256d r = _mm256_sub_pd(e.mean, y);
        std::size_t k = 0;
        for (std::size_t a = 0; a < d; ++a) {
            const __m256d xa = _mm256_loadu_pd(x + a * stride + i);
            grad[a].v = _mm256_fmadd_pd(r, xa, grad[a].v);
            const __m256d wa = _mm256_mul_pd(e.slope, xa);
            for (std::size_t b = a; b < d; ++b, ++k) {
                hess[k].v = _mm256_fmadd_pd(wa, _mm256_loadu_pd(x + b * stride + i), hess[k].v);
            }
        }
    }

    double tail_objective = 0.0;
    for (std::size_t j = 0; j < d; ++j) out.gradient[j] = 0.0;
    for (std::size_t k = 0; k < packed; ++k) out.hessian[k] = 0.0;
    for (; i < batch.n; ++i) {
        double u = 0.0;
        for (std::size_t j = 0; j < d; ++j) u += x[j * stride + i] * theta[j];
        u = std::clamp(u, -batch.clamp, batch.clamp);
        const detail::LinkEval e = detail::eval_link(batch.link, u);
        const double y = batch.y[i];
        tail_objective += e.cumulant - y * u;
        const double r = e.mean - y;
        std::size_t k = 0;
        for (std::size_t a = 0; a < d; ++a) {
            const double xa = x[a * stride + i];
            out.gradient[a] += r * xa;
            const double wa = e.slope * xa;
            for (std::size_t b = a; b < d; ++b) out.hessian[k++] += wa * x[b * stride + i];
        }
    }

    out.objective = hsum(objective) + tail_objective;
    for (std::size_t j = 0; j < d; ++j) out.gradient[j] += hsum(grad[j].v);
    for (std::size_t k = 0; k < packed; ++k) out.hessian[k] += hsum(hess[k].v);
}

std::size_t count_missing(std::span<const std::int64_t> delays, std::int64_t t) {
    const std::int64_t* data = delays.data();
    const __m256i threshold = _mm256_set1_epi64x(t - 1);
    const __m256i step = _mm256_set1_epi64x(4);
    __m256i index = _mm256_setr_epi64x(1, 2, 3, 4);
    std::size_t count = 0;
    std::int64_t s = 1;
    for (; s + 3 < t; s += 4) {
        const __m256i due = _mm256_add_epi64(index, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + s - 1)));
        const int mask = _mm256_movemask_pd(_mm256_castsi256_pd(_mm256_cmpgt_epi64(due, threshold)));
        count += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(mask)));
        index = _mm256_add_epi64(index, step);
    }
    for (; s < t; ++s) {
        if (s + data[s - 1] >= t) ++count;
    }
    return count;
}

}  // namespace dglcb::kernels::avx2

#else

namespace dglcb::kernels::avx2 {

bool compiled() { return false; }
void glm_moments(const GlmBatch& batch, const double* theta, GlmMoments& out) {
    scalar::glm_moments(batch, theta, out);
}
std::size_t count_missing(std::span<const std::int64_t> delays, std::int64_t t) {
    return scalar::count_missing(delays, t);
}

}  // namespace dglcb::kernels::avx2

#endif
