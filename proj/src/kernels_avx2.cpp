#include "hudcalib/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace hudcalib::kernels {

namespace {

// Vector exp after the classic Cephes expansion: split x = n ln2 + r with
// |r| <= ln2/2, approximate e^r = 1 + 2 r P(r^2) / (Q(r^2) - r P(r^2)), then
// scale by 2^n through the exponent bits. Inputs are clamped to +/-708 so the
// result stays in the normal range; softmax arguments after max subtraction
// are <= 0, so the upper clamp never fires there.

constexpr double kExpClamp = 708.0;
constexpr double kLog2e = 1.44269504088896340736;
constexpr double kC1 = 6.93145751953125e-1;
constexpr double kC2 = 1.42860682030941723212e-6;

constexpr double kP0 = 1.26177193074810590878e-4;
constexpr double kP1 = 3.02994407707441961300e-2;
constexpr double kP2 = 9.99999999999999999910e-1;

constexpr double kQ0 = 3.00198505138664455042e-6;
constexpr double kQ1 = 2.52448340349684104192e-3;
constexpr double kQ2 = 2.27265548208155028766e-1;
constexpr double kQ3 = 2.00000000000000000005e0;

inline __m256d exp_pd(__m256d x) {
  x = _mm256_min_pd(x, _mm256_set1_pd(kExpClamp));
  x = _mm256_max_pd(x, _mm256_set1_pd(-kExpClamp));

  const __m256d n = _mm256_round_pd(
      _mm256_mul_pd(x, _mm256_set1_pd(kLog2e)),
      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kC1), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kC2), r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(kP0), rr, _mm256_set1_pd(kP1));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(kP2));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_fmadd_pd(_mm256_set1_pd(kQ0), rr, _mm256_set1_pd(kQ1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kQ2));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kQ3));
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i pow2 =
      _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(e, _mm256_castsi256_pd(pow2));
}

// Lane order is fixed so repeated runs reduce in the same order.
inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

double reduce_max_avx2(const double* x, std::size_t n) {
  std::size_t i;
  double m;
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) {
      vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
    }
    const __m128d m2 = _mm_max_pd(_mm256_castpd256_pd128(vm),
                                  _mm256_extractf128_pd(vm, 1));
    m = std::max(_mm_cvtsd_f64(m2), _mm_cvtsd_f64(_mm_unpackhi_pd(m2, m2)));
  } else {
    m = x[0];
    i = 1;
  }
  for (; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

std::size_t argmax_avx2(const double* x, std::size_t n) {
  std::size_t i = 0;
  double best = x[0];
  std::size_t best_i = 0;
  if (n >= 8) {
    // Strict > keeps the first occurrence within each lane's stride; the
    // cross-lane pass below takes the smallest index among tied lanes.
    __m256d vmax = _mm256_loadu_pd(x);
    __m256i vidx = _mm256_set_epi64x(3, 2, 1, 0);
    __m256i cur = vidx;
    const __m256i four = _mm256_set1_epi64x(4);
    for (i = 4; i + 4 <= n; i += 4) {
      cur = _mm256_add_epi64(cur, four);
      const __m256d v = _mm256_loadu_pd(x + i);
      const __m256d gt = _mm256_cmp_pd(v, vmax, _CMP_GT_OQ);
      vmax = _mm256_blendv_pd(vmax, v, gt);
      vidx = _mm256_blendv_epi8(vidx, cur, _mm256_castpd_si256(gt));
    }
    alignas(32) double mx[4];
    alignas(32) std::int64_t ix[4];
    _mm256_store_pd(mx, vmax);
    _mm256_store_si256(reinterpret_cast<__m256i*>(ix), vidx);
    best = mx[0];
    best_i = static_cast<std::size_t>(ix[0]);
    for (int k = 1; k < 4; ++k) {
      const auto cand = static_cast<std::size_t>(ix[k]);
      if (mx[k] > best || (mx[k] == best && cand < best_i)) {
        best = mx[k];
        best_i = cand;
      }
    }
  } else {
    i = 1;
  }
  for (; i < n; ++i) {
    if (x[i] > best) {
      best = x[i];
      best_i = i;
    }
  }
  return best_i;
}

double exp_sum_avx2(const double* x, std::size_t n, double shift, double inv_t) {
  const __m256d vs = _mm256_set1_pd(shift);
  const __m256d vt = _mm256_set1_pd(inv_t);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v =
        _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vs), vt);
    acc = _mm256_add_pd(acc, exp_pd(v));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += std::exp((x[i] - shift) * inv_t);
  return s;
}

double exp_store_sum_avx2(const double* x, std::size_t n, double shift,
                          double inv_t, double* out) {
  const __m256d vs = _mm256_set1_pd(shift);
  const __m256d vt = _mm256_set1_pd(inv_t);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v =
        _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vs), vt);
    const __m256d e = exp_pd(v);
    _mm256_storeu_pd(out + i, e);
    acc = _mm256_add_pd(acc, e);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    out[i] = std::exp((x[i] - shift) * inv_t);
    s += out[i];
  }
  return s;
}

void scale_avx2(double* x, std::size_t n, double s) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), vs));
  }
  for (; i < n; ++i) x[i] *= s;
}

double half_abs_diff_sum_avx2(const double* p, const double* q, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(p + i), _mm256_loadu_pd(q + i));
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign, d));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += std::fabs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops = {
      "avx2",          reduce_max_avx2, argmax_avx2,
      exp_sum_avx2,    exp_store_sum_avx2,
      scale_avx2,      half_abs_diff_sum_avx2,
  };
  return ops;
}

}  // namespace hudcalib::kernels

#endif
