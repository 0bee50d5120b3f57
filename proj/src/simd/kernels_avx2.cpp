#include <immintrin.h>

#include "sbl/simd.hpp"

namespace sbl::simd {
namespace {

// Two complex numbers per __m256d: [r0 i0 r1 i1].
inline __m256d mul2(__m256d a, __m256d b) {
  const __m256d br = _mm256_movedup_pd(b);        // r r
  const __m256d bi = _mm256_permute_pd(b, 0xF);   // i i
  const __m256d as = _mm256_permute_pd(a, 0x5);   // swap re/im
  return _mm256_fmaddsub_pd(a, br, _mm256_mul_pd(as, bi));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void cmul_v(cplx* a, const cplx* b, std::size_t n) {
  double* pa = reinterpret_cast<double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(pa + 2 * i);
    const __m256d vb = _mm256_loadu_pd(pb + 2 * i);
    _mm256_storeu_pd(pa + 2 * i, mul2(va, vb));
  }
  for (; i < n; ++i) a[i] *= b[i];
}

void cmul_real_v(cplx* a, const double* r, std::size_t n) {
  double* pa = reinterpret_cast<double*>(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m128d rr = _mm_loadu_pd(r + i);
    const __m256d w = _mm256_permute4x64_pd(_mm256_castpd128_pd256(rr), 0x50);  // r0 r0 r1 r1
    _mm256_storeu_pd(pa + 2 * i, _mm256_mul_pd(_mm256_loadu_pd(pa + 2 * i), w));
  }
  for (; i < n; ++i) a[i] *= r[i];
}

void cscale_v(cplx* a, double s, std::size_t n) {
  double* pa = reinterpret_cast<double*>(a);
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    _mm256_storeu_pd(pa + 2 * i, _mm256_mul_pd(_mm256_loadu_pd(pa + 2 * i), vs));
  for (; i < n; ++i) a[i] *= s;
}

double norm_sq_v(const cplx* a, std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v0 = _mm256_loadu_pd(pa + 2 * i);
    const __m256d v1 = _mm256_loadu_pd(pa + 2 * i + 4);
    acc0 = _mm256_fmadd_pd(v0, v0, acc0);
    acc1 = _mm256_fmadd_pd(v1, v1, acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += std::norm(a[i]);
  return s;
}

double weighted_norm_sq_v(const cplx* a, const double* w, std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d v = _mm256_loadu_pd(pa + 2 * i);
    const __m128d ww = _mm_loadu_pd(w + i);
    const __m256d wv = _mm256_permute4x64_pd(_mm256_castpd128_pd256(ww), 0x50);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(v, v), wv, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * std::norm(a[i]);
  return s;
}

void axpy_v(double* y, double alpha, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

const Kernels kAvx2{"avx2", cmul_v, cmul_real_v, cscale_v, norm_sq_v, weighted_norm_sq_v, axpy_v};

}  // namespace

const Kernels* avx2_table() { return &kAvx2; }

}  // namespace sbl::simd
