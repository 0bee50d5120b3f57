#include <cstdlib>
#include <cstring>

#include "sbl/simd.hpp"

namespace sbl::simd {
namespace {

void cmul_s(cplx* a, const cplx* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    a[i] = cplx(ar * br - ai * bi, ar * bi + ai * br);
  }
}

void cmul_real_s(cplx* a, const double* r, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) a[i] = cplx(a[i].real() * r[i], a[i].imag() * r[i]);
}

void cscale_s(cplx* a, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) a[i] = cplx(a[i].real() * s, a[i].imag() * s);
}

double norm_sq_s(const cplx* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
  return s;
}

double weighted_norm_sq_s(const cplx* a, const double* w, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += w[i] * (a[i].real() * a[i].real() + a[i].imag() * a[i].imag());
  return s;
}

void axpy_s(double* y, double alpha, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

const Kernels kScalar{"scalar", cmul_s, cmul_real_s, cscale_s, norm_sq_s, weighted_norm_sq_s, axpy_s};

}  // namespace

const Kernels& scalar() { return kScalar; }

#ifdef SBL_HAVE_AVX2
const Kernels* avx2_table();
#endif

const Kernels* avx2() {
#ifdef SBL_HAVE_AVX2
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok ? avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const Kernels& active() {
  static const Kernels* chosen = [] {
    const char* env = std::getenv("SBL_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return &kScalar;
    const Kernels* v = avx2();
    return v ? v : &kScalar;
  }();
  return *chosen;
}

}  // namespace sbl::simd
