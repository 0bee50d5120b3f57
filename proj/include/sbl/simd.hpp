#pragma once

#include <cstddef>

#include "sbl/aligned.hpp"

namespace sbl::simd {

// Element-wise kernels behind one dispatch table. Complex arrays are
// interleaved (re, im) pairs, as std::complex<double> guarantees.
struct Kernels {
  const char* name;
  void (*cmul)(cplx* a, const cplx* b, std::size_t n);          // a[i] *= b[i]
  void (*cmul_real)(cplx* a, const double* r, std::size_t n);   // a[i] *= r[i]
  void (*cscale)(cplx* a, double s, std::size_t n);             // a[i] *= s
  double (*norm_sq)(const cplx* a, std::size_t n);              // sum |a|^2
  double (*weighted_norm_sq)(const cplx* a, const double* w, std::size_t n);
  void (*axpy)(double* y, double alpha, const double* x, std::size_t n);
};

const Kernels& scalar();
// nullptr when the CPU lacks AVX2/FMA or the build did not include them.
const Kernels* avx2();
// Selected once: AVX2 when available unless SBL_SIMD=scalar.
const Kernels& active();

}  // namespace sbl::simd
