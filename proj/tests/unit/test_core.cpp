#include <cmath>
#include <random>

#include "doctest.h"
#include "sbl/error.hpp"
#include "sbl/fft.hpp"
#include "sbl/grid.hpp"
#include "sbl/quadrature.hpp"
#include "sbl/simd.hpp"

using namespace sbl;

namespace {

Field random_field(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Field f(n);
  for (auto& v : f) v = cplx(nd(rng), nd(rng));
  return f;
}

RealField random_real(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  RealField f(n);
  for (auto& v : f) v = ud(rng);
  return f;
}

}  // namespace

TEST_CASE("simd kernels agree with the scalar reference") {
  const simd::Kernels* v = simd::avx2();
  if (!v) {
    MESSAGE("AVX2 unavailable; only the scalar table is exercised");
    v = &simd::scalar();
  }
  const auto& s = simd::scalar();
  for (std::size_t n : {0u, 1u, 2u, 3u, 7u, 64u, 1001u}) {
    const Field a0 = random_field(n, 1), b = random_field(n, 2);
    const RealField r = random_real(n, 3);

    Field a1 = a0, a2 = a0;
    s.cmul(a1.data(), b.data(), n);
    v->cmul(a2.data(), b.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(a1[i] - a2[i]) <= 1e-14 * (1.0 + std::abs(a1[i])));

    a1 = a0;
    a2 = a0;
    s.cmul_real(a1.data(), r.data(), n);
    v->cmul_real(a2.data(), r.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(a1[i] == a2[i]);

    a1 = a0;
    a2 = a0;
    s.cscale(a1.data(), 0.37, n);
    v->cscale(a2.data(), 0.37, n);
    for (std::size_t i = 0; i < n; ++i) CHECK(a1[i] == a2[i]);

    const double ns = s.norm_sq(a0.data(), n), nv = v->norm_sq(a0.data(), n);
    CHECK(std::abs(ns - nv) <= 1e-13 * (1.0 + ns));
    RealField w = r;
    for (auto& x : w) x = std::abs(x);
    const double ws = s.weighted_norm_sq(a0.data(), w.data(), n), wv = v->weighted_norm_sq(a0.data(), w.data(), n);
    CHECK(std::abs(ws - wv) <= 1e-13 * (1.0 + ws));

    RealField y1 = random_real(n, 4), y2 = y1;
    s.axpy(y1.data(), -1.5, r.data(), n);
    v->axpy(y2.data(), -1.5, r.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (1.0 + std::abs(y1[i])));
  }
}

TEST_CASE("active kernel table is one of the known tables") {
  const auto& a = simd::active();
  CHECK((&a == &simd::scalar() || &a == simd::avx2()));
}

TEST_CASE("grid coordinates, wavenumbers and validation") {
  const Grid g = Grid::cube(2, 4.0, 8);
  CHECK(g.size() == 64);
  CHECK(g.coord(0, 0) == doctest::Approx(-2.0));
  CHECK(g.coord(1, 7) == doctest::Approx(1.5));
  CHECK(g.wavenumber(0, 1) == doctest::Approx(2.0 * M_PI / 4.0));
  CHECK(g.wavenumber(0, 7) == doctest::Approx(-2.0 * M_PI / 4.0));
  CHECK(g.cell_volume() == doctest::Approx(0.25));
  const auto idx = g.unflatten(13);
  CHECK(idx[0] == 1);
  CHECK(idx[1] == 5);
  Grid bad = g;
  bad.points[0] = 6;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS(Grid::cube(4, 1.0, 8), DomainError);
}

TEST_CASE("fft round trip and single-mode transform") {
  const Grid g = Grid::cube(3, 2.0, 8);
  const Field f0 = random_field(g.size(), 9);
  Field f = f0;
  fft::forward(g, f);
  fft::backward(g, f);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(f[i] / double(g.size()) - f0[i]) < 1e-13);

  Grid g1 = Grid::cube(1, 1.0, 16);
  Field e(16);
  for (std::size_t j = 0; j < 16; ++j) e[j] = std::polar(1.0, 2.0 * M_PI * 3.0 * j / 16.0);
  fft::forward(g1, e);
  for (std::size_t m = 0; m < 16; ++m) CHECK(std::abs(e[m] - (m == 3 ? cplx(16.0) : cplx(0.0))) < 1e-12);
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  const auto r = quad::gauss_legendre(5, -1.0, 2.0);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.w[i] * std::pow(r.x[i], 9);
  CHECK(s == doctest::Approx((std::pow(2.0, 10) - 1.0) / 10.0).epsilon(1e-13));
  const auto c = quad::composite_gauss_legendre(4, 3, 0.0, 3.0);
  CHECK(c.size() == 12);
  double e = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) e += c.w[i] * std::exp(c.x[i]);
  CHECK(e == doctest::Approx(std::exp(3.0) - 1.0).epsilon(1e-9));
}

TEST_CASE("neville extrapolation reproduces polynomials and rejects bad sequences") {
  std::vector<double> h{0.8, 0.4, 0.2, 0.1};
  std::vector<std::complex<double>> f;
  for (double x : h) f.emplace_back(1.0 + 2.0 * x - 3.0 * x * x + x * x * x, -x);
  const auto r = quad::extrapolate_to_zero(h, f);
  CHECK(std::abs(r.value - std::complex<double>(1.0, 0.0)) < 1e-12);
  std::vector<std::complex<double>> q;
  for (double x : h) q.emplace_back(2.0 - x * x, 0.0);
  CHECK(quad::extrapolate_to_zero(h, q).error < 1e-12);
  std::vector<double> bad{0.1, 0.2, 0.05};
  std::vector<std::complex<double>> fb(3, 1.0);
  CHECK_THROWS_AS(quad::extrapolate_to_zero(bad, fb), ExtrapolationError);
}

TEST_CASE("chebyshev interpolation is exact for low-degree polynomials") {
  const auto x = quad::chebyshev2_nodes(6);
  std::vector<std::complex<double>> v;
  for (double t : x) v.emplace_back(t * t * t - t, 0.5 * t);
  for (double t : {-0.93, -0.2, 0.0, 0.41, 0.99}) {
    const auto y = quad::chebyshev2_interpolate(x, v, t);
    CHECK(std::abs(y - std::complex<double>(t * t * t - t, 0.5 * t)) < 1e-13);
  }
}
