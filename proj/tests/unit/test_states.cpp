#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "sbl/error.hpp"
#include "sbl/quantization.hpp"
#include "sbl/states.hpp"

using namespace sbl;

namespace {

Vec v1(double a) { return {a, 0.0, 0.0}; }

StateParams wkb_params() {
  StateParams p;
  p.phase = [](const Vec& x) { return 0.5 * x[0] * x[0]; };
  p.grad_phase = [](const Vec& x) { return Vec{x[0], 0.0, 0.0}; };
  return p;
}

}  // namespace

TEST_CASE("coherent state is normalised with variance hbar/2") {
  const Grid g = Grid::cube(1, 16.0, 256);
  StateParams par;
  const auto s = make_state(Family::coherent, ProfileFunction::zero(1), par, 1.0, g);
  CHECK(std::abs(s.norm() - 1.0) < 1e-8);
  for (std::size_t j = 0; j < g.points[0]; j += 17) {
    const double x = g.coord(0, j);
    CHECK(std::abs(s.amplitude[j] - std::pow(M_PI, -0.25) * std::exp(-x * x / 2.0)) < 1e-14);
  }
  double var = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) var += std::norm(s.amplitude[j]) * std::pow(g.coord(0, j), 2);
  CHECK(var * g.cell_volume() == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(boundary_mass(s) < 1e-8);
}

TEST_CASE("coherent state in 3d has unit norm") {
  const Grid g = Grid::cube(3, 6.0, 64);
  StateParams par;
  par.x0 = {0.2, -0.1, 0.0};
  par.p0 = {0.5, 0.0, 0.0};
  const auto s = make_state(Family::coherent, ProfileFunction::zero(3), par, 0.25, g);
  CHECK(std::abs(s.norm() - 1.0) < 1e-8);
}

TEST_CASE("lagrangian momentum state has the profile modulus") {
  const Grid g = Grid::cube(1, 20.0, 1024);
  StateParams par;
  par.p0 = v1(1.0);
  const auto w = ProfileFunction::gaussian(1, 1.0);
  const auto s = make_state(Family::lagrangian_momentum, w, par, 0.1, g);
  const Field wv = w.sample(g);
  for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(std::abs(s.amplitude[j]) - std::abs(wv[j])) < 1e-15);
  CHECK(std::abs(s.norm_sq() - w.l2_norm_sq()) < 1e-10);
}

TEST_CASE("wkb state carries the quadratic phase") {
  const Grid g = Grid::cube(1, 8.0, 1024);
  const auto w = ProfileFunction::bump(1, 2.0);
  const double hbar = 0.1;
  const auto s = make_state(Family::wkb, w, wkb_params(), hbar, g);
  for (std::size_t j = 0; j < g.size(); j += 31) {
    const double x = g.coord(0, j);
    CHECK(std::abs(s.amplitude[j] - w(v1(x)) * std::polar(1.0, x * x / (2.0 * hbar))) < 1e-12);
  }
}

TEST_CASE("under-resolved grids and unknown families are rejected") {
  const Grid coarse = Grid::cube(1, 20.0, 64);
  StateParams par;
  par.p0 = v1(2.0);
  CHECK_THROWS_AS(make_state(Family::coherent, ProfileFunction::zero(1), par, 0.1, coarse), ResolutionError);
  CHECK_THROWS_AS(family_from_name("squeezed"), DomainError);
  CHECK(family_from_name("wkb") == Family::wkb);
}

TEST_CASE("limiting measures of the named families") {
  StateParams par;
  par.x0 = v1(1.0);
  par.p0 = v1(2.0);
  const auto mu = limiting_measure(Family::coherent, ProfileFunction::zero(1), par);
  CHECK(mu.kind == WignerMeasure::Kind::point_mass);
  CHECK(mu.mass() == 1.0);
  const auto a = PhaseSpaceSymbol::gaussian(1, v1(0.3), 0.7, v1(1.5), 0.9);
  CHECK(integrate_symbol(mu, a).value == a(v1(1.0), v1(2.0)));
  CHECK(integrate_symbol(mu, a).error == 0.0);

  const auto w = ProfileFunction::gaussian(1, 0.8, 1.3);
  const auto lm = limiting_measure(Family::lagrangian_momentum, w, par);
  const auto g = PhaseSpaceSymbol::momentum_only(1, [](const Vec& p) { return std::cos(p[0]); });
  CHECK(integrate_symbol(lm, g).value == doctest::Approx(std::cos(2.0) * w.l2_norm_sq()).epsilon(1e-12));
  // ||w||^2 = a^2 sqrt(pi) s for a gaussian of width s.
  CHECK(lm.mass() == doctest::Approx(1.3 * 1.3 * std::sqrt(M_PI) * 0.8).epsilon(1e-10));

  const auto zero = limiting_measure(Family::lagrangian_momentum, ProfileFunction::zero(1), par);
  CHECK(zero.mass() == 0.0);
  CHECK(integrate_symbol(zero, a).value == 0.0);

  CHECK_THROWS_AS(limiting_measure(Family::custom, w, par), UnsupportedError);
}

TEST_CASE("wkb graph measure against an adaptive quadrature oracle") {
  const auto w = ProfileFunction::gaussian(1, 0.6);
  const auto mu = limiting_measure(Family::wkb, w, wkb_params());
  const auto a = PhaseSpaceSymbol::gaussian(1, v1(0.2), 0.5, v1(-0.1), 0.4);
  const auto got = integrate_symbol(mu, a);
  auto integrand = [&](double x) { return std::norm(w(v1(x))) * a(v1(x), v1(x)); };
  const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -10.0, 10.0, 15, 1e-14);
  CHECK(got.value == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(got.error < 1e-8);
}

TEST_CASE("limiting measure mass equals the squared state norm") {
  const double hbar = 0.1;
  const Grid g = Grid::cube(1, 16.0, 2048);
  StateParams par;
  par.p0 = v1(0.5);
  const auto w = ProfileFunction::gaussian(1, 0.7);
  for (Family f : {Family::lagrangian_momentum, Family::lagrangian_position, Family::coherent}) {
    const auto s = make_state(f, w, par, hbar, g);
    const auto mu = limiting_measure(f, w, par);
    CHECK(std::abs(mu.mass() - s.norm_sq()) < 1e-6);
  }
  const auto sw = make_state(Family::wkb, ProfileFunction::bump(1, 2.0), wkb_params(), hbar, g);
  CHECK(std::abs(limiting_measure(Family::wkb, ProfileFunction::bump(1, 2.0), wkb_params()).mass() - sw.norm_sq()) <
        1e-6);
}

TEST_CASE("position-concentrated measure is the scaled profile spectrum") {
  StateParams par;
  par.x0 = v1(0.4);
  const auto w = ProfileFunction::gaussian(1, 1.0);
  const auto mu = limiting_measure(Family::lagrangian_position, w, par);
  CHECK(mu.kind == WignerMeasure::Kind::position_delta_times_density);
  // (2 pi)^{-1} |w^(p)|^2 = e^{-p^2}; pairing with e^{-p^2} gives sqrt(pi/2).
  const auto a = PhaseSpaceSymbol::product(
      1, [](const Vec& x) { return 1.0 + x[0]; }, [](const Vec& p) { return std::exp(-p[0] * p[0]); });
  CHECK(integrate_symbol(mu, a).value == doctest::Approx(1.4 * std::sqrt(M_PI / 2.0)).epsilon(1e-10));
}

TEST_CASE("mollifier converges on a smooth profile and contracts") {
  const Grid g = Grid::cube(1, 4.0, 2048);
  const auto bump = ProfileFunction::bump(1, 1.0);
  const Field wv = bump.sample(g);
  double prev = 1e300;
  for (double eps : {0.2, 0.1, 0.05, 0.02}) {
    const auto m = mollify_profile(bump, eps, &g);
    const double d = l2_distance(g, m.values, wv);
    CHECK(d < prev);
    prev = d;
    CHECK(l2_norm(g, m.values) <= l2_norm(g, wv) * (1.0 + 1e-12));
  }
  CHECK(prev < 1e-3);

  const auto z = mollify_profile(ProfileFunction::zero(1), 0.1, &g);
  for (const auto& v : z.values) CHECK(v == cplx(0.0, 0.0));
  CHECK_THROWS_AS(mollify_profile(bump, 0.5 * g.spacing(0), &g), ResolutionError);
}

TEST_CASE("mollified indicator matches direct convolution; distance scales like sqrt(eps)") {
  const Grid g = Grid::cube(1, 4.0, 1024);
  Field ind(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) ind[j] = std::abs(g.coord(0, j)) < 0.5 ? 1.0 : 0.0;
  const auto w = ProfileFunction::sampled(g, ind, 0);
  auto direct = [&](double eps) {
    // Direct O(N^2) periodic convolution with the same normalised bump.
    const std::size_t n = g.size();
    std::vector<double> k(n);
    double mass = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const long long s = j < n / 2 ? (long long)j : (long long)j - (long long)n;
      const double r = s * g.spacing(0) / eps;
      k[j] = std::abs(r) < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0;
      mass += k[j];
    }
    Field out(n);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += k[j] * ind[(i + n - j) % n].real();
      out[i] = acc / mass;
    }
    return out;
  };
  double dist[2];
  int c = 0;
  for (double eps : {0.1, 0.05}) {
    const auto m = mollify_profile(w, eps);
    const Field o = direct(eps);
    CHECK(l2_distance(g, m.values, o) < 1e-12);
    dist[c++] = l2_distance(g, o, ind);
  }
  const double ratio = dist[1] / dist[0];
  CHECK(ratio > 0.6);
  CHECK(ratio < 0.8);
}

TEST_CASE("sobolev seminorm: order zero, gaussian moments, uniformity") {
  const Grid g = Grid::cube(1, 12.0, 2048);
  StateParams par;
  par.p0 = v1(1.0);
  for (double hbar : {0.2, 0.1}) {
    const auto s = make_state(Family::coherent, ProfileFunction::zero(1), par, hbar, g);
    CHECK(sobolev_seminorm(s, 0).value == doctest::Approx(s.norm()).epsilon(1e-12));
    const double v = hbar / 2.0;
    const double m2 = 1.0 + v, m4 = 1.0 + 6.0 * v + 3.0 * v * v;
    const double oracle = std::sqrt(std::max({1.0, m2, m4}));
    const auto r = sobolev_seminorm(s, 2);
    CHECK(std::abs(r.value - oracle) < 1e-6);
    CHECK_FALSE(r.aliasing_warning);
  }
  // Bump times plane wave: bounded as hbar decreases.
  const auto bump = ProfileFunction::bump(1, 1.5);
  double first = 0.0;
  for (double hbar : {0.2, 0.1, 0.05}) {
    const auto s = make_state(Family::lagrangian_momentum, bump, par, hbar, g);
    const double n1 = sobolev_seminorm(s, 1).value;
    if (first == 0.0) first = n1;
    CHECK(n1 < 1.5 * first);
  }
}

TEST_CASE("sobolev seminorms up to order 4 are uniform in hbar for every family") {
  const Grid g = Grid::cube(1, 16.0, 4096);
  StateParams par;
  par.x0 = v1(0.5);
  par.p0 = v1(0.8);
  auto wk = wkb_params();
  const auto w = ProfileFunction::gaussian(1, 0.8);
  const auto bump = ProfileFunction::bump(1, 1.5);
  for (Family f : {Family::lagrangian_momentum, Family::lagrangian_position, Family::wkb, Family::coherent}) {
    std::vector<double> vals;
    for (double hbar : {0.2, 0.1, 0.05}) {
      const auto s = f == Family::wkb ? make_state(f, bump, wk, hbar, g) : make_state(f, w, par, hbar, g);
      vals.push_back(sobolev_seminorm(s, 4).value);
    }
    CAPTURE(family_name(f));
    for (double v : vals) CHECK(v < 2.0 * vals.front() + 1.0);
  }
}

TEST_CASE("binary state container round-trips bit-exactly") {
  const Grid g = Grid::cube(2, 6.0, 32);
  StateParams par;
  par.p0 = {0.3, -0.2, 0.0};
  const auto s = make_state(Family::coherent, ProfileFunction::zero(2), par, 0.5, g);
  std::stringstream ss;
  write_state(ss, s);
  const auto r = read_state(ss);
  CHECK(r.grid == s.grid);
  CHECK(r.hbar == s.hbar);
  CHECK(r.family == s.family);
  CHECK(r.amplitude == s.amplitude);
  std::stringstream bad("NOTSTATE");
  CHECK_THROWS_AS(read_state(bad), IoError);
}
