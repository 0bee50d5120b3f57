#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sbl/error.hpp"
#include "sbl/kinetics.hpp"
#include "sbl/quadrature.hpp"

using namespace sbl;

namespace {

constexpr double kPi = std::numbers::pi;

OnShellAmplitude constant_table(int dim, double value, std::vector<double> speeds) {
  OnShellAmplitude t;
  t.dim = dim;
  t.speeds = std::move(speeds);
  t.angles = dim == 1 ? std::vector<double>{1.0, -1.0} : quad::chebyshev2_nodes(8);
  for (std::size_t i = 0; i < t.speeds.size(); ++i) t.t_values.emplace_back(t.angles.size(), cplx(value, 0.0));
  return t;
}

const OnShellAmplitude& born_table() {
  static const OnShellAmplitude t = build_onshell_table(3, 0.25, 2, {0.9, 1.0, 1.1}, 24, default_gamma_sequence());
  return t;
}

Vec shift(const Vec& x, double s, const Vec& q) { return {x[0] + s * q[0], x[1] + s * q[1], x[2] + s * q[2]}; }

}  // namespace

TEST_CASE("zeroth term is damped free transport") {
  const CollisionKernelData k = collision_kernel(born_table(), 0.5);
  const auto a = PhaseSpaceSymbol::gaussian(3, {0.2, 0.1, 0.0}, 0.5, {0.8, 0.3, 0.0}, 0.6);
  const Vec x{0.1, -0.2, 0.3}, q{0.6, 0.8, 0.0};
  const double t = 0.3;
  CollisionSeriesConfig cfg;
  const double damp = std::exp(-t * k.sigma_tot(1.0));
  CHECK(collision_term(a, 0, t, x, q, k, cfg) == doctest::Approx(damp * a(shift(x, -t, q), q)).epsilon(1e-14));
  cfg.transport_sign = 1;
  CHECK(collision_term(a, 0, t, x, q, k, cfg) == doctest::Approx(damp * a(shift(x, t, q), q)).epsilon(1e-14));
}

TEST_CASE("no scatterers means free transport") {
  const CollisionKernelData k = collision_kernel(born_table(), 0.0);
  const auto a = PhaseSpaceSymbol::gaussian(3, {0.0, 0.0, 0.0}, 0.5, {1.0, 0.0, 0.0}, 0.6);
  const Vec x{0.1, 0.0, 0.0}, q{1.0, 0.0, 0.0};
  CollisionSeriesConfig cfg;
  for (int n = 1; n <= 3; ++n) CHECK(collision_term(a, n, 0.4, x, q, k, cfg) == 0.0);
  CHECK(collision_term(a, 0, 0.4, x, q, k, cfg) == doctest::Approx(a(shift(x, -0.4, q), q)));
  const KineticResult r = kmc_estimate(WignerMeasure::point_mass(3, x, q), a, 0.4, k, 100, 3);
  CHECK(r.value == doctest::Approx(a(shift(x, -0.4, q), q)).epsilon(1e-14));
  CHECK(r.mc_stderr == 0.0);
}

TEST_CASE("single collision with an isotropic kernel against a one-dimensional oracle") {
  const double tconst = 0.02, rho = 0.8, q = 1.0, s2 = 0.3;
  const CollisionKernelData k = collision_kernel(constant_table(3, tconst, {0.5, 1.5}), rho);
  const double sigma = std::pow(2.0 * kPi, 4.0) * rho * q * tconst * tconst;
  CHECK(k.sigma_tot(q) == doctest::Approx(4.0 * kPi * sigma).epsilon(1e-12));
  PhaseSpaceSymbol a;
  a.dim = 3;
  a.evaluator = [s2](const Vec& x, const Vec&) { return std::exp(-norm2(x, 3) / (2.0 * s2)); };
  const Vec x{0.2, 0.1, -0.1}, q0{q, 0.0, 0.0};
  const double t = 0.3;
  // Sphere integral of the gaussian in closed form; time by adaptive quadrature.
  auto inner = [&](double s) {
    const Vec c{x[0] - t * q0[0] + s * q0[0], x[1], x[2]};
    const double cn = std::sqrt(norm2(c, 3)), b = s * q;
    if (cn * b < 1e-12) return 4.0 * kPi * std::exp(-(cn * cn + b * b) / (2.0 * s2));
    return 2.0 * kPi * std::exp(-(cn * cn + b * b) / (2.0 * s2)) * (2.0 * s2 / (cn * b)) * std::sinh(cn * b / s2);
  };
  const double want = std::exp(-t * k.sigma_tot(q)) * sigma *
                      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(inner, 0.0, t, 10, 1e-14);
  CollisionSeriesConfig cfg;
  double err = 1.0;
  const double got = collision_term(a, 1, t, x, q0, k, cfg, &err);
  CHECK(got == doctest::Approx(want).epsilon(1e-8));
  CHECK(err < 1e-6);
}

TEST_CASE("adjoint evolution preserves mass") {
  struct Case {
    double lambda, rho, t;
  };
  const auto one = PhaseSpaceSymbol::constant(3, 1.0);
  for (const Case c : {Case{0.25, 0.5, 0.4}, Case{0.25, 0.25, 0.2}, Case{0.15, 1.0, 0.3}}) {
    const OnShellAmplitude table = c.lambda == 0.25 ? born_table() : first_born_table(3, c.lambda, {0.9, 1.1}, 24);
    const CollisionKernelData k = collision_kernel(table, c.rho);
    const SeriesValue v = adjoint_evolve(one, c.t, k).evaluate({0.0, 0.0, 0.0}, {0.6, 0.8, 0.0});
    CAPTURE(c.rho);
    CHECK(std::abs(v.value - 1.0) <= v.error() + 1e-9);
  }
}

TEST_CASE("zero time returns the observable") {
  const CollisionKernelData k = collision_kernel(born_table(), 0.5);
  const auto a = PhaseSpaceSymbol::gaussian(3, {0.2, 0.0, 0.0}, 0.5, {1.0, 0.0, 0.0}, 0.6);
  const Vec x{0.3, -0.1, 0.2}, p{0.0, 1.0, 0.0};
  CHECK(adjoint_evolve(a, 0.0, k)(x, p) == doctest::Approx(a(x, p)).epsilon(1e-14));
}

TEST_CASE("leading order in the intensity is the single-collision term") {
  const auto a = PhaseSpaceSymbol::gaussian(3, {0.1, 0.2, 0.0}, 0.4, {0.7, 0.5, 0.0}, 0.5);
  const Vec x{0.0, 0.0, 0.0}, q{1.0, 0.0, 0.0};
  const double t = 0.4;
  CollisionSeriesConfig cfg;
  const CollisionKernelData unit = collision_kernel(born_table(), 1.0);
  const double free = a(shift(x, -t, q), q);
  const double single = collision_term(a, 1, t, x, q, unit, cfg) * std::exp(t * unit.sigma_tot(1.0)) -
                        t * unit.sigma_tot(1.0) * free;
  for (double rho : {0.2, 0.1}) {
    const CollisionKernelData k = collision_kernel(born_table(), rho);
    const double v = adjoint_evolve(a, t, k, cfg)(x, q);
    CAPTURE(rho);
    CHECK(std::abs((v - free) / rho - single) <= 0.05 * std::abs(single));
  }
}

TEST_CASE("tail bound controls truncation") {
  const CollisionKernelData k = collision_kernel(born_table(), 0.5);
  const auto a = PhaseSpaceSymbol::gaussian(3, {0.0, 0.0, 0.0}, 0.5, {1.0, 0.0, 0.0}, 0.6);
  CollisionSeriesConfig cfg;
  cfg.n_max = 1;
  try {
    adjoint_evolve(a, 1.0, k, cfg);
    FAIL("expected truncation error");
  } catch (const TruncationError& e) {
    CHECK(e.suggested_n_max > 1);
    cfg.n_max = e.suggested_n_max;
    CHECK_NOTHROW(adjoint_evolve(a, 1.0, k, cfg));
  }
  double c2 = 0.0;
  for (double s : k.sigma_tot_nodes) c2 = std::max(c2, s);
  const double t = 0.4;
  for (int n : {1, 2, 3}) {
    const double term = collision_term(a, n, t, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, k, CollisionSeriesConfig{});
    CHECK(std::abs(term) <= tail_bound(n, t, c2, 1.0));
  }
  CHECK(suggested_n_max(0.4, c2, 1.0, 1e-4) <= 4);
}

TEST_CASE("point mass pairing and zero-time pairing") {
  const CollisionKernelData k = collision_kernel(born_table(), 0.5);
  const auto a = PhaseSpaceSymbol::gaussian(3, {0.2, 0.0, 0.0}, 0.5, {1.0, 0.0, 0.0}, 0.6);
  const Vec x0{0.1, 0.0, 0.0}, p0{1.0, 0.0, 0.0};
  const KineticResult r = pair_with_initial(WignerMeasure::point_mass(3, x0, p0, 2.0), a, 0.2, k);
  CHECK(r.value == doctest::Approx(2.0 * adjoint_evolve(a, 0.2, k)(x0, p0)).epsilon(1e-14));
  CHECK(r.n_max == 4);
  CHECK(r.config_hash.size() == 16);
  const auto j = to_json(r);
  CHECK(j.at("value").get<double>() == r.value);
  CHECK(j.at("config_hash").get<std::string>() == r.config_hash);
}

TEST_CASE("series and jump process agree at d = 3") {
  const auto a = PhaseSpaceSymbol::gaussian(3, {0.2, 0.1, 0.0}, 0.5, {0.8, 0.3, 0.0}, 0.6);
  const WignerMeasure mu = WignerMeasure::point_mass(3, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0});
  for (int sign : {-1, 1}) {
    const CollisionKernelData k = collision_kernel(born_table(), 0.5);
    CollisionSeriesConfig cfg;
    cfg.transport_sign = sign;
    const KineticResult s = pair_with_initial(mu, a, 0.3, k, cfg);
    const KineticResult m = kmc_estimate(mu, a, 0.3, k, 100000, 17, sign);
    CAPTURE(sign);
    CHECK(std::abs(s.value - m.value) <= 3.0 * (m.mc_stderr + s.series_error));
  }
}

TEST_CASE("jump paths conserve energy and order their times") {
  const CollisionKernelData k = collision_kernel(born_table(), 2.0);
  std::mt19937_64 rng(5);
  const Vec q0{0.6, 0.8, 0.0};
  int jumps = 0;
  for (int i = 0; i < 200; ++i) {
    const JumpPath p = sample_path({0.0, 0.0, 0.0}, q0, 1.0, k, -1, rng);
    REQUIRE(p.momenta.size() == p.jump_times.size() + 1);
    for (const Vec& q : p.momenta) CHECK(std::abs(std::sqrt(norm2(q, 3)) - 1.0) < 1e-12);
    for (std::size_t j = 0; j < p.jump_times.size(); ++j) {
      CHECK(p.jump_times[j] >= 0.0);
      CHECK(p.jump_times[j] <= 1.0);
      if (j > 0) CHECK(p.jump_times[j] < p.jump_times[j - 1]);
    }
    jumps += static_cast<int>(p.jump_times.size());
  }
  // Mean number of jumps is t * sigma_tot.
  CHECK(jumps / 200.0 == doctest::Approx(k.sigma_tot(1.0)).epsilon(0.2));
}

TEST_CASE("jump process is seed-deterministic and scales as one over root n") {
  const CollisionKernelData k = collision_kernel(born_table(), 0.5);
  const auto a = PhaseSpaceSymbol::gaussian(3, {0.2, 0.1, 0.0}, 0.5, {0.8, 0.3, 0.0}, 0.6);
  const WignerMeasure mu = WignerMeasure::point_mass(3, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0});
  const KineticResult a1 = kmc_estimate(mu, a, 0.4, k, 5000, 99);
  const KineticResult a2 = kmc_estimate(mu, a, 0.4, k, 5000, 99);
  CHECK(a1.value == a2.value);
  CHECK(a1.config_hash == a2.config_hash);
  const KineticResult b = kmc_estimate(mu, a, 0.4, k, 20000, 99);
  CHECK(b.mc_stderr / a1.mc_stderr == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("gaussian initial density at d = 1: series against jump process") {
  // Wigner function of a coherent state sampled on a small phase-space grid.
  const double hbar = 0.2, s2 = 0.5 * hbar;
  WignerMeasure mu;
  mu.kind = WignerMeasure::Kind::grid_density;
  mu.dim = 1;
  mu.grid = Grid::cube(1, 3.2, 16);
  mu.pgrid = Grid::cube(1, 3.2, 16);
  for_each_point(mu.grid, [&](std::size_t, const Vec& x) {
    for_each_point(mu.pgrid, [&](std::size_t, const Vec& p) {
      const double dp = p[0] - 1.0;
      mu.density.push_back(std::exp(-(x[0] * x[0] + dp * dp) / (2.0 * s2)) / (2.0 * kPi * s2));
    });
  });
  // All momenta must lie in the table's speed range; drop the cells near p = 0.
  const OnShellAmplitude table = build_onshell_table(1, 0.15, 2, {0.6, 1.0, 1.4, 1.8}, 1,
                                                     default_gamma_sequence());
  const CollisionKernelData k = collision_kernel(table, 0.5);
  for_each_point(mu.pgrid, [&](std::size_t j, const Vec& p) {
    if (std::abs(p[0]) < 0.6 || std::abs(p[0]) > 1.8)
      for (std::size_t i = 0; i < mu.grid.size(); ++i) mu.density[i * mu.pgrid.size() + j] = 0.0;
  });
  const auto a = PhaseSpaceSymbol::gaussian(1, {0.3, 0.0, 0.0}, 0.5, {1.0, 0.0, 0.0}, 0.5);
  CollisionSeriesConfig cfg;
  cfg.transport_sign = 1;
  const KineticResult s = pair_with_initial(mu, a, 0.3, k, cfg);
  const KineticResult m = kmc_estimate(mu, a, 0.3, k, 100000, 4, 1);
  CHECK(std::abs(s.value - m.value) <= 3.0 * (m.mc_stderr + s.series_error));
  // Zero time pairs the observable with the measure directly.
  const KineticResult z = pair_with_initial(mu, a, 0.0, k, cfg);
  CHECK(z.value == doctest::Approx(integrate_symbol(mu, a).value).epsilon(1e-12));
}

TEST_CASE("wkb measure without a phase gradient cannot be sampled") {
  WignerMeasure mu;
  mu.kind = WignerMeasure::Kind::wkb_graph;
  mu.dim = 1;
  mu.grid = Grid::cube(1, 2.0, 8);
  mu.density.assign(8, 1.0);
  const CollisionKernelData k = collision_kernel(first_born_table(1, 0.1, {0.5, 1.5}, 1), 1.0);
  CHECK_THROWS_AS(kmc_estimate(mu, PhaseSpaceSymbol::constant(1, 1.0), 0.1, k, 10, 1), UnsupportedError);
}
