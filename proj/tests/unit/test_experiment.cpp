#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "sbl/error.hpp"
#include "sbl/experiment.hpp"
#include "sbl/kinetics.hpp"
#include "sbl/quantization.hpp"

using namespace sbl;

namespace {

ExperimentConfig small_1d() {
  ExperimentConfig c;
  c.dim = 1;
  c.hbar_list = {0.2, 0.1};
  c.rho = 2.0;
  c.lambda = 0.2;
  c.t = 0.6;
  c.state.x0 = {-1.0, 0.0, 0.0};
  c.state.p0 = {1.5, 0.0, 0.0};
  c.symbol = {{-1.0 + 0.6 * 1.5, 0.0, 0.0}, 0.5, {1.5, 0.0, 0.0}, 0.4};
  c.realizations = 4;
  c.grid = {8.0, 1024};
  c.kernel.speed_min = 0.6;
  c.kernel.speed_max = 3.0;
  c.kernel.speed_count = 12;
  c.kernel.born_order = 2;
  c.boltzmann.paths = 20000;
  c.seed = 11;
  return c;
}

// Husimi of a coherent state is a gaussian of variance hbar per coordinate.
double coherent_antiwick_closed_form(const ExperimentConfig& c, double hbar) {
  double v = 1.0;
  for (int k = 0; k < c.dim; ++k) {
    const double vx = c.symbol.sx * c.symbol.sx + hbar, vp = c.symbol.sp * c.symbol.sp + hbar;
    const double dx = c.state.x0[k] - c.symbol.xc[k], dp = c.state.p0[k] - c.symbol.pc[k];
    v *= c.symbol.sx / std::sqrt(vx) * std::exp(-dx * dx / (2 * vx)) * c.symbol.sp / std::sqrt(vp) * std::exp(-dp * dp / (2 * vp));
  }
  return v;
}

}  // namespace

TEST_CASE("config json round trip is exact") {
  ExperimentConfig c = small_1d();
  c.rho = 0.1 + 0.2;  // not representable as a short decimal
  c.t = 1.0 / 3.0;
  c.kernel.gammas = {0.07, 0.035, 0.0175};
  const nlohmann::json j = to_json(c);
  const ExperimentConfig r = experiment_from_json(nlohmann::json::parse(j.dump()));
  CHECK(to_json(r).dump() == j.dump());
  CHECK(r.rho == c.rho);
  CHECK(r.t == c.t);
  CHECK(r.hbar_list == c.hbar_list);
  CHECK(r.state.p0 == c.state.p0);
  CHECK(r.kernel.gammas == c.kernel.gammas);
  CHECK_THROWS_AS(experiment_from_json(nlohmann::json{{"rho", "dense"}}), IoError);
}

TEST_CASE("seed default comes from the environment") {
  setenv("SBL_SEED", "4242", 1);
  CHECK(experiment_from_json(nlohmann::json::object()).seed == 4242);
  CHECK(experiment_from_json(nlohmann::json{{"seed", 5}}).seed == 5);
  setenv("SBL_SEED", "x1", 1);
  CHECK_THROWS_AS(default_seed(), DomainError);
  unsetenv("SBL_SEED");
  CHECK(default_seed() == 1);
}

TEST_CASE("regime label and validation") {
  ExperimentConfig c = small_1d();
  CHECK(c.regime() == "heuristic");
  c.dim = 3;
  CHECK(c.regime() == "theorem");
  c = small_1d();
  c.grid.points = 1000;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = small_1d();
  c.state.family = "plane";
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = small_1d();
  c.dim = 3;
  c.grid = {4.0, 256};
  c.realizations = 1000;
  CHECK_THROWS_AS(c.validate(), ResourceError);
}

TEST_CASE("smoothed symbol turns the anti-Wick pairing into a Wigner integral") {
  const SymbolSpec s{{0.3, 0.0, 0.0}, 0.5, {1.2, 0.0, 0.0}, 0.4};
  const double hbar = 0.1;
  const PhaseSpaceSymbol a = antiwick_weyl_equivalent(1, s, hbar);
  // Gaussian Wigner of variance hbar/2 centred at (0,1): integral in closed form.
  const double vx = 0.25 + hbar, vp = 0.16 + hbar;
  const double want = 0.5 / std::sqrt(vx) * std::exp(-0.09 / (2 * vx)) * 0.4 / std::sqrt(vp) * std::exp(-0.04 / (2 * vp));
  const auto sampler = coherent_wigner_sampler(1, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, hbar);
  std::mt19937_64 rng(3);
  double sum = 0.0, sum2 = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const MeasureAtom at = sampler(rng);
    const double v = a(at.x, at.p);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - want) < 4 * se);
}

TEST_CASE("t = 0 reproduces the initial anti-Wick pairing") {
  ExperimentConfig c = small_1d();
  c.t = 0.0;
  c.realizations = 2;
  const auto q = run_annealed(c);
  REQUIRE(q.size() == 2);
  for (const auto& p : q) {
    CHECK(p.mean == doctest::Approx(coherent_antiwick_closed_form(c, p.hbar)).epsilon(1e-8));
    CHECK(p.stderr_ == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("lambda = 0: realisation independent and equal to the free Boltzmann flow") {
  ExperimentConfig c = small_1d();
  c.lambda = 0.0;
  c.realizations = 3;
  c.boltzmann.paths = 200000;
  const auto rows = run_comparison(c);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].hbar > rows[1].hbar);
  for (const auto& r : rows) {
    CHECK(r.quantum_stderr < 1e-12);
    CHECK(r.abs_gap < 4.0 * r.boltzmann_error + 1e-6);
  }
}

TEST_CASE("same seed gives the same CSV; another seed does not") {
  ExperimentConfig c = small_1d();
  const std::string a = comparison_csv(run_comparison(c));
  const std::string b = comparison_csv(run_comparison(c));
  CHECK(a == b);
  c.seed = 12;
  CHECK(comparison_csv(run_comparison(c)) != a);
  ExperimentConfig th = small_1d();
  th.threads = 2;
  CHECK(comparison_csv(run_comparison(th)) == a);
}

TEST_CASE("d=1 at speed 1.5: backscattering is negligible and the gap is small") {
  // reflection carries |V^(2q)|^2 ~ e^{-4 q^2}, so the kinetic side stays at free flow
  ExperimentConfig c = small_1d();
  const auto rows = run_comparison(c);
  ExperimentConfig free = c;
  free.lambda = 0.0;
  const auto f = run_comparison(free);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(std::abs(rows[i].boltzmann_value - f[i].boltzmann_value) < 0.01 * f[i].boltzmann_value);
    CHECK(rows[i].abs_gap < 0.1 * rows[i].boltzmann_value);
  }
  const nlohmann::json rep = comparison_report(c, rows);
  CHECK(rep["regime"] == "heuristic");
  CHECK(rep["config_hash"].get<std::string>().size() == 16);
  CHECK(rep["rows"].size() == rows.size());
}

TEST_CASE("all realisations failing is an error") {
  ExperimentConfig c = small_1d();
  c.grid = {12.8, 128};  // resolves the state but not the scatterer width
  c.hbar_list = {0.2};
  c.state.p0 = {0.4, 0.0, 0.0};
  CHECK_THROWS_AS(run_annealed(c), AccuracyError);
}
