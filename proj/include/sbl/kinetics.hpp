#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sbl/scattering.hpp"
#include "sbl/states.hpp"
#include "sbl/symbol.hpp"

namespace sbl {

// Shell rule for one collision order: Gauss-Legendre in cos(theta) times
// uniform azimuth (d=3), uniform angle (d=2) or {+e, -e} (d=1), plus
// Gauss-Legendre nodes per collapsed simplex coordinate.
struct OrderRule {
  std::size_t polar = 0;
  std::size_t azimuth = 0;
  std::size_t time = 0;
};

struct CollisionSeriesConfig {
  int n_max = 4;
  std::vector<OrderRule> fine;    // per order n >= 1; missing entries use defaults
  std::vector<OrderRule> coarse;  // comparison rule for the error estimate
  double tail_constant = 0.0;     // C^2 in (t C^2)^n / n!; 0 means max sigma_tot over the table
  double observable_sup = 1.0;    // sup |a| used in tail bounds
  double tail_tolerance = 1e-4;
  double quad_tolerance = 1e-2;   // absolute, per order
  // -1 evaluates a at x - t q0 - sum s_i (q_i - q_{i-1}) as in the collision
  // series display; +1 follows particle flights x + t q0 + ...
  int transport_sign = -1;
  double branch_cutoff = 1e-14;   // relative weight below which chain branches are dropped
  std::size_t max_atoms = 4096;   // discretised initial measure size limit

  OrderRule rule(int dim, int n, bool refined) const;
  nlohmann::json to_json() const;
};

struct SeriesValue {
  double value = 0.0;
  double quad_error = 0.0;
  double truncation_error = 0.0;  // Poisson tail beyond n_max times observable_sup
  std::vector<double> terms;      // f^(n), n = 0..n_max
  double error() const { return quad_error + truncation_error; }
};

// f^(n)(t, x, q0) with the observable a in place of f_0.
double collision_term(const PhaseSpaceSymbol& a, int n, double t, const Vec& x, const Vec& q0,
                      const CollisionKernelData& kernel, const CollisionSeriesConfig& cfg, double* quad_error = nullptr);

double tail_bound(int n, double t, double c2, double sup_a);
// Smallest n_max whose tail bound is below tol.
int suggested_n_max(double t, double c2, double sup_a, double tol);

class AdjointEvolved {
 public:
  AdjointEvolved(PhaseSpaceSymbol a, double t, const CollisionKernelData& kernel, CollisionSeriesConfig cfg);

  SeriesValue evaluate(const Vec& x, const Vec& p) const;
  double operator()(const Vec& x, const Vec& p) const { return evaluate(x, p).value; }
  double time() const { return t_; }
  double tail() const { return tail_; }
  const CollisionSeriesConfig& config() const { return cfg_; }

 private:
  PhaseSpaceSymbol a_;
  double t_;
  const CollisionKernelData* kernel_;
  CollisionSeriesConfig cfg_;
  double tail_;
};

// Throws TruncationError (with suggested n_max) when the tail bound exceeds cfg.tail_tolerance.
AdjointEvolved adjoint_evolve(const PhaseSpaceSymbol& a, double t, const CollisionKernelData& kernel,
                              const CollisionSeriesConfig& cfg = {});

struct KineticResult {
  double value = 0.0;
  double series_error = 0.0;
  double mc_stderr = 0.0;
  int n_max = 0;
  std::uint64_t n_paths = 0;
  std::string config_hash;
};

nlohmann::json to_json(const KineticResult& r);
std::string hash_config(const nlohmann::json& j);

struct MeasureAtom {
  Vec x{}, p{};
  double weight = 0.0;
};
// Discretised initial measure (stride subsamples grid kinds).
std::vector<MeasureAtom> measure_atoms(const WignerMeasure& mu, std::size_t stride = 1);

KineticResult pair_with_initial(const WignerMeasure& mu0, const PhaseSpaceSymbol& a, double t,
                                const CollisionKernelData& kernel, const CollisionSeriesConfig& cfg = {});

struct JumpPath {
  std::vector<double> jump_times;  // decreasing in [0, t]
  std::vector<Vec> momenta;        // q_0 .. q_n
  double weight = 1.0;
  Vec end_position{};
};

// One realisation of the jump process started at (x, q0).
JumpPath sample_path(const Vec& x, const Vec& q0, double t, const CollisionKernelData& kernel, int transport_sign,
                     std::mt19937_64& rng);

using InitialSampler = std::function<MeasureAtom(std::mt19937_64&)>;

KineticResult kmc_estimate(const WignerMeasure& mu0, const PhaseSpaceSymbol& a, double t,
                           const CollisionKernelData& kernel, std::uint64_t n_paths, std::uint64_t seed,
                           int transport_sign = -1);
// Samples come from `sampler`; the estimate is scaled by `mass`.
KineticResult kmc_estimate(const InitialSampler& sampler, double mass, const PhaseSpaceSymbol& a, double t,
                           const CollisionKernelData& kernel, std::uint64_t n_paths, std::uint64_t seed,
                           int transport_sign = -1);

// Gaussian phase-space density with variance hbar/2 per coordinate (the
// Wigner function of the coherent state) centred at (x0, p0).
InitialSampler coherent_wigner_sampler(int dim, const Vec& x0, const Vec& p0, double hbar);

}  // namespace sbl
