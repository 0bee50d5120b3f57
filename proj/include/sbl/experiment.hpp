#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbl/scattering.hpp"
#include "sbl/states.hpp"
#include "sbl/symbol.hpp"

namespace sbl {

// Gaussian observable exp(-|x-xc|^2/(2 sx^2) - |p-pc|^2/(2 sp^2)).
struct SymbolSpec {
  Vec xc{0.0, 0.0, 0.0};
  double sx = 1.0;
  Vec pc{0.0, 0.0, 0.0};
  double sp = 1.0;
};

struct StateSpec {
  std::string family = "coherent";
  Vec x0{0.0, 0.0, 0.0};
  Vec p0{1.0, 0.0, 0.0};
  double profile_width = 0.5;  // gaussian amplitude width for the non-coherent families
};

struct GridSpec {
  double length = 4.0;
  std::size_t points = 64;
};

struct KernelSpec {
  int born_order = 2;
  double speed_min = 0.2;
  double speed_max = 2.0;
  std::size_t speed_count = 10;
  std::size_t angle_intervals = 16;
  std::vector<double> gammas = default_gamma_sequence();
  std::vector<double> speeds() const;
};

struct BoltzmannSpec {
  std::uint64_t paths = 100000;
};

struct ExperimentConfig {
  int dim = 3;
  std::vector<double> hbar_list{0.25};
  double rho = 0.5;
  double lambda = 0.25;
  double t = 0.5;
  SymbolSpec symbol;
  StateSpec state;
  std::size_t realizations = 16;
  GridSpec grid;
  double dt = 0.0;  // 0: the largest stable step
  KernelSpec kernel;
  BoltzmannSpec boltzmann;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double cost_budget = 5e12;  // rough floating point operation count

  // "theorem" for d = 3, "heuristic" otherwise.
  std::string regime() const;
  void validate() const;
  double estimated_cost() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
// Missing keys take defaults; the seed falls back to SBL_SEED, then 1.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::string& path);
std::uint64_t default_seed();

PhaseSpaceSymbol make_symbol(int dim, const SymbolSpec& s);
// Gaussian whose Weyl pairing equals the anti-Wick pairing of s: each factor is
// convolved with the normalised gaussian of variance hbar/2.
PhaseSpaceSymbol antiwick_weyl_equivalent(int dim, const SymbolSpec& s, double hbar);

struct AnnealedPoint {
  double hbar = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t ok = 0;
  std::size_t failed = 0;
  std::vector<double> samples;  // per realisation, NaN for failures
  double runtime_seconds = 0.0;
};

std::vector<AnnealedPoint> run_annealed(const ExperimentConfig& cfg);

struct ComparisonRow {
  double hbar = 0.0;
  double quantum_mean = 0.0;
  double quantum_stderr = 0.0;
  double boltzmann_value = 0.0;
  double boltzmann_error = 0.0;
  double abs_gap = 0.0;
  double runtime_seconds = 0.0;
};

struct BoltzmannPoint {
  double value = 0.0;
  double error = 0.0;         // MC standard error plus excluded initial mass
  double excluded_mass = 0.0;  // initial weight outside the kernel speed range
};

OnShellAmplitude experiment_table(const ExperimentConfig& cfg);
BoltzmannPoint boltzmann_side(const ExperimentConfig& cfg, double hbar, const CollisionKernelData& kernel);

// Rows sorted by hbar, largest first.
std::vector<ComparisonRow> run_comparison(const ExperimentConfig& cfg);
std::vector<ComparisonRow> combine(const std::vector<AnnealedPoint>& q, const std::vector<BoltzmannPoint>& b);

// Runtime is left out unless asked for, so equal seeds give byte-identical files.
std::string comparison_csv(const std::vector<ComparisonRow>& rows, bool with_runtime = false);
nlohmann::json comparison_report(const ExperimentConfig& cfg, const std::vector<ComparisonRow>& rows);

}  // namespace sbl
