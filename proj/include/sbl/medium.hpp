#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbl/grid.hpp"

namespace sbl {

// One Poisson sample of scatterer centres in the centred box [-L/2, L/2)^d.
struct ScattererRealization {
  int dim = 3;
  Vec box{1.0, 1.0, 1.0};
  double rho = 0.0;
  double hbar = 1.0;
  double intensity_effective = 0.0;  // rho * hbar^{1-d}
  std::uint64_t seed = 0;
  std::vector<Vec> centers;

  double volume() const;
};

struct PotentialField {
  Grid grid;
  double hbar = 1.0;
  std::string single_site = "gaussian";
  RealField values;

  double max() const;
};

double box_volume(int dim, const Vec& box);

// Default ceiling on the expected number of centres.
inline constexpr double kDefaultCenterCap = 2.0e6;

ScattererRealization sample_realization(double rho, double hbar, int dim, const Vec& box, std::uint64_t seed,
                                        double cap = kDefaultCenterCap);

// Single-site profile V(u) = exp(-|u|^2/2).
inline double single_site_potential(double u2) { return std::exp(-0.5 * u2); }

// W(x) = sum_j V((x - y_j)/hbar) with periodic images, each bump cut at 8 hbar.
PotentialField build_potential(const ScattererRealization& real, const Grid& grid, double hbar);

struct CampbellReport {
  std::size_t n_seeds = 0;
  double empirical_mean = 0.0;
  double standard_error = 0.0;
  double target = 0.0;  // intensity_effective * int_box f
  double integral = 0.0;
  bool within_3sigma = false;
};

CampbellReport campbell_check(const std::function<double(const Vec&)>& f, double rho, double hbar, int dim,
                              const Vec& box, std::size_t n_seeds, std::uint64_t base_seed = 1);

struct PoissonCountReport {
  std::size_t n_seeds = 0;
  double expected_mean = 0.0;
  double sample_mean = 0.0;
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
  bool pass = false;
};

// Chi-square goodness of fit of centre counts against Poisson(intensity * volume),
// bins merged until each expected count is at least 5.
PoissonCountReport poisson_count_test(double rho, double hbar, int dim, const Vec& box, std::size_t n_seeds,
                                      std::uint64_t base_seed = 1, double alpha = 0.01);

nlohmann::json to_json(const ScattererRealization& r);
ScattererRealization realization_from_json(const nlohmann::json& j);

}  // namespace sbl
