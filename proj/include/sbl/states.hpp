#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

#include "sbl/aligned.hpp"
#include "sbl/grid.hpp"
#include "sbl/symbol.hpp"

namespace sbl {

enum class Family : std::uint32_t {
  lagrangian_momentum = 0,
  lagrangian_position = 1,
  wkb = 2,
  coherent = 3,
  custom = 4,
};

const char* family_name(Family f);
Family family_from_name(const std::string& name);

// Amplitude profile w: either an analytic callable or values on a grid.
struct ProfileFunction {
  std::string tag = "zero";
  int dim = 1;
  std::function<cplx(const Vec&)> analytic;
  Grid grid;
  Field values;
  int smoothness_class = 0;
  // |w| is negligible outside the ball of this radius about the origin.
  double extent = 1.0;
  // Characteristic angular wavenumber of w (inverse length scale).
  double bandwidth = 1.0;

  bool is_sampled() const { return !analytic; }
  cplx operator()(const Vec& x) const;
  // Values on g; a sampled profile must live on g already.
  Field sample(const Grid& g) const;
  // Grid on which analytic profiles are resolved for norms and transforms.
  Grid reference_grid() const;
  double l2_norm_sq() const;

  static ProfileFunction zero(int dim);
  // amplitude * exp(-|x-c|^2 / (2 width^2))
  static ProfileFunction gaussian(int dim, double width, double amplitude = 1.0, Vec center = {0, 0, 0});
  // exp(-1/(1-|x/R|^2)) on |x| < R.
  static ProfileFunction bump(int dim, double radius);
  static ProfileFunction from_function(int dim, std::function<cplx(const Vec&)> f, double extent,
                                       double bandwidth, int smoothness_class);
  static ProfileFunction sampled(const Grid& g, Field values, int smoothness_class = 0);
};

struct StateParams {
  Vec x0{0.0, 0.0, 0.0};
  Vec p0{0.0, 0.0, 0.0};
  std::function<double(const Vec&)> phase;
  std::function<Vec(const Vec&)> grad_phase;
};

struct SemiclassicalState {
  double hbar = 1.0;
  Grid grid;
  Field amplitude;
  Family family = Family::custom;

  int dim() const { return grid.dim; }
  double norm() const { return l2_norm(grid, amplitude); }
  double norm_sq() const { return l2_norm_sq(grid, amplitude); }
};

// Largest classical momentum the state carries per axis; sets the spacing
// requirement dx <= hbar / (4 * scale).
double momentum_scale(Family family, const ProfileFunction& w, const StateParams& params, double hbar,
                      const Grid& grid);

SemiclassicalState make_state(Family family, const ProfileFunction& w, const StateParams& params, double hbar,
                              const Grid& grid);

// Normalised Gaussian wave packet at (x0, p0) with position variance hbar/2 per axis.
cplx coherent_amplitude(const Vec& x, const Vec& x0, const Vec& p0, double hbar, int dim);

struct WignerMeasure {
  enum class Kind {
    density_times_momentum_delta,  // density(x) dx delta(p - p0)
    position_delta_times_density,  // delta(x - x0) density(p) dp, density on pgrid
    wkb_graph,                     // density(x) dx delta(p - grad S(x))
    point_mass,                    // weight delta(x - x0) delta(p - p0)
    grid_density,                  // density(x, p) on grid x pgrid, x-major
  };

  Kind kind = Kind::point_mass;
  int dim = 1;
  Grid grid;
  Grid pgrid;
  RealField density;
  Vec x0{0.0, 0.0, 0.0};
  Vec p0{0.0, 0.0, 0.0};
  double weight = 0.0;
  std::function<Vec(const Vec&)> grad_phase;

  double mass() const;
  static WignerMeasure point_mass(int dim, const Vec& x0, const Vec& p0, double weight = 1.0);
};

const char* measure_kind_name(WignerMeasure::Kind k);

WignerMeasure limiting_measure(Family family, const ProfileFunction& w, const StateParams& params);

struct QuadratureValue {
  double value = 0.0;
  double error = 0.0;
};

// Pairing of a symbol with the measure; error compares against the
// stride-2 subgrid sum (zero for point masses).
QuadratureValue integrate_symbol(const WignerMeasure& mu, const PhaseSpaceSymbol& a);

// Normalised bump exp(-1/(1-|x|^2)) scaled to radius eps and convolved
// spectrally with w on grid g (w's own grid when sampled).
ProfileFunction mollify_profile(const ProfileFunction& w, double eps, const Grid* g = nullptr);

struct SobolevResult {
  double value = 0.0;
  // Fraction of spectral mass in the outer quarter of each axis' band.
  double high_frequency_fraction = 0.0;
  bool aliasing_warning = false;
};

// max over |alpha| <= n of || (-i hbar d)^alpha psi ||_{L2}.
SobolevResult sobolev_seminorm(const SemiclassicalState& psi, int n);

// Mass within `cells` grid cells of the box faces.
double boundary_mass(const SemiclassicalState& psi, std::size_t cells = 4);

void write_state(std::ostream& os, const SemiclassicalState& s);
SemiclassicalState read_state(std::istream& is);
void save_state(const std::string& path, const SemiclassicalState& s);
SemiclassicalState load_state(const std::string& path);

}  // namespace sbl
