#include "sbl/states.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "sbl/binio.hpp"
#include "sbl/error.hpp"
#include "sbl/fft.hpp"
#include "sbl/simd.hpp"

namespace sbl {

namespace {

constexpr int kSmooth = 1 << 20;
constexpr double kPi = std::numbers::pi;

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

// Signed FFT bin index.
long long signed_bin(std::size_t m, std::size_t n) {
  auto s = static_cast<long long>(m);
  if (s >= static_cast<long long>((n + 1) / 2)) s -= static_cast<long long>(n);
  return s;
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::lagrangian_momentum: return "lagrangian_momentum";
    case Family::lagrangian_position: return "lagrangian_position";
    case Family::wkb: return "wkb";
    case Family::coherent: return "coherent";
    case Family::custom: return "custom";
  }
  return "unknown";
}

Family family_from_name(const std::string& name) {
  for (Family f : {Family::lagrangian_momentum, Family::lagrangian_position, Family::wkb, Family::coherent,
                   Family::custom})
    if (name == family_name(f)) return f;
  throw DomainError("unknown state family: " + name);
}

// ---------------------------------------------------------------- profiles

cplx ProfileFunction::operator()(const Vec& x) const {
  if (!analytic) throw DomainError("sampled profile has no pointwise evaluation");
  return analytic(x);
}

Field ProfileFunction::sample(const Grid& g) const {
  if (is_sampled()) {
    if (!(g == grid)) throw DomainError("sampled profile requested on a different grid");
    return values;
  }
  Field out(g.size());
  for_each_point(g, [&](std::size_t i, const Vec& x) { out[i] = analytic(x); });
  return out;
}

Grid ProfileFunction::reference_grid() const {
  if (is_sampled()) return grid;
  const std::size_t n = dim == 1 ? 1024 : dim == 2 ? 256 : 64;
  return Grid::cube(dim, 2.5 * extent, n);
}

double ProfileFunction::l2_norm_sq() const {
  if (is_sampled()) return sbl::l2_norm_sq(grid, values);
  const Grid g = reference_grid();
  return sbl::l2_norm_sq(g, sample(g));
}

ProfileFunction ProfileFunction::zero(int dim) {
  ProfileFunction w;
  w.tag = "zero";
  w.dim = dim;
  w.analytic = [](const Vec&) { return cplx(0.0, 0.0); };
  w.smoothness_class = kSmooth;
  return w;
}

ProfileFunction ProfileFunction::gaussian(int dim, double width, double amplitude, Vec center) {
  if (!(width > 0.0)) throw DomainError("gaussian profile width must be positive");
  ProfileFunction w;
  w.tag = "gaussian";
  w.dim = dim;
  w.analytic = [=](const Vec& x) {
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) r2 += (x[k] - center[k]) * (x[k] - center[k]);
    return cplx(amplitude * std::exp(-r2 / (2.0 * width * width)), 0.0);
  };
  w.smoothness_class = kSmooth;
  w.extent = std::sqrt(norm2(center, dim)) + 9.0 * width;
  w.bandwidth = 1.0 / width;
  return w;
}

ProfileFunction ProfileFunction::bump(int dim, double radius) {
  if (!(radius > 0.0)) throw DomainError("bump radius must be positive");
  ProfileFunction w;
  w.tag = "bump";
  w.dim = dim;
  w.analytic = [=](const Vec& x) {
    const double r2 = norm2(x, dim) / (radius * radius);
    return cplx(r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0, 0.0);
  };
  w.smoothness_class = kSmooth;
  w.extent = radius;
  w.bandwidth = 4.0 / radius;
  return w;
}

ProfileFunction ProfileFunction::from_function(int dim, std::function<cplx(const Vec&)> f, double extent,
                                               double bandwidth, int smoothness_class) {
  ProfileFunction w;
  w.tag = "analytic";
  w.dim = dim;
  w.analytic = std::move(f);
  w.extent = extent;
  w.bandwidth = bandwidth;
  w.smoothness_class = smoothness_class;
  return w;
}

ProfileFunction ProfileFunction::sampled(const Grid& g, Field values, int smoothness_class) {
  g.validate();
  if (values.size() != g.size()) throw DomainError("sampled profile size does not match grid");
  ProfileFunction w;
  w.tag = "sampled";
  w.dim = g.dim;
  w.grid = g;
  w.values = std::move(values);
  w.smoothness_class = smoothness_class;
  w.extent = 0.5 * std::sqrt(norm2(g.box, g.dim));
  w.bandwidth = 1.0 / g.max_spacing();
  return w;
}

// ------------------------------------------------------------------ states

cplx coherent_amplitude(const Vec& x, const Vec& x0, const Vec& p0, double hbar, int dim) {
  double phase = 0.0, r2 = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double d = x[k] - x0[k];
    phase += d * p0[k];
    r2 += d * d;
  }
  const double amp = std::pow(kPi * hbar, -0.25 * dim) * std::exp(-r2 / (2.0 * hbar));
  return std::polar(amp, phase / hbar);
}

double momentum_scale(Family family, const ProfileFunction& w, const StateParams& params, double hbar,
                      const Grid& grid) {
  double pinf = 0.0;
  for (int k = 0; k < grid.dim; ++k) pinf = std::max(pinf, std::abs(params.p0[k]));
  switch (family) {
    case Family::coherent:
      return std::max(pinf, std::sqrt(hbar / 2.0));
    case Family::lagrangian_momentum:
      return std::max(pinf, hbar * w.bandwidth);
    case Family::lagrangian_position:
      return w.bandwidth;
    case Family::wkb: {
      if (!params.grad_phase) throw DomainError("wkb state requires the phase gradient");
      const Field vals = w.sample(grid);
      double wmax = 0.0;
      for (const auto& v : vals) wmax = std::max(wmax, std::abs(v));
      double s = hbar * w.bandwidth;
      for_each_point(grid, [&](std::size_t i, const Vec& x) {
        if (std::abs(vals[i]) <= 1e-8 * wmax) return;
        const Vec g = params.grad_phase(x);
        for (int k = 0; k < grid.dim; ++k) s = std::max(s, std::abs(g[k]));
      });
      return s;
    }
    case Family::custom:
      return 0.0;
  }
  throw DomainError("unknown state family");
}

SemiclassicalState make_state(Family family, const ProfileFunction& w, const StateParams& params, double hbar,
                              const Grid& grid) {
  if (!(hbar > 0.0)) throw DomainError("hbar must be positive");
  grid.validate();
  if (family != Family::coherent && w.dim != grid.dim) throw DomainError("profile and grid dimensions differ");
  const double scale = momentum_scale(family, w, params, hbar, grid);
  if (scale > 0.0) {
    const double need = hbar / (4.0 * scale);
    for (int k = 0; k < grid.dim; ++k)
      if (grid.spacing(k) > need * (1.0 + 1e-12))
        throw ResolutionError("grid spacing " + std::to_string(grid.spacing(k)) + " exceeds hbar/(4 p) = " +
                              std::to_string(need));
  }

  SemiclassicalState s;
  s.hbar = hbar;
  s.grid = grid;
  s.family = family;
  s.amplitude.resize(grid.size());
  const int d = grid.dim;
  switch (family) {
    case Family::coherent:
      for_each_point(grid, [&](std::size_t i, const Vec& x) {
        s.amplitude[i] = coherent_amplitude(x, params.x0, params.p0, hbar, d);
      });
      break;
    case Family::lagrangian_momentum: {
      const Field vals = w.sample(grid);
      for_each_point(grid, [&](std::size_t i, const Vec& x) {
        s.amplitude[i] = vals[i] * std::polar(1.0, dot(x, params.p0, d) / hbar);
      });
      break;
    }
    case Family::lagrangian_position: {
      if (w.is_sampled()) throw DomainError("lagrangian_position needs an analytic profile (it is rescaled by hbar)");
      const double pref = std::pow(hbar, -0.5 * d);
      for_each_point(grid, [&](std::size_t i, const Vec& x) {
        Vec u{0.0, 0.0, 0.0};
        for (int k = 0; k < d; ++k) u[k] = (x[k] - params.x0[k]) / hbar;
        s.amplitude[i] = pref * w(u);
      });
      break;
    }
    case Family::wkb: {
      if (!params.phase || !params.grad_phase) throw DomainError("wkb state requires phase and gradient callables");
      const Field vals = w.sample(grid);
      for_each_point(grid, [&](std::size_t i, const Vec& x) {
        s.amplitude[i] = vals[i] * std::polar(1.0, params.phase(x) / hbar);
      });
      break;
    }
    case Family::custom:
      s.amplitude = w.sample(grid);
      break;
  }
  return s;
}

// ---------------------------------------------------------------- measures

const char* measure_kind_name(WignerMeasure::Kind k) {
  using K = WignerMeasure::Kind;
  switch (k) {
    case K::density_times_momentum_delta: return "density_times_momentum_delta";
    case K::position_delta_times_density: return "position_delta_times_density";
    case K::wkb_graph: return "wkb_graph";
    case K::point_mass: return "point_mass";
    case K::grid_density: return "grid_density";
  }
  return "unknown";
}

WignerMeasure WignerMeasure::point_mass(int dim, const Vec& x0, const Vec& p0, double weight) {
  WignerMeasure m;
  m.kind = Kind::point_mass;
  m.dim = dim;
  m.x0 = x0;
  m.p0 = p0;
  m.weight = weight;
  return m;
}

double WignerMeasure::mass() const {
  double sum = 0.0;
  for (double v : density) sum += v;
  switch (kind) {
    case Kind::point_mass: return weight;
    case Kind::density_times_momentum_delta:
    case Kind::wkb_graph: return sum * grid.cell_volume();
    case Kind::position_delta_times_density: return sum * pgrid.cell_volume();
    case Kind::grid_density: return sum * grid.cell_volume() * pgrid.cell_volume();
  }
  return 0.0;
}

namespace {

RealField abs_sq(const Field& f) {
  RealField r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = std::norm(f[i]);
  return r;
}

// Momentum grid holding centred FFT bins of spatial grid g, scaled by `hbar`.
Grid momentum_grid(const Grid& g, double hbar) {
  Grid p = g;
  for (int k = 0; k < g.dim; ++k) p.box[k] = hbar * 2.0 * kPi / g.spacing(k);
  return p;
}

// Sum f(point index) * w over grid with stride s on every active axis.
template <class F>
double strided_sum(const Grid& g, std::size_t s, F&& f) {
  double acc = 0.0;
  const std::size_t n0 = g.points[0], n1 = g.points[1], n2 = g.points[2];
  const std::size_t s0 = g.dim > 0 ? s : 1, s1 = g.dim > 1 ? s : 1, s2 = g.dim > 2 ? s : 1;
  for (std::size_t a = 0; a < n0; a += s0)
    for (std::size_t b = 0; b < n1; b += s1)
      for (std::size_t c = 0; c < n2; c += s2) acc += f((a * n1 + b) * n2 + c);
  return acc;
}

}  // namespace

WignerMeasure limiting_measure(Family family, const ProfileFunction& w, const StateParams& params) {
  WignerMeasure mu;
  mu.dim = w.dim;
  mu.x0 = params.x0;
  mu.p0 = params.p0;
  switch (family) {
    case Family::coherent:
      return WignerMeasure::point_mass(w.dim, params.x0, params.p0, 1.0);
    case Family::lagrangian_momentum: {
      mu.kind = WignerMeasure::Kind::density_times_momentum_delta;
      mu.grid = w.reference_grid();
      mu.density = abs_sq(w.sample(mu.grid));
      return mu;
    }
    case Family::wkb: {
      if (!params.grad_phase) throw DomainError("wkb measure requires the phase gradient");
      mu.kind = WignerMeasure::Kind::wkb_graph;
      mu.grid = w.reference_grid();
      mu.density = abs_sq(w.sample(mu.grid));
      mu.grad_phase = params.grad_phase;
      return mu;
    }
    case Family::lagrangian_position: {
      // density (2 pi)^{-d} |w^(p)|^2 with w^(p) = int e^{-i x p} w(x) dx.
      const Grid g = w.reference_grid();
      Field f = w.sample(g);
      fft::forward(g, f);
      const double scale = std::pow(g.cell_volume(), 2) * std::pow(2.0 * kPi, -w.dim);
      mu.kind = WignerMeasure::Kind::position_delta_times_density;
      mu.grid = g;
      mu.pgrid = momentum_grid(g, 1.0);
      mu.density.assign(g.size(), 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto idx = g.unflatten(i);
        std::array<std::size_t, 3> j{0, 0, 0};
        for (int k = 0; k < w.dim; ++k) j[k] = (idx[k] + g.points[k] / 2) % g.points[k];
        mu.density[(j[0] * g.points[1] + j[1]) * g.points[2] + j[2]] = scale * std::norm(f[i]);
      }
      return mu;
    }
    case Family::custom:
      throw UnsupportedError("custom family has no closed-form limit; supply a grid_density measure");
  }
  throw DomainError("unknown state family");
}

QuadratureValue integrate_symbol(const WignerMeasure& mu, const PhaseSpaceSymbol& a) {
  using K = WignerMeasure::Kind;
  QuadratureValue out;
  switch (mu.kind) {
    case K::point_mass:
      out.value = mu.weight == 0.0 ? 0.0 : mu.weight * a(mu.x0, mu.p0);
      return out;
    case K::density_times_momentum_delta:
    case K::wkb_graph:
    case K::position_delta_times_density: {
      const Grid& g = mu.kind == K::position_delta_times_density ? mu.pgrid : mu.grid;
      std::vector<double> vals(g.size());
      for_each_point(g, [&](std::size_t i, const Vec& z) {
        if (mu.density[i] == 0.0) {
          vals[i] = 0.0;
          return;
        }
        double v;
        if (mu.kind == K::density_times_momentum_delta) v = a(z, mu.p0);
        else if (mu.kind == K::wkb_graph) v = a(z, mu.grad_phase(z));
        else v = a(mu.x0, z);
        vals[i] = mu.density[i] * v;
      });
      const double fine = strided_sum(g, 1, [&](std::size_t i) { return vals[i]; }) * g.cell_volume();
      const double coarse =
          strided_sum(g, 2, [&](std::size_t i) { return vals[i]; }) * g.cell_volume() * std::pow(2.0, g.dim);
      out.value = fine;
      out.error = std::abs(fine - coarse);
      return out;
    }
    case K::grid_density: {
      const std::size_t np = mu.pgrid.size();
      std::vector<Vec> pts(np);
      for_each_point(mu.pgrid, [&](std::size_t j, const Vec& p) { pts[j] = p; });
      double fine = 0.0, coarse = 0.0;
      for_each_point(mu.grid, [&](std::size_t i, const Vec& x) {
        const auto ix = mu.grid.unflatten(i);
        bool even_x = true;
        for (int k = 0; k < mu.dim; ++k) even_x = even_x && ix[k] % 2 == 0;
        for (std::size_t j = 0; j < np; ++j) {
          const double d = mu.density[i * np + j];
          if (d == 0.0) continue;
          const double v = d * a(x, pts[j]);
          fine += v;
          if (even_x) {
            const auto jp = mu.pgrid.unflatten(j);
            bool even_p = true;
            for (int k = 0; k < mu.dim; ++k) even_p = even_p && jp[k] % 2 == 0;
            if (even_p) coarse += v;
          }
        }
      });
      const double vol = mu.grid.cell_volume() * mu.pgrid.cell_volume();
      out.value = fine * vol;
      out.error = std::abs(out.value - coarse * vol * std::pow(4.0, mu.dim));
      return out;
    }
  }
  return out;
}

// --------------------------------------------------------------- mollifier

ProfileFunction mollify_profile(const ProfileFunction& w, double eps, const Grid* grid) {
  if (!(eps > 0.0)) throw DomainError("mollifier radius must be positive");
  const Grid g = w.is_sampled() ? w.grid : (grid ? *grid : w.reference_grid());
  g.validate();
  if (eps < g.max_spacing()) throw ResolutionError("mollifier radius below grid spacing");
  for (int k = 0; k < g.dim; ++k)
    if (2.0 * eps >= g.box[k]) throw DomainError("mollifier radius exceeds half the box");

  // Kernel with its origin at index 0 (periodic offsets), normalised to unit discrete mass.
  Field kernel(g.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unflatten(i);
    double r2 = 0.0;
    for (int k = 0; k < g.dim; ++k) {
      const double off = static_cast<double>(signed_bin(idx[k], g.points[k])) * g.spacing(k) / eps;
      r2 += off * off;
    }
    const double v = r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
    kernel[i] = v;
    mass += v;
  }
  Field f = w.sample(g);
  fft::forward(g, f);
  fft::forward(g, kernel);
  simd::active().cmul(f.data(), kernel.data(), f.size());
  fft::backward(g, f);
  simd::active().cscale(f.data(), 1.0 / (mass * static_cast<double>(g.size())), f.size());

  ProfileFunction out = ProfileFunction::sampled(g, std::move(f), kSmooth);
  out.tag = "mollified";
  out.extent = w.extent + eps;
  out.bandwidth = std::max(w.bandwidth, 1.0 / eps);
  return out;
}

// --------------------------------------------------------------- sobolev

SobolevResult sobolev_seminorm(const SemiclassicalState& psi, int n) {
  if (n < 0) throw DomainError("sobolev order must be non-negative");
  const Grid& g = psi.grid;
  const int d = g.dim;
  Field c = psi.amplitude;
  fft::forward(g, c);

  // Per-point momenta and spectral weights.
  std::vector<double> w(g.size());
  std::vector<std::array<double, 3>> p2(g.size());
  double total = 0.0, high = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unflatten(i);
    w[i] = std::norm(c[i]);
    total += w[i];
    bool outer = false;
    for (int k = 0; k < 3; ++k) {
      const double p = k < d ? psi.hbar * g.wavenumber(k, idx[k]) : 0.0;
      p2[i][k] = p * p;
      if (k < d && std::llabs(signed_bin(idx[k], g.points[k])) > static_cast<long long>(3 * g.points[k] / 8))
        outer = true;
    }
    if (outer) high += w[i];
  }
  const double norm_factor = g.cell_volume() / static_cast<double>(g.size());

  SobolevResult r;
  r.high_frequency_fraction = total > 0.0 ? high / total : 0.0;
  r.aliasing_warning = r.high_frequency_fraction > 1e-10;
  double best = 0.0;
  for (int a0 = 0; a0 <= n; ++a0)
    for (int a1 = 0; a1 <= (d > 1 ? n - a0 : 0); ++a1)
      for (int a2 = 0; a2 <= (d > 2 ? n - a0 - a1 : 0); ++a2) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
          s += w[i] * ipow(p2[i][0], a0) * ipow(p2[i][1], a1) * ipow(p2[i][2], a2);
        best = std::max(best, s);
      }
  r.value = std::sqrt(best * norm_factor);
  return r;
}

double boundary_mass(const SemiclassicalState& psi, std::size_t cells) {
  const Grid& g = psi.grid;
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unflatten(i);
    bool edge = false;
    for (int k = 0; k < g.dim; ++k) edge = edge || idx[k] < cells || idx[k] + cells >= g.points[k];
    if (edge) s += std::norm(psi.amplitude[i]);
  }
  return s * g.cell_volume();
}

// -------------------------------------------------------------------- I/O

namespace {
constexpr char kStateMagic[9] = "SBLSTATE";
constexpr std::uint32_t kStateVersion = 1;
}  // namespace

void write_state(std::ostream& os, const SemiclassicalState& s) {
  using namespace binio;
  put_magic(os, kStateMagic);
  put<std::uint32_t>(os, kStateVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.grid.dim));
  for (int k = 0; k < s.grid.dim; ++k) put<double>(os, s.grid.box[k]);
  for (int k = 0; k < s.grid.dim; ++k) put<std::uint64_t>(os, s.grid.points[k]);
  put<double>(os, s.hbar);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.family));
  put<std::uint64_t>(os, s.amplitude.size());
  for (const auto& v : s.amplitude) {
    put<double>(os, v.real());
    put<double>(os, v.imag());
  }
  if (!os) throw IoError("failed writing state record");
}

SemiclassicalState read_state(std::istream& is) {
  using namespace binio;
  expect_magic(is, kStateMagic);
  if (get<std::uint32_t>(is) != kStateVersion) throw IoError("unsupported state container version");
  SemiclassicalState s;
  const auto dim = get<std::uint32_t>(is);
  if (dim < 1 || dim > 3) throw IoError("state container has invalid dimension");
  s.grid.dim = static_cast<int>(dim);
  for (int k = 0; k < s.grid.dim; ++k) s.grid.box[k] = get<double>(is);
  for (int k = 0; k < s.grid.dim; ++k) s.grid.points[k] = get<std::uint64_t>(is);
  s.grid.validate();
  s.hbar = get<double>(is);
  const auto fam = get<std::uint32_t>(is);
  if (fam > static_cast<std::uint32_t>(Family::custom)) throw IoError("state container has invalid family");
  s.family = static_cast<Family>(fam);
  const auto count = get<std::uint64_t>(is);
  if (count != s.grid.size()) throw IoError("state payload size does not match grid");
  s.amplitude.resize(count);
  for (auto& v : s.amplitude) {
    const double re = get<double>(is);
    const double im = get<double>(is);
    v = cplx(re, im);
  }
  return s;
}

void save_state(const std::string& path, const SemiclassicalState& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path);
  write_state(os, s);
}

SemiclassicalState load_state(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return read_state(is);
}

}  // namespace sbl
