#include "sbl/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "sbl/binio.hpp"
#include "sbl/error.hpp"
#include "sbl/fft.hpp"
#include "sbl/simd.hpp"

namespace sbl {

namespace {

constexpr double kPi = std::numbers::pi;

// (-1)^(m_0 + m_1 + m_2) for the unsigned FFT multi-index of flat index i.
double parity(const Grid& g, std::size_t i) {
  const auto idx = g.unflatten(i);
  return ((idx[0] + idx[1] + idx[2]) % 2 == 0) ? 1.0 : -1.0;
}

}  // namespace

Vec MomentumField::momentum(std::size_t i) const {
  const auto idx = grid.unflatten(i);
  Vec p{0.0, 0.0, 0.0};
  for (int k = 0; k < grid.dim; ++k) p[k] = hbar * grid.wavenumber(k, idx[k]);
  return p;
}

double MomentumField::bin_measure() const {
  double v = 1.0;
  for (int k = 0; k < grid.dim; ++k) v /= grid.box[k];
  return v;
}

MomentumField sc_fourier(const SemiclassicalState& psi) {
  MomentumField f;
  f.hbar = psi.hbar;
  f.grid = psi.grid;
  f.values = psi.amplitude;
  fft::forward(f.grid, f.values);
  const double dv = f.grid.cell_volume();
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] *= dv * parity(f.grid, i);
  return f;
}

SemiclassicalState sc_ifourier(const MomentumField& f) {
  SemiclassicalState s;
  s.hbar = f.hbar;
  s.grid = f.grid;
  s.family = Family::custom;
  s.amplitude = f.values;
  for (std::size_t i = 0; i < s.amplitude.size(); ++i) s.amplitude[i] *= parity(f.grid, i);
  fft::backward(s.grid, s.amplitude);
  const double scale = 1.0 / (s.grid.cell_volume() * static_cast<double>(s.grid.size()));
  simd::active().cscale(s.amplitude.data(), scale, s.amplitude.size());
  return s;
}

// ------------------------------------------------------------------ Weyl

cplx weyl_pair_complex(const PhaseSpaceSymbol& a, const SemiclassicalState& psi) {
  const Grid& g = psi.grid;
  const int d = g.dim;
  if (d > 2) throw UnsupportedError("exact Weyl pairing is limited to d <= 2; use antiwick_pair");
  if (a.separable_terms.empty()) throw DomainError("exact Weyl pairing needs separable symbol terms");
  const double hbar = psi.hbar;
  const std::size_t n0 = g.points[0], n1 = d > 1 ? g.points[1] : 1;
  const std::size_t h0 = 2 * n0 - 1, h1 = d > 1 ? 2 * n1 - 1 : 1;  // half-grid sizes
  const std::size_t m0 = 2 * n0, m1 = d > 1 ? 2 * n1 : 1;          // kernel DFT sizes
  const double dx0 = g.spacing(0), dx1 = d > 1 ? g.spacing(1) : 1.0;
  const double dp0 = kPi * hbar / g.box[0], dp1 = d > 1 ? kPi * hbar / g.box[1] : 1.0;

  Grid kg;
  kg.dim = d;
  kg.points = {m0, m1, 1};
  kg.box = {1.0, 1.0, 1.0};
  if (d == 1) kg.points = {m0, 1, 1};

  auto signed_idx = [](std::size_t m, std::size_t n) {
    auto s = static_cast<long long>(m);
    if (s >= static_cast<long long>(n / 2)) s -= static_cast<long long>(n);
    return s;
  };

  cplx total = 0.0;
  for (const auto& [f, gp] : a.separable_terms) {
    // f on the midpoint lattice (x_j + x_l)/2.
    std::vector<double> fh(h0 * h1);
    for (std::size_t s0 = 0; s0 < h0; ++s0)
      for (std::size_t s1 = 0; s1 < h1; ++s1) {
        Vec x{-0.5 * g.box[0] + 0.5 * s0 * dx0, d > 1 ? -0.5 * g.box[1] + 0.5 * s1 * dx1 : 0.0, 0.0};
        fh[s0 * h1 + s1] = f(x);
      }
    // G(z) = (2 pi hbar)^{-d} int e^{i z p/hbar} g(p) dp on z = (n0 dx0, n1 dx1).
    Field kern(m0 * m1);
    for (std::size_t a0 = 0; a0 < m0; ++a0)
      for (std::size_t a1 = 0; a1 < m1; ++a1) {
        Vec p{dp0 * static_cast<double>(signed_idx(a0, m0)), d > 1 ? dp1 * static_cast<double>(signed_idx(a1, m1)) : 0.0,
              0.0};
        kern[a0 * m1 + a1] = gp(p);
      }
    fft::backward(kg, kern);
    double pref = dp0 / (2.0 * kPi * hbar);
    if (d > 1) pref *= dp1 / (2.0 * kPi * hbar);
    double kmax = 0.0;
    for (auto& v : kern) {
      v *= pref;
      kmax = std::max(kmax, std::abs(v));
    }
    struct Offset {
      long long o0, o1;
      cplx G;
    };
    std::vector<Offset> offs;
    for (long long o0 = -static_cast<long long>(n0 - 1); o0 <= static_cast<long long>(n0 - 1); ++o0)
      for (long long o1 = d > 1 ? -static_cast<long long>(n1 - 1) : 0; o1 <= (d > 1 ? static_cast<long long>(n1 - 1) : 0);
           ++o1) {
        const std::size_t i0 = static_cast<std::size_t>((o0 + static_cast<long long>(m0)) % static_cast<long long>(m0));
        const std::size_t i1 = static_cast<std::size_t>((o1 + static_cast<long long>(m1)) % static_cast<long long>(m1));
        const cplx G = kern[i0 * m1 + i1];
        if (std::abs(G) > 1e-17 * kmax) offs.push_back({o0, o1, G});
      }

    const Field& u = psi.amplitude;
    cplx acc = 0.0;
    for (std::size_t j0 = 0; j0 < n0; ++j0)
      for (std::size_t j1 = 0; j1 < n1; ++j1) {
        const cplx uj = std::conj(u[j0 * n1 + j1]);
        if (uj == cplx(0.0, 0.0)) continue;
        cplx row = 0.0;
        for (const auto& off : offs) {
          const long long l0 = static_cast<long long>(j0) - off.o0;
          const long long l1 = static_cast<long long>(j1) - off.o1;
          if (l0 < 0 || l0 >= static_cast<long long>(n0) || l1 < 0 || l1 >= static_cast<long long>(n1)) continue;
          const std::size_t s0 = j0 + static_cast<std::size_t>(l0), s1 = j1 + static_cast<std::size_t>(l1);
          row += fh[s0 * h1 + s1] * off.G * u[static_cast<std::size_t>(l0) * n1 + static_cast<std::size_t>(l1)];
        }
        acc += uj * row;
      }
    total += acc * (g.cell_volume() * g.cell_volume());
  }
  return total;
}

double weyl_pair_exact(const PhaseSpaceSymbol& a, const SemiclassicalState& psi) {
  return weyl_pair_complex(a, psi).real();
}

// --------------------------------------------------------------- Husimi

double HusimiDensity::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * xgrid.cell_volume() * pgrid.cell_volume();
}

Grid default_husimi_momentum_grid(const SemiclassicalState& psi, double spacing_factor) {
  const Grid& g = psi.grid;
  Field c = psi.amplitude;
  fft::forward(g, c);
  double cmax = 0.0;
  for (const auto& v : c) cmax = std::max(cmax, std::norm(v));
  Vec extent{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::norm(c[i]) <= 1e-14 * cmax) continue;
    const auto idx = g.unflatten(i);
    for (int k = 0; k < g.dim; ++k) extent[k] = std::max(extent[k], std::abs(psi.hbar * g.wavenumber(k, idx[k])));
  }
  const double sigma = std::sqrt(psi.hbar / 2.0);
  const double dp = spacing_factor * sigma;
  Grid p;
  p.dim = g.dim;
  for (int k = 0; k < g.dim; ++k) {
    const auto half = static_cast<std::size_t>(std::ceil((extent[k] + 4.0 * sigma) / dp));
    p.points[k] = 2 * half + 2;
    p.box[k] = static_cast<double>(p.points[k]) * dp;
  }
  return p;
}

namespace {

// Calls visit(ip, p, A) with A(x) = <coherent_{x,p}, psi> on the state grid.
template <class Visit>
void coherent_overlaps(const SemiclassicalState& psi, const Grid& pgrid, Visit&& visit,
                       const std::vector<char>* skip = nullptr) {
  const Grid& g = psi.grid;
  const int d = g.dim;
  const double hbar = psi.hbar;
  Field c = psi.amplitude;
  fft::forward(g, c);
  const double pref = std::pow(kPi * hbar, -0.25 * d) * std::pow(2.0 * kPi * hbar, 0.5 * d) /
                      static_cast<double>(g.size());
  // Per-axis momenta in FFT order.
  std::array<std::vector<double>, 3> pk;
  for (int k = 0; k < 3; ++k) {
    pk[k].resize(g.points[k]);
    for (std::size_t m = 0; m < g.points[k]; ++m) pk[k][m] = k < d ? hbar * g.wavenumber(k, m) : 0.0;
  }
  Field work(g.size());
  std::array<std::vector<double>, 3> filt;
  for_each_point(pgrid, [&](std::size_t ip, const Vec& p) {
    if (skip && (*skip)[ip]) return;
    for (int k = 0; k < 3; ++k) {
      filt[k].resize(g.points[k]);
      for (std::size_t m = 0; m < g.points[k]; ++m) {
        const double dpk = k < d ? pk[k][m] - p[k] : 0.0;
        filt[k][m] = std::exp(-dpk * dpk / (2.0 * hbar));
      }
    }
    std::size_t i = 0;
    for (std::size_t a = 0; a < g.points[0]; ++a)
      for (std::size_t b = 0; b < g.points[1]; ++b) {
        const double fab = pref * filt[0][a] * filt[1][b];
        for (std::size_t e = 0; e < g.points[2]; ++e, ++i) work[i] = c[i] * (fab * filt[2][e]);
      }
    fft::backward(g, work);
    visit(ip, p, work);
  });
}

}  // namespace

HusimiDensity husimi(const SemiclassicalState& psi, const Grid& pgrid) {
  HusimiDensity h;
  h.hbar = psi.hbar;
  h.xgrid = psi.grid;
  h.pgrid = pgrid;
  const std::size_t nx = psi.grid.size();
  h.values.assign(nx * pgrid.size(), 0.0);
  const double norm = std::pow(2.0 * kPi * psi.hbar, -psi.grid.dim);
  coherent_overlaps(psi, pgrid, [&](std::size_t ip, const Vec&, const Field& A) {
    double* out = h.values.data() + ip * nx;
    for (std::size_t i = 0; i < nx; ++i) out[i] = norm * std::norm(A[i]);
  });
  return h;
}

HusimiDensity husimi(const SemiclassicalState& psi) { return husimi(psi, default_husimi_momentum_grid(psi)); }

double antiwick_pair(const PhaseSpaceSymbol& a, const SemiclassicalState& psi, const Grid* pgrid_in) {
  const Grid pgrid = pgrid_in ? *pgrid_in : default_husimi_momentum_grid(psi);
  const Grid& g = psi.grid;
  const std::size_t nx = g.size(), np = pgrid.size();
  const double norm = std::pow(2.0 * kPi * psi.hbar, -g.dim) * g.cell_volume() * pgrid.cell_volume();
  const auto& K = simd::active();

  if (a.separable_terms.empty()) {
    std::vector<Vec> xs(nx);
    for_each_point(g, [&](std::size_t i, const Vec& x) { xs[i] = x; });
    double total = 0.0;
    coherent_overlaps(psi, pgrid, [&](std::size_t, const Vec& p, const Field& A) {
      double s = 0.0;
      for (std::size_t i = 0; i < nx; ++i) s += a(xs[i], p) * std::norm(A[i]);
      total += s;
    });
    return total * norm;
  }

  const std::size_t nt = a.separable_terms.size();
  std::vector<RealField> fx(nt, RealField(nx));
  std::vector<double> fmax(nt, 0.0);
  for (std::size_t t = 0; t < nt; ++t)
    for_each_point(g, [&](std::size_t i, const Vec& x) {
      fx[t][i] = a.separable_terms[t].first(x);
      fmax[t] = std::max(fmax[t], std::abs(fx[t][i]));
    });
  std::vector<double> gp(np * nt);
  double size_max = 0.0;
  std::vector<double> size(np, 0.0);
  for_each_point(pgrid, [&](std::size_t ip, const Vec& p) {
    for (std::size_t t = 0; t < nt; ++t) {
      gp[ip * nt + t] = a.separable_terms[t].second(p);
      size[ip] = std::max(size[ip], std::abs(gp[ip * nt + t]) * fmax[t]);
    }
    size_max = std::max(size_max, size[ip]);
  });
  // Nodes where the symbol is below 1e-16 of its peak contribute nothing measurable.
  std::vector<char> skip(np, 0);
  for (std::size_t ip = 0; ip < np; ++ip) skip[ip] = size[ip] <= 1e-16 * size_max ? 1 : 0;

  double total = 0.0;
  coherent_overlaps(
      psi, pgrid,
      [&](std::size_t ip, const Vec&, const Field& A) {
        for (std::size_t t = 0; t < nt; ++t) {
          const double w = gp[ip * nt + t];
          if (w != 0.0) total += w * K.weighted_norm_sq(A.data(), fx[t].data(), nx);
        }
      },
      &skip);
  return total * norm;
}

void write_husimi_csv(std::ostream& os, const HusimiDensity& h) {
  const int d = h.xgrid.dim;
  const char* xn[] = {"x1", "x2", "x3"};
  const char* pn[] = {"p1", "p2", "p3"};
  for (int k = 0; k < d; ++k) os << xn[k] << ',';
  for (int k = 0; k < d; ++k) os << pn[k] << ',';
  os << "value\n";
  os.precision(17);
  const std::size_t nx = h.xgrid.size();
  for_each_point(h.pgrid, [&](std::size_t ip, const Vec& p) {
    for_each_point(h.xgrid, [&](std::size_t ix, const Vec& x) {
      for (int k = 0; k < d; ++k) os << x[k] << ',';
      for (int k = 0; k < d; ++k) os << p[k] << ',';
      os << h.values[ip * nx + ix] << '\n';
    });
  });
}

namespace {
constexpr char kHusimiMagic[9] = "SBLHUSIM";
}

void write_husimi_binary(std::ostream& os, const HusimiDensity& h) {
  using namespace binio;
  put_magic(os, kHusimiMagic);
  put<std::uint32_t>(os, 1);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(h.xgrid.dim));
  put<double>(os, h.hbar);
  for (const Grid* g : {&h.xgrid, &h.pgrid}) {
    for (int k = 0; k < g->dim; ++k) put<double>(os, g->box[k]);
    for (int k = 0; k < g->dim; ++k) put<std::uint64_t>(os, g->points[k]);
  }
  put<std::uint64_t>(os, h.values.size());
  for (double v : h.values) put<double>(os, v);
  if (!os) throw IoError("failed writing Husimi record");
}

HusimiDensity read_husimi_binary(std::istream& is) {
  using namespace binio;
  expect_magic(is, kHusimiMagic);
  if (get<std::uint32_t>(is) != 1) throw IoError("unsupported Husimi container version");
  HusimiDensity h;
  const auto dim = get<std::uint32_t>(is);
  if (dim < 1 || dim > 3) throw IoError("Husimi container has invalid dimension");
  h.hbar = get<double>(is);
  for (Grid* g : {&h.xgrid, &h.pgrid}) {
    g->dim = static_cast<int>(dim);
    for (int k = 0; k < g->dim; ++k) g->box[k] = get<double>(is);
    for (int k = 0; k < g->dim; ++k) g->points[k] = get<std::uint64_t>(is);
  }
  const auto n = get<std::uint64_t>(is);
  if (n != h.xgrid.size() * h.pgrid.size()) throw IoError("Husimi payload size mismatch");
  h.values.resize(n);
  for (auto& v : h.values) v = get<double>(is);
  return h;
}

}  // namespace sbl
