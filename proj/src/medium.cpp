#include "sbl/medium.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <cmath>
#include <random>

#include "sbl/error.hpp"
#include "sbl/quadrature.hpp"
#include "sbl/rng.hpp"
#include "sbl/simd.hpp"

namespace sbl {

double box_volume(int dim, const Vec& box) {
  double v = 1.0;
  for (int k = 0; k < dim; ++k) v *= box[k];
  return v;
}

double ScattererRealization::volume() const { return box_volume(dim, box); }

double PotentialField::max() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  return m;
}

ScattererRealization sample_realization(double rho, double hbar, int dim, const Vec& box, std::uint64_t seed,
                                        double cap) {
  if (!(rho >= 0.0)) throw DomainError("intensity must be non-negative");
  if (!(hbar > 0.0)) throw DomainError("hbar must be positive");
  if (dim < 1 || dim > 3) throw DomainError("dimension must be 1, 2 or 3");
  for (int k = 0; k < dim; ++k)
    if (!(box[k] > 0.0)) throw DomainError("box extents must be positive");
  ScattererRealization r;
  r.dim = dim;
  r.box = box;
  r.rho = rho;
  r.hbar = hbar;
  r.seed = seed;
  r.intensity_effective = rho * std::pow(hbar, 1.0 - dim);
  const double mean = r.intensity_effective * r.volume();
  if (mean > cap) throw ResourceError("expected scatterer count " + std::to_string(mean) + " exceeds cap");
  if (mean == 0.0) return r;
  std::mt19937_64 rng(seed);
  std::poisson_distribution<std::uint64_t> count(mean);
  const std::uint64_t n = count(rng);
  r.centers.resize(n, Vec{0.0, 0.0, 0.0});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& c : r.centers)
    for (int k = 0; k < dim; ++k) c[k] = (u(rng) - 0.5) * box[k];
  return r;
}

namespace {

// Dense periodic 1D profile of one bump on axis k; returns false if empty.
void axis_profile(const Grid& g, int k, double center, double hbar, std::vector<double>& row) {
  const std::size_t n = g.points[k];
  const double L = g.box[k], dx = g.spacing(k), cut = 8.0 * hbar;
  row.assign(n, 0.0);
  // Images of the centre whose cut-off window meets the box.
  const int imax = static_cast<int>(std::ceil((cut + L) / L));
  for (int img = -imax; img <= imax; ++img) {
    const double c = center + img * L;
    const double lo = c - cut, hi = c + cut;
    if (hi < -0.5 * L || lo >= 0.5 * L) continue;
    const long long j0 = std::max<long long>(0, static_cast<long long>(std::ceil((lo + 0.5 * L) / dx)));
    const long long j1 = std::min<long long>(static_cast<long long>(n) - 1,
                                             static_cast<long long>(std::floor((hi + 0.5 * L) / dx)));
    for (long long j = j0; j <= j1; ++j) {
      const double u = (g.coord(k, static_cast<std::size_t>(j)) - c) / hbar;
      row[static_cast<std::size_t>(j)] += single_site_potential(u * u);
    }
  }
}

}  // namespace

PotentialField build_potential(const ScattererRealization& real, const Grid& grid, double hbar) {
  grid.validate();
  if (real.dim != grid.dim) throw DomainError("realization and grid dimensions differ");
  if (!(hbar > 0.0)) throw DomainError("hbar must be positive");
  // The bump's full width 2 hbar must span at least 6 grid spacings.
  if (2.0 * hbar < 6.0 * grid.max_spacing() * (1.0 - 1e-12))
    throw ResolutionError("single-site width hbar is not resolved by the grid");
  PotentialField W;
  W.grid = grid;
  W.hbar = hbar;
  W.values.assign(grid.size(), 0.0);
  const auto& K = simd::active();
  const std::size_t n0 = grid.points[0], n1 = grid.points[1], n2 = grid.points[2];
  std::array<std::vector<double>, 3> rows;
  for (int k = grid.dim; k < 3; ++k) rows[k].assign(1, 1.0);
  for (const Vec& c : real.centers) {
    for (int k = 0; k < grid.dim; ++k) axis_profile(grid, k, c[k], hbar, rows[k]);
    // Outer product accumulated row by row along the fastest axis.
    const std::vector<double>& last = rows[grid.dim - 1];
    const std::size_t nl = last.size();
    if (grid.dim == 1) {
      K.axpy(W.values.data(), 1.0, last.data(), nl);
    } else if (grid.dim == 2) {
      for (std::size_t a = 0; a < n0; ++a)
        if (rows[0][a] != 0.0) K.axpy(W.values.data() + a * n1, rows[0][a], last.data(), nl);
    } else {
      for (std::size_t a = 0; a < n0; ++a) {
        if (rows[0][a] == 0.0) continue;
        for (std::size_t b = 0; b < n1; ++b)
          if (rows[1][b] != 0.0) K.axpy(W.values.data() + (a * n1 + b) * n2, rows[0][a] * rows[1][b], last.data(), nl);
      }
    }
  }
  return W;
}

CampbellReport campbell_check(const std::function<double(const Vec&)>& f, double rho, double hbar, int dim,
                              const Vec& box, std::size_t n_seeds, std::uint64_t base_seed) {
  if (n_seeds < 2) throw DomainError("campbell_check needs at least two seeds");
  CampbellReport rep;
  rep.n_seeds = n_seeds;
  // Tensor Gauss-Legendre quadrature of f over the box.
  const std::size_t panels = dim == 3 ? 8 : 16;
  std::array<quad::Rule, 3> rules;
  for (int k = 0; k < 3; ++k) {
    if (k < dim) {
      rules[k] = quad::composite_gauss_legendre(8, panels, -0.5 * box[k], 0.5 * box[k]);
    } else {
      rules[k].x = {0.0};
      rules[k].w = {1.0};
    }
  }
  double integral = 0.0;
  for (std::size_t a = 0; a < rules[0].size(); ++a)
    for (std::size_t b = 0; b < rules[1].size(); ++b)
      for (std::size_t c = 0; c < rules[2].size(); ++c)
        integral += rules[0].w[a] * rules[1].w[b] * rules[2].w[c] * f(Vec{rules[0].x[a], rules[1].x[b], rules[2].x[c]});
  rep.integral = integral;
  rep.target = rho * std::pow(hbar, 1.0 - dim) * integral;

  // Welford accumulation in seed order.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    const auto r = sample_realization(rho, hbar, dim, box, derive_seed(base_seed, i));
    double s = 0.0;
    for (const Vec& c : r.centers) s += f(c);
    const double delta = s - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (s - mean);
  }
  rep.empirical_mean = mean;
  rep.standard_error = std::sqrt(m2 / static_cast<double>(n_seeds - 1) / static_cast<double>(n_seeds));
  const double gap = std::abs(rep.empirical_mean - rep.target);
  rep.within_3sigma = rep.standard_error > 0.0 ? gap <= 3.0 * rep.standard_error : gap <= 1e-12 * (1.0 + std::abs(rep.target));
  return rep;
}

PoissonCountReport poisson_count_test(double rho, double hbar, int dim, const Vec& box, std::size_t n_seeds,
                                      std::uint64_t base_seed, double alpha) {
  PoissonCountReport rep;
  rep.n_seeds = n_seeds;
  rep.expected_mean = rho * std::pow(hbar, 1.0 - dim) * box_volume(dim, box);
  if (!(rep.expected_mean > 0.0)) throw DomainError("poisson_count_test needs a positive expected count");
  std::vector<std::size_t> hist;
  double total = 0.0;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    const std::size_t c = sample_realization(rho, hbar, dim, box, derive_seed(base_seed, i)).centers.size();
    if (c >= hist.size()) hist.resize(c + 1, 0);
    ++hist[c];
    total += static_cast<double>(c);
  }
  rep.sample_mean = total / static_cast<double>(n_seeds);

  const boost::math::poisson_distribution<double> pois(rep.expected_mean);
  const double N = static_cast<double>(n_seeds);
  // Merge consecutive counts into bins with expected >= 5; last bin is the upper tail.
  std::vector<double> expected, observed;
  double e = 0.0, o = 0.0, cum = 0.0;
  std::size_t k = 0;
  while (true) {
    const double pk = boost::math::pdf(pois, static_cast<double>(k));
    e += N * pk;
    cum += pk;
    o += k < hist.size() ? static_cast<double>(hist[k]) : 0.0;
    ++k;
    const double rest = N * (1.0 - cum);
    if (e >= 5.0 && rest >= 5.0) {
      expected.push_back(e);
      observed.push_back(o);
      e = o = 0.0;
    } else if (rest < 5.0) {
      break;
    }
  }
  // Tail: everything from k upwards, merged with any partial bin.
  double tail_obs = o;
  for (std::size_t j = k; j < hist.size(); ++j) tail_obs += static_cast<double>(hist[j]);
  const double tail_exp = e + N * (1.0 - cum);
  if (tail_exp >= 5.0 || expected.empty()) {
    expected.push_back(tail_exp);
    observed.push_back(tail_obs);
  } else {
    expected.back() += tail_exp;
    observed.back() += tail_obs;
  }
  double chi = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) chi += std::pow(observed[i] - expected[i], 2) / expected[i];
  rep.statistic = chi;
  rep.dof = static_cast<int>(expected.size()) - 1;
  if (rep.dof < 1) throw DomainError("too few bins for a chi-square test; raise n_seeds");
  rep.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(rep.dof), chi));
  rep.pass = rep.p_value > alpha;
  return rep;
}

nlohmann::json to_json(const ScattererRealization& r) {
  nlohmann::json j;
  j["seed"] = r.seed;
  j["dim"] = r.dim;
  j["box"] = std::vector<double>(r.box.begin(), r.box.begin() + r.dim);
  j["hbar"] = r.hbar;
  j["rho"] = r.rho;
  auto centers = nlohmann::json::array();
  for (const Vec& c : r.centers) centers.push_back(std::vector<double>(c.begin(), c.begin() + r.dim));
  j["centers"] = std::move(centers);
  return j;
}

ScattererRealization realization_from_json(const nlohmann::json& j) {
  ScattererRealization r;
  try {
    r.seed = j.at("seed").get<std::uint64_t>();
    r.dim = j.at("dim").get<int>();
    const auto box = j.at("box").get<std::vector<double>>();
    if (r.dim < 1 || r.dim > 3 || static_cast<int>(box.size()) != r.dim) throw DomainError("bad realization box");
    for (int k = 0; k < r.dim; ++k) r.box[k] = box[k];
    r.hbar = j.at("hbar").get<double>();
    r.rho = j.at("rho").get<double>();
    r.intensity_effective = r.rho * std::pow(r.hbar, 1.0 - r.dim);
    for (const auto& c : j.at("centers")) {
      const auto v = c.get<std::vector<double>>();
      if (static_cast<int>(v.size()) != r.dim) throw DomainError("bad centre dimension");
      Vec x{0.0, 0.0, 0.0};
      for (int k = 0; k < r.dim; ++k) x[k] = v[k];
      r.centers.push_back(x);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("invalid realization JSON: ") + e.what());
  }
  return r;
}

}  // namespace sbl
