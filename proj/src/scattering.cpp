#include "sbl/scattering.hpp"

#include <gsl/gsl_sf_bessel.h>

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "sbl/error.hpp"

namespace sbl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double two_pi_pow(double e) { return std::pow(kTwoPi, e); }

void check_dim(int d, const char* who) {
  if (d < 1 || d > 3) throw DomainError(std::string(who) + ": dimension must be 1, 2 or 3");
}

// Probabilists' Hermite values He_0..He_n at x.
void hermite_values(int n, double x, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(n) + 1, 1.0);
  if (n >= 1) out[1] = x;
  for (int k = 2; k <= n; ++k) out[static_cast<std::size_t>(k)] = x * out[static_cast<std::size_t>(k - 1)] - (k - 1) * out[static_cast<std::size_t>(k - 2)];
}

void enumerate_multi(int d, int n, std::vector<std::array<int, 3>>& out) {
  std::array<int, 3> e{0, 0, 0};
  for (e[0] = 0; e[0] <= n; ++e[0])
    for (e[1] = 0; e[1] <= (d >= 2 ? n - e[0] : 0); ++e[1])
      for (e[2] = 0; e[2] <= (d >= 3 ? n - e[0] - e[1] : 0); ++e[2]) out.push_back(e);
}

double compute_norm(int d, int n) {
  // V^ is a product of 1D gaussians and every factor is even, so the positive
  // octant suffices. Trapezoid nodes on [0, 13]; the |He_k| kinks limit this
  // to about three digits, which is all the bound fit needs.
  const double h = d == 3 ? 0.08 : 0.02, xmax = 13.0;
  const std::size_t K = static_cast<std::size_t>(std::ceil(xmax / h)) + 1;
  std::vector<std::vector<double>> fac(K);  // |He_k(x)| e^{-x^2/2}
  std::vector<double> hv;
  for (std::size_t i = 0; i < K; ++i) {
    const double x = static_cast<double>(i) * h;
    hermite_values(n, x, hv);
    fac[i].resize(hv.size());
    for (std::size_t k = 0; k < hv.size(); ++k) fac[i][k] = std::abs(hv[k]) * std::exp(-0.5 * x * x);
  }
  std::vector<std::array<int, 3>> eps;
  enumerate_multi(d, n, eps);
  std::vector<double> l1(eps.size(), 0.0), linf(eps.size(), 0.0);
  auto tw = [&](std::size_t i) { return (i == 0 ? 0.5 : 1.0) * h; };
  const std::size_t K1 = K, K2 = d >= 2 ? K : 1, K3 = d >= 3 ? K : 1;
  for (std::size_t i = 0; i < K1; ++i)
    for (std::size_t j = 0; j < K2; ++j)
      for (std::size_t k = 0; k < K3; ++k) {
        const double x1 = i * h, x2 = j * h, x3 = k * h;
        const double r2 = x1 * x1 + (d >= 2 ? x2 * x2 : 0.0) + (d >= 3 ? x3 * x3 : 0.0);
        const double weight = std::pow(1.0 + r2, 0.5 * n);
        const double w = tw(i) * (d >= 2 ? tw(j) : 1.0) * (d >= 3 ? tw(k) : 1.0);
        for (std::size_t e = 0; e < eps.size(); ++e) {
          double v = fac[i][static_cast<std::size_t>(eps[e][0])];
          if (d >= 2) v *= fac[j][static_cast<std::size_t>(eps[e][1])];
          if (d >= 3) v *= fac[k][static_cast<std::size_t>(eps[e][2])];
          v *= weight;
          l1[e] += w * v;
          linf[e] = std::max(linf[e], v);
        }
      }
  const double scale = two_pi_pow(0.5 * d);
  double best = 0.0;
  for (std::size_t e = 0; e < eps.size(); ++e)
    best = std::max({best, scale * l1[e] * std::pow(2.0, d), scale * linf[e]});
  return best;
}

}  // namespace

// ---------------------------------------------------------------- spectrum

double SingleSiteSpectrum::v_hat(double xi2) const { return two_pi_pow(0.5 * dim) * std::exp(-0.5 * xi2); }

double SingleSiteSpectrum::norm_1_inf(int n) const {
  check_dim(dim, "norm_1_inf");
  if (n < 0) throw DomainError("norm_1_inf: n must be non-negative");
  static std::mutex mu;
  static std::map<std::pair<int, int>, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(dim, n);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const double v = compute_norm(dim, n);
  cache.emplace(key, v);
  return v;
}

ShellQuadSpec ShellQuadSpec::refined() const {
  ShellQuadSpec s = *this;
  s.level = level + 1;
  return s;
}

// ------------------------------------------------------------ radial rule

ResolventRadialRule resolvent_radial_rule(int dim, double q, double gamma, const ShellQuadSpec& spec) {
  check_dim(dim, "resolvent_radial_rule");
  if (!(gamma > 0.0)) throw DomainError("resolvent rule: gamma must be positive");
  if (!(q > 1e-6)) throw DomainError("resolvent rule: shell speed must be positive");
  const std::size_t n = spec.gl_order + 2 * static_cast<std::size_t>(spec.level);
  const double panel_len = 0.5 / (1.0 + 0.5 * spec.level);
  ResolventRadialRule out;
  auto pw = [dim](double r) { return std::pow(r, dim - 1); };
  auto resolvent = [gamma, q](double r) { return 2.0 / cplx(gamma, -(r * r - q * q)); };
  auto plain = [&](double a, double b) {
    if (!(b > a)) return;
    const std::size_t panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / panel_len)));
    quad::Rule rule = quad::composite_gauss_legendre(n, panels, a, b);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      out.r.push_back(rule.x[k]);
      out.w.push_back(rule.w[k] * pw(rule.x[k]) * resolvent(rule.x[k]));
    }
  };
  const double A = 0.5 * q * q;
  plain(0.0, std::sqrt(q * q - A));
  // Shell region in a = r^2 - q^2 with the value at a = 0 subtracted.
  std::vector<double> breaks{0.0};
  const double ratio = std::pow(2.0, 1.0 / (1.0 + 0.5 * spec.level));
  for (double b = 0.25 * gamma; b < A; b *= ratio) breaks.push_back(b);
  breaks.push_back(A);
  cplx subtracted = 0.0;
  for (int sign : {-1, 1})
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      quad::Rule rule = quad::gauss_legendre(n, breaks[k], breaks[k + 1]);
      for (std::size_t j = 0; j < rule.size(); ++j) {
        const double a = sign * rule.x[j];
        const double r = std::sqrt(q * q + a);
        const cplx base = rule.w[j] / cplx(gamma, -a);
        subtracted += base;
        out.r.push_back(r);
        out.w.push_back(base * std::pow(r, dim - 2));
      }
    }
  out.r.push_back(q);
  out.w.push_back(std::pow(q, dim - 2) * (2.0 * std::atan(A / gamma) - subtracted));
  plain(std::sqrt(q * q + A), q + spec.radial_tail);
  return out;
}

SphereRule sphere_rule(int dim, std::size_t n) {
  check_dim(dim, "sphere_rule");
  SphereRule s;
  if (dim == 1) {
    s.cos_angle = {1.0, -1.0};
    s.weight = {1.0, 1.0};
  } else if (dim == 2) {
    for (std::size_t j = 0; j < n; ++j) {
      s.cos_angle.push_back(std::cos(kTwoPi * j / n));
      s.weight.push_back(kTwoPi / n);
    }
  } else {
    quad::Rule r = quad::gauss_legendre(n, -1.0, 1.0);
    s.cos_angle = r.x;
    for (double w : r.w) s.weight.push_back(kTwoPi * w);
  }
  return s;
}

// ------------------------------------------------------------ Born series

BornSeries::BornSeries(int dim, double p0_speed, double gamma, int max_order, const ShellQuadSpec& spec)
    : dim_(dim), q_(p0_speed), gamma_(gamma), max_order_(max_order) {
  check_dim(dim, "BornSeries");
  if (max_order < 1) throw DomainError("BornSeries: max_order must be >= 1");
  if (max_order == 1) return;
  ResolventRadialRule radial = resolvent_radial_rule(dim, q_, gamma, spec);
  std::vector<double> au, as, aw;
  if (dim == 1) {
    au = {1.0, -1.0};
    as = {0.0, 0.0};
    aw = {1.0, 1.0};
  } else if (dim == 2) {
    const std::size_t n = (spec.angular ? spec.angular : 64) + 8 * static_cast<std::size_t>(spec.level);
    for (std::size_t j = 0; j < n; ++j) {
      au.push_back(std::cos(kTwoPi * j / n));
      as.push_back(std::sin(kTwoPi * j / n));
      aw.push_back(kTwoPi / n);
    }
  } else {
    const std::size_t n = (spec.angular ? spec.angular : 32) + 4 * static_cast<std::size_t>(spec.level);
    quad::Rule rule = quad::gauss_legendre(n, -1.0, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
      au.push_back(rule.x[j]);
      as.push_back(std::sqrt(std::max(0.0, 1.0 - rule.x[j] * rule.x[j])));
      aw.push_back(rule.w[j]);
    }
  }
  for (std::size_t i = 0; i < radial.r.size(); ++i)
    for (std::size_t j = 0; j < au.size(); ++j) {
      r_.push_back(radial.r[i]);
      u_.push_back(au[j]);
      s_.push_back(as[j]);
      w_.push_back(radial.w[i] * aw[j]);
    }
  const double c = two_pi_pow(0.5 * dim);
  std::vector<cplx> f(r_.size());
  for (std::size_t k = 0; k < r_.size(); ++k)
    f[k] = c * std::exp(-0.5 * (r_[k] * r_[k] + q_ * q_ - 2.0 * r_[k] * q_ * u_[k]));
  F_.push_back(f);
  for (int j = 2; j < max_order; ++j) {
    const std::vector<cplx>& prev = F_.back();
    std::vector<cplx> next(r_.size());
    for (std::size_t k = 0; k < r_.size(); ++k) next[k] = kernel_sum(prev, r_[k], u_[k], s_[k]);
    F_.push_back(std::move(next));
  }
}

cplx BornSeries::kernel_sum(const std::vector<cplx>& f, double r, double u, double s) const {
  // V^(eta' - eta) integrated over the azimuth of eta about the p0 axis.
  double c = two_pi_pow(0.5 * dim_);
  if (dim_ == 3) c *= kTwoPi;
  cplx acc = 0.0;
  for (std::size_t k = 0; k < r_.size(); ++k) {
    const double rr = r * r_[k];
    double kern;
    if (dim_ == 3) {
      const double b = rr * s * s_[k];
      kern = std::exp(-0.5 * (r * r + r_[k] * r_[k]) + rr * (u * u_[k] + s * s_[k])) * gsl_sf_bessel_I0_scaled(b);
    } else {
      kern = std::exp(-0.5 * (r * r + r_[k] * r_[k]) + rr * (u * u_[k] + s * s_[k]));
    }
    acc += w_[k] * f[k] * kern;
  }
  return c * acc;
}

cplx BornSeries::psi(int m, double speed, double cos_angle) const {
  if (m < 1 || m > max_order_) throw DomainError("BornSeries::psi: order out of range");
  const double u = std::clamp(cos_angle, -1.0, 1.0);
  if (m == 1) {
    const double xi2 = speed * speed + q_ * q_ - 2.0 * speed * q_ * u;
    return two_pi_pow(-0.5 * dim_) * std::exp(-0.5 * xi2);
  }
  const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
  return two_pi_pow(-static_cast<double>(dim_) * m) * kernel_sum(F_[static_cast<std::size_t>(m - 2)], speed, u, s);
}

namespace {

double norm_of(const Vec& v, int d) { return std::sqrt(dot(v, v, d)); }

double cos_between(const Vec& p, const Vec& q, int d) {
  const double np = norm_of(p, d), nq = norm_of(q, d);
  if (np == 0.0 || nq == 0.0) return 1.0;
  return std::clamp(dot(p, q, d) / (np * nq), -1.0, 1.0);
}

bool agree(cplx a, cplx b, double tol) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) <= tol * scale;
}

}  // namespace

cplx psi_m_gamma(int m, const Vec& p, const Vec& p0, double gamma, int dim, const ShellQuadSpec& spec) {
  check_dim(dim, "psi_m_gamma");
  if (m < 1) throw DomainError("psi_m_gamma: m must be >= 1");
  if (!(gamma > 0.0)) throw DomainError("psi_m_gamma: gamma must be positive");
  const double speed = norm_of(p, dim), q = norm_of(p0, dim);
  const double u = cos_between(p, p0, dim);
  if (m == 1) {
    Vec diff{p[0] - p0[0], p[1] - p0[1], p[2] - p0[2]};
    return two_pi_pow(-static_cast<double>(dim)) * SingleSiteSpectrum{dim}.v_hat(dot(diff, diff, dim));
  }
  BornSeries coarse(dim, q, gamma, m, spec);
  BornSeries fine(dim, q, gamma, m, spec.refined());
  const cplx a = coarse.psi(m, speed, u), b = fine.psi(m, speed, u);
  if (!agree(a, b, spec.tolerance))
    throw AccuracyError("psi_m_gamma: refinement changed the value by " + std::to_string(std::abs(a - b)));
  return b;
}

BornResult born_sum(const BornSeries& series, double speed, double cos_angle, int order, double lambda) {
  if (order < 1 || order > series.max_order()) throw DomainError("born_sum: order out of range");
  BornResult out;
  cplx coupling = 1.0;
  for (int n = 1; n <= order; ++n) {
    coupling *= cplx(0.0, lambda);
    const cplx t = cplx(0.0, -1.0) * coupling * series.psi(n, speed, cos_angle);
    out.terms.push_back(t);
    out.value += t;
  }
  for (std::size_t n = 1; n < out.terms.size(); ++n) {
    const double prev = std::abs(out.terms[n - 1]);
    if (prev > 0.0) out.margin = std::max(out.margin, std::abs(out.terms[n]) / prev);
  }
  out.tail_estimate = std::abs(out.terms.back());
  out.divergence_warning = out.margin >= 0.8;
  return out;
}

BornResult tmatrix_born(const Vec& p, const Vec& q, double gamma, int order, double lambda, int dim,
                        const ShellQuadSpec& spec) {
  check_dim(dim, "tmatrix_born");
  if (order < 1) throw DomainError("tmatrix_born: order must be >= 1");
  BornSeries series(dim, norm_of(q, dim), gamma, order, spec);
  return born_sum(series, norm_of(p, dim), cos_between(p, q, dim), order, lambda);
}

std::vector<double> default_gamma_sequence() { return {0.08, 0.04, 0.02, 0.01}; }

namespace {

void check_gamma_sequence(const std::vector<double>& g) {
  if (g.size() < 3) throw ExtrapolationError("gamma sequence needs at least three entries");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(g[i] > 0.0)) throw ExtrapolationError("gamma sequence must be positive");
    if (i > 0 && !(g[i] < g[i - 1])) throw ExtrapolationError("gamma sequence must be strictly decreasing");
  }
}

// The gamma trace must settle: successive differences may not grow.
void check_trace(const std::vector<cplx>& v) {
  double scale = 0.0;
  for (const cplx& x : v) scale = std::max(scale, std::abs(x));
  for (std::size_t i = 2; i < v.size(); ++i) {
    const double d1 = std::abs(v[i - 1] - v[i - 2]), d2 = std::abs(v[i] - v[i - 1]);
    if (d2 > d1 + 1e-12 * scale)
      throw ExtrapolationError("gamma trace is not monotone: differences " + std::to_string(d1) + " then " +
                               std::to_string(d2));
  }
}

struct SeriesPair {
  BornSeries coarse, fine;
};

}  // namespace

OnShellValue onshell_extrapolate(double speed, double cos_angle, const std::vector<double>& gamma_seq, int order,
                                 double lambda, int dim, const ShellQuadSpec& spec) {
  check_gamma_sequence(gamma_seq);
  OnShellValue out;
  for (double g : gamma_seq) {
    BornSeries series(dim, speed, g, order, spec);
    BornResult r = born_sum(series, speed, cos_angle, order, lambda);
    if (order >= 2) {
      BornSeries fine(dim, speed, g, order, spec.refined());
      const cplx rf = born_sum(fine, speed, cos_angle, order, lambda).value;
      if (!agree(r.value, rf, spec.tolerance))
        throw AccuracyError("onshell_extrapolate: refinement disagreement at gamma " + std::to_string(g));
      r.value = rf;
    }
    out.per_gamma.push_back(r.value);
    out.margin = std::max(out.margin, r.margin);
  }
  check_trace(out.per_gamma);
  quad::Extrapolated e = quad::extrapolate_to_zero(gamma_seq, out.per_gamma);
  out.value = e.value;
  out.error = e.error;
  return out;
}

// ------------------------------------------------------------ on-shell table

cplx OnShellAmplitude::t_hat(double speed, double cos_angle) const {
  if (speeds.empty()) throw DomainError("t_hat: empty table");
  const double lo = speeds.front(), hi = speeds.back();
  const double tol = 1e-12 * std::max(1.0, hi);
  if (speed < lo - tol || speed > hi + tol) throw DomainError("t_hat: speed " + std::to_string(speed) + " outside table");
  auto at = [&](std::size_t i) {
    if (dim == 1) return cos_angle >= 0.0 ? t_values[i][0] : t_values[i][1];
    return quad::chebyshev2_interpolate(angles, t_values[i], std::clamp(cos_angle, -1.0, 1.0));
  };
  if (speeds.size() == 1) return at(0);
  auto it = std::upper_bound(speeds.begin(), speeds.end(), speed);
  std::size_t i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - speeds.begin(), 1, static_cast<std::ptrdiff_t>(speeds.size() - 1)));
  const double s0 = speeds[i - 1], s1 = speeds[i];
  const double f = std::clamp((speed - s0) / (s1 - s0), 0.0, 1.0);
  if (f == 0.0) return at(i - 1);
  if (f == 1.0) return at(i);
  return (1.0 - f) * at(i - 1) + f * at(i);
}

namespace {

std::vector<double> table_angles(int dim, std::size_t intervals) {
  if (dim == 1) return {1.0, -1.0};
  if (intervals < 2) throw DomainError("on-shell table: need at least two angle intervals");
  return quad::chebyshev2_nodes(intervals);
}

void check_speeds(const std::vector<double>& s) {
  if (s.empty()) throw DomainError("on-shell table: no speeds");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0.0)) throw DomainError("on-shell table: speeds must be positive");
    if (i > 0 && !(s[i] > s[i - 1])) throw DomainError("on-shell table: speeds must increase");
  }
}

}  // namespace

OnShellAmplitude first_born_table(int dim, double lambda, const std::vector<double>& speeds,
                                  std::size_t angle_intervals) {
  check_dim(dim, "first_born_table");
  check_speeds(speeds);
  OnShellAmplitude t;
  t.dim = dim;
  t.lambda = lambda;
  t.born_order = 1;
  t.speeds = speeds;
  t.angles = table_angles(dim, angle_intervals);
  for (double q : speeds) {
    std::vector<cplx> row;
    for (double u : t.angles)
      row.push_back(lambda * two_pi_pow(-0.5 * dim) * std::exp(-q * q * (1.0 - u)));
    t.t_values.push_back(row);
    t.errors.push_back(std::vector<double>(row.size(), 0.0));
  }
  return t;
}

OnShellAmplitude build_onshell_table(int dim, double lambda, int born_order, const std::vector<double>& speeds,
                                     std::size_t angle_intervals, const std::vector<double>& gamma_seq,
                                     const ShellQuadSpec& spec) {
  check_dim(dim, "build_onshell_table");
  if (born_order < 1) throw DomainError("build_onshell_table: born_order must be >= 1");
  if (born_order == 1) return first_born_table(dim, lambda, speeds, angle_intervals);
  check_speeds(speeds);
  check_gamma_sequence(gamma_seq);
  OnShellAmplitude t;
  t.dim = dim;
  t.lambda = lambda;
  t.born_order = born_order;
  t.speeds = speeds;
  t.angles = table_angles(dim, angle_intervals);
  t.gamma_trace = gamma_seq;
  for (double q : speeds) {
    std::vector<std::vector<cplx>> trace(t.angles.size());
    for (double g : gamma_seq) {
      BornSeries coarse(dim, q, g, born_order, spec);
      BornSeries fine(dim, q, g, born_order, spec.refined());
      std::vector<double> order_norm(static_cast<std::size_t>(born_order), 0.0);
      for (std::size_t a = 0; a < t.angles.size(); ++a) {
        const BornResult rc = born_sum(coarse, q, t.angles[a], born_order, lambda);
        const BornResult rf = born_sum(fine, q, t.angles[a], born_order, lambda);
        if (!agree(rc.value, rf.value, spec.tolerance) && std::abs(rc.value - rf.value) > 1e-14)
          throw AccuracyError("on-shell table: refinement disagreement at speed " + std::to_string(q));
        trace[a].push_back(rf.value);
        for (std::size_t n = 0; n < order_norm.size(); ++n) order_norm[n] += std::norm(rf.terms[n]);
      }
      // Margin over the whole shell: ratio of successive term norms across angles.
      for (std::size_t n = 1; n < order_norm.size(); ++n)
        if (order_norm[n - 1] > 0.0) t.max_margin = std::max(t.max_margin, std::sqrt(order_norm[n] / order_norm[n - 1]));
    }
    std::vector<cplx> row;
    std::vector<double> err;
    for (std::size_t a = 0; a < t.angles.size(); ++a) {
      check_trace(trace[a]);
      quad::Extrapolated e = quad::extrapolate_to_zero(gamma_seq, trace[a]);
      row.push_back(e.value);
      err.push_back(e.error);
    }
    t.t_values.push_back(row);
    t.errors.push_back(err);
  }
  return t;
}

nlohmann::json to_json(const OnShellAmplitude& t) {
  nlohmann::json j;
  j["dim"] = t.dim;
  j["lambda"] = t.lambda;
  j["born_order"] = t.born_order;
  j["speeds"] = t.speeds;
  j["angles"] = t.angles;
  j["gamma_trace"] = t.gamma_trace;
  j["max_margin"] = t.max_margin;
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array(), er = nlohmann::json::array();
  for (std::size_t i = 0; i < t.t_values.size(); ++i) {
    nlohmann::json r = nlohmann::json::array(), m = nlohmann::json::array();
    for (const cplx& v : t.t_values[i]) {
      r.push_back(v.real());
      m.push_back(v.imag());
    }
    re.push_back(r);
    im.push_back(m);
    er.push_back(i < t.errors.size() ? nlohmann::json(t.errors[i]) : nlohmann::json::array());
  }
  j["re"] = re;
  j["im"] = im;
  j["errors"] = er;
  return j;
}

OnShellAmplitude onshell_from_json(const nlohmann::json& j) {
  try {
    OnShellAmplitude t;
    t.dim = j.at("dim").get<int>();
    t.lambda = j.at("lambda").get<double>();
    t.born_order = j.at("born_order").get<int>();
    t.speeds = j.at("speeds").get<std::vector<double>>();
    t.angles = j.at("angles").get<std::vector<double>>();
    t.gamma_trace = j.value("gamma_trace", std::vector<double>{});
    t.max_margin = j.value("max_margin", 0.0);
    const auto re = j.at("re").get<std::vector<std::vector<double>>>();
    const auto im = j.at("im").get<std::vector<std::vector<double>>>();
    if (re.size() != t.speeds.size() || im.size() != re.size()) throw IoError("on-shell table: row count mismatch");
    for (std::size_t i = 0; i < re.size(); ++i) {
      if (re[i].size() != t.angles.size() || im[i].size() != t.angles.size())
        throw IoError("on-shell table: column count mismatch");
      std::vector<cplx> row;
      for (std::size_t a = 0; a < re[i].size(); ++a) row.emplace_back(re[i][a], im[i][a]);
      t.t_values.push_back(row);
    }
    if (j.contains("errors")) t.errors = j.at("errors").get<std::vector<std::vector<double>>>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("on-shell table: ") + e.what());
  }
}

// ------------------------------------------------------------ collision kernel

namespace {
constexpr std::size_t kShellNodes = 96;
}

double CollisionKernelData::sigma_shell(double speed, double cos_angle) const {
  const double t = std::norm(table.t_hat(speed, cos_angle));
  return two_pi_pow(dim + 1) * rho * std::pow(speed, dim - 2) * t;
}

double CollisionKernelData::sigma_tot(double speed) const {
  const SphereRule s = sphere_rule(dim, dim == 2 ? 2 * kShellNodes : kShellNodes);
  double acc = 0.0;
  for (std::size_t k = 0; k < s.weight.size(); ++k) acc += s.weight[k] * sigma_shell(speed, s.cos_angle[k]);
  return acc;
}

double CollisionKernelData::sigma(const Vec& p, const Vec& q) const {
  const double np = norm_of(p, dim), nq = norm_of(q, dim);
  if (std::abs(np - nq) > 1e-9 * std::max(1.0, nq)) throw DomainError("sigma: momenta are not on a common shell");
  return two_pi_pow(dim + 1) * rho * std::norm(table.t_hat(nq, cos_between(p, q, dim)));
}

CollisionKernelData collision_kernel(const OnShellAmplitude& table, double rho) {
  if (!(rho >= 0.0)) throw DomainError("collision_kernel: rho must be non-negative");
  if (table.speeds.empty()) throw DomainError("collision_kernel: empty table");
  CollisionKernelData k;
  k.dim = table.dim;
  k.rho = rho;
  k.table = table;
  for (double q : table.speeds) k.sigma_tot_nodes.push_back(k.sigma_tot(q));
  return k;
}

// ------------------------------------------------------------ optical theorem

OpticalReport optical_residual(double speed, const std::vector<double>& gamma_seq, int order, double lambda, int dim,
                               const ShellQuadSpec& spec) {
  check_dim(dim, "optical_residual");
  if (order < 2) throw DomainError("optical_residual: order must be >= 2");
  check_gamma_sequence(gamma_seq);
  OpticalReport rep;
  rep.speed = speed;
  const SphereRule sphere = sphere_rule(dim, dim == 2 ? 2 * kShellNodes : kShellNodes);
  const double shell_factor = kPi * std::pow(speed, dim - 2);

  // Right side at second order: closed-form first Born term on a sphere rule.
  double s1 = 0.0;
  for (std::size_t k = 0; k < sphere.weight.size(); ++k) {
    const double t1 = lambda * two_pi_pow(-0.5 * dim) * std::exp(-speed * speed * (1.0 - sphere.cos_angle[k]));
    s1 += sphere.weight[k] * t1 * t1;
  }
  rep.shell_t1 = shell_factor * s1;

  std::vector<cplx> im2, forward_full;
  std::vector<std::vector<cplx>> shell_full(sphere.weight.size());
  for (double g : gamma_seq) {
    BornSeries coarse(dim, speed, g, order, spec);
    BornSeries fine(dim, speed, g, order, spec.refined());
    const cplx p2c = coarse.psi(2, speed, 1.0), p2 = fine.psi(2, speed, 1.0);
    if (!agree(p2c, p2, spec.tolerance)) throw AccuracyError("optical_residual: refinement disagreement");
    const double lhs = lambda * lambda * p2.real();
    im2.emplace_back(lhs, 0.0);
    const double denom = std::max(std::abs(lhs), std::abs(rep.shell_t1));
    rep.per_gamma_residual.push_back(denom > 0.0 ? std::abs(lhs - rep.shell_t1) / denom : 0.0);
    forward_full.push_back(born_sum(fine, speed, 1.0, order, lambda).value);
    for (std::size_t k = 0; k < sphere.weight.size(); ++k)
      shell_full[k].push_back(born_sum(fine, speed, sphere.cos_angle[k], order, lambda).value);
  }
  const quad::Extrapolated e2 = quad::extrapolate_to_zero(gamma_seq, im2);
  rep.im_t2 = e2.value.real();
  rep.extrapolation_error = e2.error;
  const double d2 = std::max(std::abs(rep.im_t2), std::abs(rep.shell_t1));
  rep.order_matched_residual = d2 > 0.0 ? std::abs(rep.im_t2 - rep.shell_t1) / d2 : 0.0;

  rep.im_t_full = quad::extrapolate_to_zero(gamma_seq, forward_full).value.imag();
  double sf = 0.0;
  for (std::size_t k = 0; k < sphere.weight.size(); ++k)
    sf += sphere.weight[k] * std::norm(quad::extrapolate_to_zero(gamma_seq, shell_full[k]).value);
  rep.shell_full = shell_factor * sf;
  const double df = std::max(std::abs(rep.im_t_full), std::abs(rep.shell_full));
  rep.full_residual = df > 0.0 ? std::abs(rep.im_t_full - rep.shell_full) / df : 0.0;
  return rep;
}

cplx psi2_gaussian_direct(const Vec& p, const Vec& p0, double gamma) {
  // V^(p - eta) V^(eta - p0) = (2 pi)^3 e^{-|p-p0|^2/4} e^{-|eta - c|^2}, c = (p + p0)/2;
  // the angular integral of e^{-|eta-c|^2} is closed form, leaving one radial integral.
  const Vec c{0.5 * (p[0] + p0[0]), 0.5 * (p[1] + p0[1]), 0.5 * (p[2] + p0[2])};
  const Vec d{p[0] - p0[0], p[1] - p0[1], p[2] - p0[2]};
  const double cn = norm_of(c, 3), q = norm_of(p0, 3);
  auto angular = [cn](double r) {
    if (cn * r < 1e-8) return 4.0 * kPi * std::exp(-r * r - cn * cn);
    return kPi * (std::exp(-(r - cn) * (r - cn)) - std::exp(-(r + cn) * (r + cn))) / (r * cn);
  };
  ShellQuadSpec spec;
  spec.gl_order = 16;
  spec.radial_tail = std::max(7.0, cn + 7.0 - q);
  const ResolventRadialRule rule = resolvent_radial_rule(3, q, gamma, spec);
  cplx acc = 0.0;
  for (std::size_t k = 0; k < rule.r.size(); ++k) acc += rule.w[k] * angular(rule.r[k]);
  return std::pow(kTwoPi, -3.0) * std::exp(-0.25 * dot(d, d, 3)) * acc;
}

PsiBoundReport fit_psi_bound(int dim, const std::vector<int>& orders, const std::vector<double>& gammas, double speed,
                             const ShellQuadSpec& spec) {
  check_dim(dim, "fit_psi_bound");
  PsiBoundReport rep;
  rep.norm = SingleSiteSpectrum{dim}.norm_1_inf(2 * dim + 2);
  int max_m = 1;
  for (int m : orders) max_m = std::max(max_m, m);
  const double first = two_pi_pow(-0.5 * dim);  // sup of (2 pi)^{-d} V^
  rep.first_order_ok = first <= two_pi_pow(-static_cast<double>(dim)) * rep.norm;
  const std::vector<double> cosines = dim == 1 ? std::vector<double>{1.0, -1.0} : std::vector<double>{1.0, 0.0, -1.0};
  double lo = INFINITY, hi = 0.0;
  for (double g : gammas) {
    BornSeries series(dim, speed, g, max_m, spec);
    for (int m : orders) {
      if (m < 2) continue;
      double peak = 0.0;
      for (double u : cosines) {
        PsiBoundSample s;
        s.m = m;
        s.gamma = g;
        s.speed = speed;
        s.cos_angle = u;
        s.abs_psi = std::abs(series.psi(m, speed, u));
        s.implied_constant =
            std::pow(s.abs_psi * two_pi_pow(dim) / std::pow(rep.norm, m), 1.0 / static_cast<double>(m - 1));
        peak = std::max(peak, s.implied_constant);
        rep.samples.push_back(s);
      }
      lo = std::min(lo, peak);
      hi = std::max(hi, peak);
    }
  }
  rep.fitted_constant = hi;
  rep.spread = (lo > 0.0 && std::isfinite(lo)) ? hi / lo : INFINITY;
  return rep;
}

// ------------------------------------------------------------ integral lemmas

double gamma_time_integral(double gamma) {
  if (!(gamma >= 0.0)) throw DomainError("gamma_time_integral: gamma must be non-negative");
  if (gamma == 0.0) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  // [0,1]: integrand 1 - e^{-g t}; [1, inf): t = s^{-2} gives 2 (1 - e^{-g/s^2}) on (0, 1].
  const double a = gauss_kronrod<double, 31>::integrate([gamma](double t) { return -std::expm1(-gamma * t); }, 0.0,
                                                         1.0, 15, 1e-13);
  const double b = gauss_kronrod<double, 31>::integrate(
      [gamma](double s) { return s == 0.0 ? 2.0 : -2.0 * std::expm1(-gamma / (s * s)); }, 0.0, 1.0, 15, 1e-13);
  return a + b;
}

double resolvent_log_integral(double a, double zeta) {
  if (!(zeta > 0.0)) throw DomainError("resolvent_log_integral: zeta must be positive");
  // nu + a = zeta sinh(s) turns |nu + a + i zeta|^{-1} d nu into ds.
  using boost::math::quadrature::gauss_kronrod;
  auto f = [a, zeta](double s) {
    const double nu = zeta * std::sinh(s) - a;
    return 1.0 / std::sqrt(1.0 + nu * nu);
  };
  const double peak = std::asinh(a / zeta);
  const double S = std::asinh(1e14 / zeta);
  std::vector<double> pts{-std::asinh(1.0 / zeta), 0.0, peak, peak + 8.0};
  std::sort(pts.begin(), pts.end());
  std::vector<double> breaks{-S};
  for (double b : pts)
    if (b - breaks.back() > 0.25 && S - b > 0.25) breaks.push_back(b);
  breaks.push_back(S);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    total += gauss_kronrod<double, 61>::integrate(f, breaks[i], breaks[i + 1], 15, 1e-12);
  return total;
}

double resolvent_log_sup(double zeta, double* argmax) {
  // Scan a = p^2/2 >= 0 on a geometric grid, then refine by Brent.
  double best_a = 0.0, best = resolvent_log_integral(0.0, zeta);
  std::vector<double> grid{0.0};
  for (double a = zeta * 0.01; a < 200.0; a *= 1.25) grid.push_back(a);
  std::size_t best_i = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = resolvent_log_integral(grid[i], zeta);
    if (v > best) {
      best = v;
      best_a = grid[i];
      best_i = i;
    }
  }
  const double lo = best_i == 0 ? 0.0 : grid[best_i - 1];
  const double hi = best_i + 1 < grid.size() ? grid[best_i + 1] : grid.back();
  std::uintmax_t iters = 100;
  auto r = boost::math::tools::brent_find_minima([zeta](double a) { return -resolvent_log_integral(a, zeta); }, lo, hi,
                                                 26, iters);
  if (-r.second > best) {
    best = -r.second;
    best_a = r.first;
  }
  if (argmax) *argmax = best_a;
  return best;
}

cplx resolvent_fourier_numeric(double r, cplx z) {
  if (!(r > 0.0)) throw DomainError("resolvent_fourier: |x| must be positive");
  if (z.imag() == 0.0) throw DomainError("resolvent_fourier: z must be off the real axis");
  boost::math::quadrature::ooura_fourier_sin<double> integrator(1e-12, 12);
  // p sin(p r) / (p^2/2 - z) = 2p/(p^2 - 2z) sin(p r).
  auto re = [z](double p) { return (2.0 * p / (p * p - 2.0 * z)).real(); };
  auto im = [z](double p) { return (2.0 * p / (p * p - 2.0 * z)).imag(); };
  const double vr = integrator.integrate(re, r).first;
  const double vi = integrator.integrate(im, r).first;
  return cplx(vr, vi) / (2.0 * kPi * kPi * r);
}

cplx resolvent_fourier_closed(double r, cplx z) {
  cplx k = std::sqrt(2.0 * z);
  if (k.imag() < 0.0) k = -k;
  return std::exp(cplx(0.0, 1.0) * k * r) / (kTwoPi * r);
}

LemmaReport check_estimate_lemmas(const LemmaSampleSpec& spec) {
  LemmaReport rep;
  bool ok = true;
  for (double g : spec.gammas) {
    LemmaSample s;
    s.name = "gamma_time_integral";
    s.parameter = g;
    s.lhs = gamma_time_integral(g);
    s.rhs = 5.0 * std::cbrt(g);
    s.holds = s.lhs <= s.rhs;
    ok = ok && s.holds;
    rep.time_integral.push_back(s);
  }
  std::vector<double> ratios;
  for (double zeta : spec.zetas) {
    if (!(zeta > 0.0 && zeta < 0.5)) throw DomainError("check_estimate_lemmas: zeta samples must lie in (0, 1/2)");
    LemmaSample s;
    s.name = "resolvent_log_bound";
    s.parameter = zeta;
    s.lhs = resolvent_log_sup(zeta);
    ratios.push_back(s.lhs / std::abs(std::log(zeta)));
    rep.log_bound.push_back(s);
  }
  if (!ratios.empty()) {
    rep.log_constant = *std::max_element(ratios.begin(), ratios.end());
    rep.log_ratio_spread = rep.log_constant / *std::min_element(ratios.begin(), ratios.end());
    for (LemmaSample& s : rep.log_bound) {
      s.rhs = rep.log_constant * std::abs(std::log(s.parameter));
      s.holds = s.lhs <= s.rhs * (1.0 + 1e-12) && rep.log_ratio_spread <= spec.max_log_spread;
      ok = ok && s.holds;
    }
  }
  std::vector<std::pair<Vec, cplx>> pts = spec.fourier_points;
  if (pts.empty())
    pts = {{{1.0, 0.0, 0.0}, {0.0, 1.0}},  {{0.0, 2.0, 0.0}, {1.0, 1.0}},   {{0.5, 0.5, 0.5}, {-1.0, 0.5}},
           {{0.3, 0.0, 0.4}, {0.5, 0.2}}, {{1.0, -1.0, 1.0}, {2.0, -1.0}}};
  for (const auto& [x, z] : pts) {
    ResolventFourierSample s;
    s.x = x;
    s.z = z;
    const double r = norm_of(x, 3);
    s.numeric = resolvent_fourier_numeric(r, z);
    s.closed_form = resolvent_fourier_closed(r, z);
    s.relative_error = std::abs(s.numeric - s.closed_form) / std::abs(s.closed_form);
    ok = ok && s.relative_error <= rep.fourier_tolerance;
    rep.fourier.push_back(s);
  }
  rep.all_hold = ok;
  return rep;
}

}  // namespace sbl
