#include "sbl/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "sbl/error.hpp"

namespace sbl::quad {

void Rule::append(const Rule& other) {
  x.insert(x.end(), other.x.begin(), other.x.end());
  w.insert(w.end(), other.w.begin(), other.w.end());
}

namespace {

// Nodes/weights on [-1,1], cached per order.
const Rule& reference_rule(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, Rule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n);
  if (!t) throw ResourceError("gauss_legendre: table allocation failed");
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) gsl_integration_glfixed_point(-1.0, 1.0, i, &r.x[i], &r.w[i], t);
  gsl_integration_glfixed_table_free(t);
  return cache.emplace(n, std::move(r)).first->second;
}

}  // namespace

Rule gauss_legendre(std::size_t n, double a, double b) {
  if (n == 0) throw DomainError("gauss_legendre: n must be positive");
  const Rule& ref = reference_rule(n);
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (std::size_t i = 0; i < n; ++i) {
    r.x[i] = c + h * ref.x[i];
    r.w[i] = h * ref.w[i];
  }
  return r;
}

Rule composite_gauss_legendre(std::size_t n, std::size_t panels, double a, double b) {
  Rule r;
  const double h = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) r.append(gauss_legendre(n, a + p * h, a + (p + 1) * h));
  return r;
}

Extrapolated extrapolate_to_zero(const std::vector<double>& h, const std::vector<std::complex<double>>& f) {
  const std::size_t n = h.size();
  if (n != f.size() || n < 2) throw ExtrapolationError("extrapolation needs at least two matching samples");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(h[i] > 0.0)) throw ExtrapolationError("extrapolation abscissae must be positive");
    if (i > 0 && !(h[i] < h[i - 1])) throw ExtrapolationError("extrapolation sequence must be strictly decreasing");
  }
  // Neville tableau evaluated at 0; diag[k] is the degree-k estimate using the last k+1 samples.
  std::vector<std::complex<double>> p(f);
  std::vector<std::complex<double>> diag{f[n - 1]};
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t i = 0; i + k < n; ++i) {
      const double hi = h[i], hk = h[i + k];
      p[i] = (hi * p[i + 1] - hk * p[i]) / (hi - hk);
    }
    diag.push_back(p[n - 1 - k]);
  }
  Extrapolated out;
  out.value = p[0];
  // p[0] is the full-degree estimate; compare with the degree n-2 estimate over the last n-1 samples.
  out.error = std::abs(p[0] - diag[n - 2]);
  return out;
}

std::vector<double> chebyshev2_nodes(std::size_t n) {
  std::vector<double> x(n + 1);
  for (std::size_t j = 0; j <= n; ++j) x[j] = std::cos(std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
  if (n > 0) {
    x[0] = 1.0;
    x[n] = -1.0;
  }
  return x;
}

std::complex<double> chebyshev2_interpolate(const std::vector<double>& nodes,
                                            const std::vector<std::complex<double>>& values, double x) {
  const std::size_t m = nodes.size();
  if (m != values.size() || m == 0) throw DomainError("chebyshev2_interpolate: size mismatch");
  if (m == 1) return values[0];
  std::complex<double> num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double d = x - nodes[j];
    if (d == 0.0) return values[j];
    double w = (j % 2 == 0) ? 1.0 : -1.0;
    if (j == 0 || j == m - 1) w *= 0.5;
    num += (w / d) * values[j];
    den += w / d;
  }
  return num / den;
}

}  // namespace sbl::quad
