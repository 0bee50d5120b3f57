#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace sbl::quad {

struct Rule {
  std::vector<double> x;
  std::vector<double> w;
  std::size_t size() const { return x.size(); }
  void append(const Rule& other);
};

// n-point Gauss-Legendre rule mapped to [a, b].
Rule gauss_legendre(std::size_t n, double a, double b);
// Composite rule: `panels` equal panels of n nodes each.
Rule composite_gauss_legendre(std::size_t n, std::size_t panels, double a, double b);

struct Extrapolated {
  std::complex<double> value;
  double error;
};

// Polynomial (Neville) extrapolation of samples f(h_i) to h = 0.
// error is the change between the two highest-order estimates.
Extrapolated extrapolate_to_zero(const std::vector<double>& h,
                                 const std::vector<std::complex<double>>& f);

// Barycentric weights for Chebyshev points of the second kind on [-1,1],
// nodes ordered cos(pi j/n), j = 0..n.
std::vector<double> chebyshev2_nodes(std::size_t n);
std::complex<double> chebyshev2_interpolate(const std::vector<double>& nodes,
                                            const std::vector<std::complex<double>>& values,
                                            double x);

}  // namespace sbl::quad
