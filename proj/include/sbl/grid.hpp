#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "sbl/aligned.hpp"

namespace sbl {

using Vec = std::array<double, 3>;

inline double dot(const Vec& a, const Vec& b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += a[k] * b[k];
  return s;
}
inline double norm2(const Vec& a, int dim) { return dot(a, a, dim); }

// Periodic box centred at the origin: axis k covers [-box[k]/2, box[k]/2).
// Row-major storage, last active axis fastest. Unused axes have one point.
struct Grid {
  int dim = 1;
  Vec box{1.0, 1.0, 1.0};
  std::array<std::size_t, 3> points{1, 1, 1};

  static Grid cube(int dim, double length, std::size_t n);

  std::size_t size() const { return points[0] * points[1] * points[2]; }
  double spacing(int k) const { return box[k] / static_cast<double>(points[k]); }
  double cell_volume() const;
  double coord(int k, std::size_t j) const { return -0.5 * box[k] + static_cast<double>(j) * spacing(k); }
  // Angular wavenumber of FFT bin m on axis k (signed, FFT order).
  double wavenumber(int k, std::size_t m) const;
  // Multi-index of flat index i.
  std::array<std::size_t, 3> unflatten(std::size_t i) const;
  Vec position(std::size_t i) const;
  double max_spacing() const;

  // Throws DomainError unless dim in {1,2,3}, sizes power of two, boxes positive.
  void validate() const;
  bool operator==(const Grid& o) const = default;
};

// Iterate all points calling f(flat index, position).
template <class F>
void for_each_point(const Grid& g, F&& f) {
  std::size_t i = 0;
  Vec x{0.0, 0.0, 0.0};
  for (std::size_t a = 0; a < g.points[0]; ++a) {
    x[0] = g.dim > 0 ? g.coord(0, a) : 0.0;
    for (std::size_t b = 0; b < g.points[1]; ++b) {
      x[1] = g.dim > 1 ? g.coord(1, b) : 0.0;
      for (std::size_t c = 0; c < g.points[2]; ++c, ++i) {
        x[2] = g.dim > 2 ? g.coord(2, c) : 0.0;
        f(i, x);
      }
    }
  }
}

// Same traversal over FFT wavenumbers.
template <class F>
void for_each_wavenumber(const Grid& g, F&& f) {
  std::size_t i = 0;
  Vec k{0.0, 0.0, 0.0};
  for (std::size_t a = 0; a < g.points[0]; ++a) {
    k[0] = g.dim > 0 ? g.wavenumber(0, a) : 0.0;
    for (std::size_t b = 0; b < g.points[1]; ++b) {
      k[1] = g.dim > 1 ? g.wavenumber(1, b) : 0.0;
      for (std::size_t c = 0; c < g.points[2]; ++c, ++i) {
        k[2] = g.dim > 2 ? g.wavenumber(2, c) : 0.0;
        f(i, k);
      }
    }
  }
}

// Sum of |f|^2 times the cell volume.
double l2_norm_sq(const Grid& g, const Field& f);
double l2_norm(const Grid& g, const Field& f);
double l2_distance(const Grid& g, const Field& a, const Field& b);

}  // namespace sbl
