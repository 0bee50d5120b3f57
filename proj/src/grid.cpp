#include "sbl/grid.hpp"

#include <numbers>

#include "sbl/error.hpp"
#include "sbl/simd.hpp"

namespace sbl {

Grid Grid::cube(int dim, double length, std::size_t n) {
  Grid g;
  g.dim = dim;
  for (int k = 0; k < 3; ++k) {
    g.box[k] = k < dim ? length : 1.0;
    g.points[k] = k < dim ? n : 1;
  }
  g.validate();
  return g;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int k = 0; k < dim; ++k) v *= spacing(k);
  return v;
}

double Grid::wavenumber(int k, std::size_t m) const {
  const auto n = static_cast<long long>(points[k]);
  long long s = static_cast<long long>(m);
  if (s >= (n + 1) / 2 && n > 1) s -= n;
  return 2.0 * std::numbers::pi * static_cast<double>(s) / box[k];
}

std::array<std::size_t, 3> Grid::unflatten(std::size_t i) const {
  std::array<std::size_t, 3> idx{};
  idx[2] = i % points[2];
  i /= points[2];
  idx[1] = i % points[1];
  idx[0] = i / points[1];
  return idx;
}

Vec Grid::position(std::size_t i) const {
  const auto idx = unflatten(i);
  Vec x{0.0, 0.0, 0.0};
  for (int k = 0; k < dim; ++k) x[k] = coord(k, idx[k]);
  return x;
}

double Grid::max_spacing() const {
  double h = 0.0;
  for (int k = 0; k < dim; ++k) h = std::max(h, spacing(k));
  return h;
}

void Grid::validate() const {
  if (dim < 1 || dim > 3) throw DomainError("grid dimension must be 1, 2 or 3");
  for (int k = 0; k < 3; ++k) {
    const std::size_t n = points[k];
    if (k >= dim) {
      if (n != 1) throw DomainError("inactive grid axis must have one point");
      continue;
    }
    if (n < 2 || (n & (n - 1)) != 0) throw DomainError("grid points must be a power of two >= 2");
    if (!(box[k] > 0.0)) throw DomainError("grid box extent must be positive");
  }
}

double l2_norm_sq(const Grid& g, const Field& f) {
  return simd::active().norm_sq(f.data(), f.size()) * g.cell_volume();
}

double l2_norm(const Grid& g, const Field& f) { return std::sqrt(l2_norm_sq(g, f)); }

double l2_distance(const Grid& g, const Field& a, const Field& b) {
  if (a.size() != b.size()) throw DomainError("l2_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
  return std::sqrt(s * g.cell_volume());
}

}  // namespace sbl
