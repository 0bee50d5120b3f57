#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "sbl/grid.hpp"

namespace sbl {

using SpatialFn = std::function<double(const Vec&)>;

// Real phase-space observable a(x, p). When separable_terms is non-empty,
// a(x, p) = sum_j f_j(x) g_j(p) and pairings use the factorised form.
struct PhaseSpaceSymbol {
  int dim = 1;
  std::function<double(const Vec& x, const Vec& p)> evaluator;
  std::vector<std::pair<SpatialFn, SpatialFn>> separable_terms;
  bool schwartz = true;

  double operator()(const Vec& x, const Vec& p) const { return evaluator(x, p); }

  static PhaseSpaceSymbol constant(int dim, double c);
  // exp(-|x-xc|^2/(2 sx^2) - |p-pc|^2/(2 sp^2)).
  static PhaseSpaceSymbol gaussian(int dim, const Vec& xc, double sx, const Vec& pc, double sp);
  // a(p) only.
  static PhaseSpaceSymbol momentum_only(int dim, SpatialFn g, bool schwartz = true);
  static PhaseSpaceSymbol from_terms(int dim, std::vector<std::pair<SpatialFn, SpatialFn>> terms);
  static PhaseSpaceSymbol product(int dim, SpatialFn f, SpatialFn g);

  // Max |evaluator - sum of terms| over the sample points; 0 if no terms.
  double separable_mismatch(const std::vector<std::pair<Vec, Vec>>& samples) const;
};

}  // namespace sbl
