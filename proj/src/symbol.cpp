#include "sbl/symbol.hpp"

#include <cmath>

namespace sbl {

PhaseSpaceSymbol PhaseSpaceSymbol::from_terms(int dim, std::vector<std::pair<SpatialFn, SpatialFn>> terms) {
  PhaseSpaceSymbol a;
  a.dim = dim;
  a.separable_terms = std::move(terms);
  auto t = a.separable_terms;
  a.evaluator = [t](const Vec& x, const Vec& p) {
    double s = 0.0;
    for (const auto& [f, g] : t) s += f(x) * g(p);
    return s;
  };
  return a;
}

PhaseSpaceSymbol PhaseSpaceSymbol::product(int dim, SpatialFn f, SpatialFn g) {
  return from_terms(dim, {{std::move(f), std::move(g)}});
}

PhaseSpaceSymbol PhaseSpaceSymbol::constant(int dim, double c) {
  auto a = product(dim, [c](const Vec&) { return c; }, [](const Vec&) { return 1.0; });
  a.schwartz = false;
  return a;
}

PhaseSpaceSymbol PhaseSpaceSymbol::gaussian(int dim, const Vec& xc, double sx, const Vec& pc, double sp) {
  auto f = [dim, xc, sx](const Vec& x) {
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) r2 += (x[k] - xc[k]) * (x[k] - xc[k]);
    return std::exp(-r2 / (2.0 * sx * sx));
  };
  auto g = [dim, pc, sp](const Vec& p) {
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) r2 += (p[k] - pc[k]) * (p[k] - pc[k]);
    return std::exp(-r2 / (2.0 * sp * sp));
  };
  return product(dim, f, g);
}

PhaseSpaceSymbol PhaseSpaceSymbol::momentum_only(int dim, SpatialFn g, bool schwartz) {
  auto a = product(dim, [](const Vec&) { return 1.0; }, std::move(g));
  a.schwartz = schwartz;
  return a;
}

double PhaseSpaceSymbol::separable_mismatch(const std::vector<std::pair<Vec, Vec>>& samples) const {
  if (separable_terms.empty()) return 0.0;
  double worst = 0.0;
  for (const auto& [x, p] : samples) {
    double s = 0.0;
    for (const auto& [f, g] : separable_terms) s += f(x) * g(p);
    worst = std::max(worst, std::abs(s - evaluator(x, p)));
  }
  return worst;
}

}  // namespace sbl
