#include "sbl/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "sbl/error.hpp"
#include "sbl/quadrature.hpp"
#include "sbl/rng.hpp"

namespace sbl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

OrderRule default_rule(int dim, int n, bool refined) {
  // Order n contributes at most (t Sigma)^n / n! so later orders get smaller rules.
  static const OrderRule d3_fine[] = {{24, 24, 12}, {12, 12, 6}, {8, 8, 3}, {6, 6, 2}, {4, 4, 2}};
  static const OrderRule d3_coarse[] = {{16, 16, 8}, {10, 10, 4}, {6, 6, 2}, {4, 4, 2}, {3, 3, 1}};
  static const OrderRule d2_fine[] = {{64, 0, 12}, {32, 0, 6}, {16, 0, 4}, {12, 0, 3}, {8, 0, 2}};
  static const OrderRule d2_coarse[] = {{48, 0, 8}, {24, 0, 4}, {12, 0, 3}, {8, 0, 2}, {6, 0, 2}};
  static const OrderRule d1_fine[] = {{2, 0, 16}, {2, 0, 10}, {2, 0, 8}, {2, 0, 6}, {2, 0, 5}};
  static const OrderRule d1_coarse[] = {{2, 0, 10}, {2, 0, 6}, {2, 0, 5}, {2, 0, 4}, {2, 0, 3}};
  const std::size_t i = static_cast<std::size_t>(std::min(n, 5) - 1);
  switch (dim) {
    case 1: return refined ? d1_fine[i] : d1_coarse[i];
    case 2: return refined ? d2_fine[i] : d2_coarse[i];
    default: return refined ? d3_fine[i] : d3_coarse[i];
  }
}

struct ShellNodes {
  std::vector<Vec> dir;
  std::vector<double> w;
};

// Orthonormal frame with e as first axis.
void frame(const Vec& e, int dim, Vec& e1, Vec& e2) {
  e1 = Vec{0.0, 0.0, 0.0};
  e2 = Vec{0.0, 0.0, 0.0};
  if (dim == 2) {
    e1 = Vec{-e[1], e[0], 0.0};
    return;
  }
  if (dim != 3) return;
  const Vec trial = std::abs(e[0]) < 0.9 ? Vec{1.0, 0.0, 0.0} : Vec{0.0, 1.0, 0.0};
  const double c = dot(trial, e, 3);
  e1 = Vec{trial[0] - c * e[0], trial[1] - c * e[1], trial[2] - c * e[2]};
  const double n = std::sqrt(norm2(e1, 3));
  for (double& v : e1) v /= n;
  e2 = Vec{e[1] * e1[2] - e[2] * e1[1], e[2] * e1[0] - e[0] * e1[2], e[0] * e1[1] - e[1] * e1[0]};
}

ShellNodes shell_nodes(int dim, const Vec& e, const OrderRule& r) {
  ShellNodes s;
  Vec e1, e2;
  frame(e, dim, e1, e2);
  if (dim == 1) {
    s.dir = {e, Vec{-e[0], 0.0, 0.0}};
    s.w = {1.0, 1.0};
  } else if (dim == 2) {
    for (std::size_t j = 0; j < r.polar; ++j) {
      const double th = kTwoPi * j / r.polar;
      s.dir.push_back(Vec{std::cos(th) * e[0] + std::sin(th) * e1[0], std::cos(th) * e[1] + std::sin(th) * e1[1], 0.0});
      s.w.push_back(kTwoPi / r.polar);
    }
  } else {
    const quad::Rule gl = quad::gauss_legendre(r.polar, -1.0, 1.0);
    for (std::size_t i = 0; i < gl.size(); ++i) {
      const double u = gl.x[i], sn = std::sqrt(std::max(0.0, 1.0 - u * u));
      for (std::size_t j = 0; j < r.azimuth; ++j) {
        const double ph = kTwoPi * (j + 0.5) / r.azimuth;
        const double c = sn * std::cos(ph), d = sn * std::sin(ph);
        s.dir.push_back(Vec{u * e[0] + c * e1[0] + d * e2[0], u * e[1] + c * e1[1] + d * e2[1],
                            u * e[2] + c * e1[2] + d * e2[2]});
        s.w.push_back(gl.w[i] * kTwoPi / r.azimuth);
      }
    }
  }
  return s;
}

struct TimeNodes {
  std::vector<std::vector<double>> tau;  // durations tau_0..tau_n per node
  std::vector<double> w;
};

// Collapsed coordinates s_1 = t v_1, s_i = s_{i-1} v_i with Jacobian t^n prod v_i^{n-i}.
TimeNodes simplex_nodes(int n, double t, std::size_t m) {
  TimeNodes out;
  const quad::Rule gl = quad::gauss_legendre(m, 0.0, 1.0);
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    std::vector<double> s(static_cast<std::size_t>(n) + 2, 0.0);
    s[0] = t;
    double w = std::pow(t, n);
    for (int i = 1; i <= n; ++i) {
      const double v = gl.x[idx[static_cast<std::size_t>(i - 1)]];
      s[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i - 1)] * v;
      w *= gl.w[idx[static_cast<std::size_t>(i - 1)]] * std::pow(v, n - i);
    }
    std::vector<double> tau(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) tau[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i)] - s[static_cast<std::size_t>(i + 1)];
    out.tau.push_back(std::move(tau));
    out.w.push_back(w);
    int k = 0;
    while (k < n && ++idx[static_cast<std::size_t>(k)] == m) idx[static_cast<std::size_t>(k++)] = 0;
    if (k == n) break;
  }
  return out;
}

double speed_of(const Vec& q, int dim) { return std::sqrt(norm2(q, dim)); }

// Sum over direction chains j_1..j_n for every time node.
double chain_integral(const PhaseSpaceSymbol& a, int n, double t, const Vec& x, const Vec& q0,
                      const CollisionKernelData& kernel, const OrderRule& rule, int sign, double cutoff) {
  const int d = kernel.dim;
  const double q = speed_of(q0, d);
  const Vec e{q0[0] / q, q0[1] / q, q0[2] / q};
  const ShellNodes sh = shell_nodes(d, e, rule);
  const std::size_t ns = sh.dir.size();
  std::vector<double> first(ns), trans(ns * ns);
  for (std::size_t j = 0; j < ns; ++j) first[j] = sh.w[j] * kernel.sigma_shell(q, dot(e, sh.dir[j], d));
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < ns; ++j)
      trans[i * ns + j] = sh.w[j] * kernel.sigma_shell(q, std::clamp(dot(sh.dir[i], sh.dir[j], d), -1.0, 1.0));
  double tmax = 0.0;
  for (double v : trans) tmax = std::max(tmax, v);
  for (double v : first) tmax = std::max(tmax, v);
  const double floor = cutoff * tmax;
  const TimeNodes tn = simplex_nodes(n, t, rule.time);
  const std::size_t nt = tn.w.size();

  double total = 0.0;
  std::vector<std::size_t> chain(static_cast<std::size_t>(n));
  std::vector<double> weight(static_cast<std::size_t>(n) + 1, 1.0);
  std::vector<Vec> pos(static_cast<std::size_t>(n) + 1);
  std::vector<std::vector<Vec>> partial(static_cast<std::size_t>(n) + 1, std::vector<Vec>(nt));
  for (std::size_t k = 0; k < nt; ++k) {
    const double s = sign * tn.tau[k][0];
    partial[0][k] = Vec{x[0] + s * q0[0], x[1] + s * q0[1], x[2] + s * q0[2]};
  }
  // Depth-first over the chain; partial[i][k] is the position after segment i at time node k.
  std::function<void(int)> walk = [&](int depth) {
    const std::size_t di = static_cast<std::size_t>(depth);
    for (std::size_t j = 0; j < ns; ++j) {
      const double kw = depth == 1 ? first[j] : trans[chain[di - 2] * ns + j];
      if (kw <= floor) continue;
      chain[di - 1] = j;
      weight[di] = weight[di - 1] * kw;
      const Vec qj{q * sh.dir[j][0], q * sh.dir[j][1], q * sh.dir[j][2]};
      for (std::size_t k = 0; k < nt; ++k) {
        const double s = sign * tn.tau[k][di];
        const Vec& p = partial[di - 1][k];
        partial[di][k] = Vec{p[0] + s * qj[0], p[1] + s * qj[1], p[2] + s * qj[2]};
      }
      if (depth < n) {
        walk(depth + 1);
      } else {
        double acc = 0.0;
        for (std::size_t k = 0; k < nt; ++k) acc += tn.w[k] * a(partial[di][k], qj);
        total += weight[di] * acc;
      }
    }
  };
  walk(1);
  return total;
}

}  // namespace

OrderRule CollisionSeriesConfig::rule(int dim, int n, bool refined) const {
  const std::vector<OrderRule>& v = refined ? fine : coarse;
  const std::size_t i = static_cast<std::size_t>(n - 1);
  if (i < v.size()) return v[i];
  return default_rule(dim, n, refined);
}

nlohmann::json CollisionSeriesConfig::to_json() const {
  auto rules = [](const std::vector<OrderRule>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const OrderRule& r : v) a.push_back({r.polar, r.azimuth, r.time});
    return a;
  };
  return {{"n_max", n_max},
          {"fine", rules(fine)},
          {"coarse", rules(coarse)},
          {"tail_constant", tail_constant},
          {"observable_sup", observable_sup},
          {"tail_tolerance", tail_tolerance},
          {"quad_tolerance", quad_tolerance},
          {"transport_sign", transport_sign},
          {"branch_cutoff", branch_cutoff}};
}

double collision_term(const PhaseSpaceSymbol& a, int n, double t, const Vec& x, const Vec& q0,
                      const CollisionKernelData& kernel, const CollisionSeriesConfig& cfg, double* quad_error) {
  if (n < 0) throw DomainError("collision_term: n must be non-negative");
  if (!(t >= 0.0)) throw DomainError("collision_term: t must be non-negative");
  if (cfg.transport_sign != 1 && cfg.transport_sign != -1) throw DomainError("collision_term: transport_sign must be +-1");
  const int d = kernel.dim;
  const double q = speed_of(q0, d);
  const double sign = cfg.transport_sign;
  if (quad_error) *quad_error = 0.0;
  if (kernel.rho == 0.0) {
    if (n > 0) return 0.0;
    return a(Vec{x[0] + sign * t * q0[0], x[1] + sign * t * q0[1], x[2] + sign * t * q0[2]}, q0);
  }
  // Every q_i shares |q0|, so the loss factors combine into one exponential.
  const double damp = std::exp(-t * kernel.sigma_tot(q));
  if (n == 0) return damp * a(Vec{x[0] + sign * t * q0[0], x[1] + sign * t * q0[1], x[2] + sign * t * q0[2]}, q0);
  if (!(q > 0.0)) throw DomainError("collision_term: q0 must be nonzero");
  if (t == 0.0) return 0.0;
  const double fine =
      damp * chain_integral(a, n, t, x, q0, kernel, cfg.rule(d, n, true), cfg.transport_sign, cfg.branch_cutoff);
  const double coarse =
      damp * chain_integral(a, n, t, x, q0, kernel, cfg.rule(d, n, false), cfg.transport_sign, cfg.branch_cutoff);
  const double err = std::abs(fine - coarse);
  if (err > cfg.quad_tolerance)
    throw AccuracyError("collision_term: order " + std::to_string(n) + " refinement changed the value by " +
                        std::to_string(err));
  if (quad_error) *quad_error = err;
  return fine;
}

double tail_bound(int n, double t, double c2, double sup_a) {
  return std::exp(n * std::log(t * c2) - std::lgamma(n + 1.0)) * sup_a;
}

int suggested_n_max(double t, double c2, double sup_a, double tol) {
  if (t * c2 == 0.0) return 0;
  for (int n = 0; n < 200; ++n)
    if (tail_bound(n + 1, t, c2, sup_a) < tol) return n;
  return 200;
}

AdjointEvolved::AdjointEvolved(PhaseSpaceSymbol a, double t, const CollisionKernelData& kernel,
                               CollisionSeriesConfig cfg)
    : a_(std::move(a)), t_(t), kernel_(&kernel), cfg_(std::move(cfg)) {
  if (cfg_.n_max < 0) throw DomainError("adjoint_evolve: n_max must be non-negative");
  double c2 = cfg_.tail_constant;
  if (c2 <= 0.0)
    for (double s : kernel.sigma_tot_nodes) c2 = std::max(c2, s);
  tail_ = c2 == 0.0 ? 0.0 : tail_bound(cfg_.n_max + 1, t, c2, cfg_.observable_sup);
  if (tail_ >= cfg_.tail_tolerance) {
    const int n = suggested_n_max(t, c2, cfg_.observable_sup, cfg_.tail_tolerance);
    throw TruncationError("adjoint_evolve: tail bound " + std::to_string(tail_) + " exceeds tolerance; use n_max " +
                              std::to_string(n),
                          n);
  }
}

SeriesValue AdjointEvolved::evaluate(const Vec& x, const Vec& p) const {
  SeriesValue out;
  for (int n = 0; n <= cfg_.n_max; ++n) {
    double err = 0.0;
    const double v = collision_term(a_, n, t_, x, p, *kernel_, cfg_, &err);
    out.terms.push_back(v);
    out.value += v;
    out.quad_error += err;
  }
  if (kernel_->rho > 0.0 && t_ > 0.0) {
    // Poisson tail: the probability of more than n_max collisions.
    const double m = t_ * kernel_->sigma_tot(speed_of(p, kernel_->dim));
    double term = std::exp(-m), cdf = 0.0;
    for (int n = 0; n <= cfg_.n_max; ++n) {
      cdf += term;
      term *= m / (n + 1);
    }
    out.truncation_error = std::max(0.0, 1.0 - cdf) * cfg_.observable_sup;
  }
  return out;
}

AdjointEvolved adjoint_evolve(const PhaseSpaceSymbol& a, double t, const CollisionKernelData& kernel,
                              const CollisionSeriesConfig& cfg) {
  return AdjointEvolved(a, t, kernel, cfg);
}

nlohmann::json to_json(const KineticResult& r) {
  return {{"value", r.value},     {"series_error", r.series_error}, {"mc_stderr", r.mc_stderr},
          {"n_max", r.n_max},     {"n_paths", r.n_paths},           {"config_hash", r.config_hash}};
}

std::string hash_config(const nlohmann::json& j) {
  // FNV-1a over the canonical dump.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<MeasureAtom> measure_atoms(const WignerMeasure& mu, std::size_t stride) {
  using K = WignerMeasure::Kind;
  std::vector<MeasureAtom> out;
  if (stride == 0) stride = 1;
  auto on_stride = [stride](const Grid& g, std::size_t i) {
    const auto ix = g.unflatten(i);
    for (int k = 0; k < g.dim; ++k)
      if (ix[static_cast<std::size_t>(k)] % stride != 0) return false;
    return true;
  };
  const double scale = std::pow(static_cast<double>(stride), mu.dim);
  switch (mu.kind) {
    case K::point_mass:
      if (mu.weight != 0.0) out.push_back({mu.x0, mu.p0, mu.weight});
      break;
    case K::density_times_momentum_delta:
    case K::wkb_graph:
    case K::position_delta_times_density: {
      if (mu.kind == K::wkb_graph && !mu.grad_phase) throw UnsupportedError("wkb measure without phase gradient");
      const Grid& g = mu.kind == K::position_delta_times_density ? mu.pgrid : mu.grid;
      for_each_point(g, [&](std::size_t i, const Vec& z) {
        if (mu.density[i] == 0.0 || !on_stride(g, i)) return;
        const double w = mu.density[i] * g.cell_volume() * scale;
        if (mu.kind == K::density_times_momentum_delta) out.push_back({z, mu.p0, w});
        else if (mu.kind == K::wkb_graph) out.push_back({z, mu.grad_phase(z), w});
        else out.push_back({mu.x0, z, w});
      });
      break;
    }
    case K::grid_density: {
      const std::size_t np = mu.pgrid.size();
      std::vector<Vec> pts(np);
      for_each_point(mu.pgrid, [&](std::size_t j, const Vec& p) { pts[j] = p; });
      const double vol = mu.grid.cell_volume() * mu.pgrid.cell_volume() * scale * scale;
      for_each_point(mu.grid, [&](std::size_t i, const Vec& x) {
        if (!on_stride(mu.grid, i)) return;
        for (std::size_t j = 0; j < np; ++j) {
          const double d = mu.density[i * np + j];
          if (d != 0.0 && on_stride(mu.pgrid, j)) out.push_back({x, pts[j], d * vol});
        }
      });
      break;
    }
  }
  // Drop atoms that cannot matter at double precision.
  double wmax = 0.0;
  for (const MeasureAtom& a : out) wmax = std::max(wmax, std::abs(a.weight));
  std::erase_if(out, [wmax](const MeasureAtom& a) { return std::abs(a.weight) < 1e-15 * wmax; });
  return out;
}

KineticResult pair_with_initial(const WignerMeasure& mu0, const PhaseSpaceSymbol& a, double t,
                                const CollisionKernelData& kernel, const CollisionSeriesConfig& cfg) {
  const AdjointEvolved f = adjoint_evolve(a, t, kernel, cfg);
  const std::vector<MeasureAtom> atoms = measure_atoms(mu0, 1);
  if (atoms.size() > cfg.max_atoms)
    throw ResourceError("pair_with_initial: " + std::to_string(atoms.size()) + " measure atoms exceed the limit");
  KineticResult r;
  r.n_max = cfg.n_max;
  nlohmann::json h = cfg.to_json();
  h["t"] = t;
  h["rho"] = kernel.rho;
  h["measure"] = measure_kind_name(mu0.kind);
  r.config_hash = hash_config(h);
  double err = 0.0;
  std::vector<double> values(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const SeriesValue v = f.evaluate(atoms[i].x, atoms[i].p);
    values[i] = v.value;
    r.value += atoms[i].weight * v.value;
    err += std::abs(atoms[i].weight) * v.error();
  }
  if (atoms.size() > 1 && mu0.kind != WignerMeasure::Kind::point_mass) {
    // Measure discretisation: compare with the stride-2 subset of the same atoms.
    double coarse = 0.0;
    const std::vector<MeasureAtom> sub = measure_atoms(mu0, 2);
    std::size_t k = 0;
    for (const MeasureAtom& s : sub) {
      while (k < atoms.size() && !(atoms[k].x == s.x && atoms[k].p == s.p)) ++k;
      if (k == atoms.size()) break;
      coarse += s.weight * values[k];
    }
    err += std::abs(r.value - coarse);
  }
  r.series_error = err;
  return r;
}

// ---------------------------------------------------------------- KMC

namespace {

struct ShellSampler {
  int dim;
  double speed;
  double sigma_tot;
  double bound;  // envelope for rejection in cos(angle)
  double forward_prob = 0.5;  // d = 1
};

ShellSampler make_shell_sampler(const CollisionKernelData& k, double speed) {
  ShellSampler s{k.dim, speed, k.sigma_tot(speed), 0.0};
  if (k.dim == 1) {
    const double f = k.sigma_shell(speed, 1.0), b = k.sigma_shell(speed, -1.0);
    s.forward_prob = f + b > 0.0 ? f / (f + b) : 0.5;
    return s;
  }
  for (int i = 0; i <= 256; ++i) s.bound = std::max(s.bound, k.sigma_shell(speed, -1.0 + i / 128.0));
  for (double u : k.table.angles) s.bound = std::max(s.bound, k.sigma_shell(speed, u));
  s.bound *= 1.05;
  return s;
}

Vec new_direction(const CollisionKernelData& k, const ShellSampler& s, const Vec& e, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (s.dim == 1) return unif(rng) < s.forward_prob ? e : Vec{-e[0], 0.0, 0.0};
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    if (s.dim == 2) {
      const double th = kTwoPi * unif(rng);
      const double u = std::cos(th);
      if (unif(rng) * s.bound <= k.sigma_shell(s.speed, u)) {
        const double sn = std::sin(th);
        return Vec{u * e[0] - sn * e[1], sn * e[0] + u * e[1], 0.0};
      }
    } else {
      const double u = -1.0 + 2.0 * unif(rng);
      const double val = k.sigma_shell(s.speed, u);
      if (val > s.bound) throw AccuracyError("kmc: rejection envelope exceeded");
      if (unif(rng) * s.bound <= val) {
        Vec e1, e2;
        frame(e, 3, e1, e2);
        const double ph = kTwoPi * unif(rng), sn = std::sqrt(std::max(0.0, 1.0 - u * u));
        const double c = sn * std::cos(ph), d = sn * std::sin(ph);
        Vec v{u * e[0] + c * e1[0] + d * e2[0], u * e[1] + c * e1[1] + d * e2[1], u * e[2] + c * e1[2] + d * e2[2]};
        const double n = std::sqrt(norm2(v, 3));
        for (double& x : v) x /= n;
        return v;
      }
    }
  }
  throw AccuracyError("kmc: rejection sampling did not accept");
}

JumpPath run_path(const Vec& x, const Vec& q0, double t, const CollisionKernelData& kernel, int sign,
                  const ShellSampler& sh, std::mt19937_64& rng) {
  const int d = kernel.dim;
  JumpPath path;
  path.momenta.push_back(q0);
  const double q = speed_of(q0, d);
  Vec pos = x;
  Vec e{q0[0] / q, q0[1] / q, q0[2] / q};
  double remaining = t;
  std::exponential_distribution<double> clock(sh.sigma_tot > 0.0 ? sh.sigma_tot : 1.0);
  Vec cur = q0;
  while (true) {
    const double tau = sh.sigma_tot > 0.0 ? clock(rng) : INFINITY;
    const double step = std::min(tau, remaining);
    for (int k = 0; k < 3; ++k) pos[static_cast<std::size_t>(k)] += sign * step * cur[static_cast<std::size_t>(k)];
    if (tau >= remaining) break;
    remaining -= tau;
    path.jump_times.push_back(remaining);
    e = new_direction(kernel, sh, e, rng);
    cur = Vec{q * e[0], q * e[1], q * e[2]};
    path.momenta.push_back(cur);
  }
  path.end_position = pos;
  return path;
}

}  // namespace

JumpPath sample_path(const Vec& x, const Vec& q0, double t, const CollisionKernelData& kernel, int transport_sign,
                     std::mt19937_64& rng) {
  const double q = speed_of(q0, kernel.dim);
  if (!(q > 0.0)) throw DomainError("sample_path: q0 must be nonzero");
  if (kernel.rho == 0.0) {
    JumpPath p;
    p.momenta.push_back(q0);
    p.end_position = Vec{x[0] + transport_sign * t * q0[0], x[1] + transport_sign * t * q0[1],
                         x[2] + transport_sign * t * q0[2]};
    return p;
  }
  return run_path(x, q0, t, kernel, transport_sign, make_shell_sampler(kernel, q), rng);
}

KineticResult kmc_estimate(const InitialSampler& sampler, double mass, const PhaseSpaceSymbol& a, double t,
                           const CollisionKernelData& kernel, std::uint64_t n_paths, std::uint64_t seed,
                           int transport_sign) {
  if (n_paths < 2) throw DomainError("kmc_estimate: need at least two paths");
  if (transport_sign != 1 && transport_sign != -1) throw DomainError("kmc_estimate: transport_sign must be +-1");
  constexpr std::uint64_t kChunk = 1024;
  double mean = 0.0, m2 = 0.0;
  std::uint64_t count = 0;
  // Reuse the shell sampler while consecutive paths share a speed (point masses, delta-in-p measures).
  double cached_speed = -1.0;
  ShellSampler sh{kernel.dim, 0.0, 0.0, 0.0};
  for (std::uint64_t c = 0; c * kChunk < n_paths; ++c) {
    std::mt19937_64 rng(derive_seed(seed, c));
    const std::uint64_t end = std::min(n_paths, (c + 1) * kChunk);
    for (std::uint64_t i = c * kChunk; i < end; ++i) {
      const MeasureAtom start = sampler(rng);
      double v;
      if (kernel.rho == 0.0) {
        v = a(Vec{start.x[0] + transport_sign * t * start.p[0], start.x[1] + transport_sign * t * start.p[1],
                  start.x[2] + transport_sign * t * start.p[2]},
              start.p);
      } else {
        const double q = speed_of(start.p, kernel.dim);
        if (q != cached_speed) {
          sh = make_shell_sampler(kernel, q);
          cached_speed = q;
        }
        const JumpPath p = run_path(start.x, start.p, t, kernel, transport_sign, sh, rng);
        v = a(p.end_position, p.momenta.back());
      }
      v *= start.weight;
      ++count;
      const double delta = v - mean;
      mean += delta / static_cast<double>(count);
      m2 += delta * (v - mean);
    }
  }
  KineticResult r;
  r.value = mass * mean;
  r.mc_stderr = std::abs(mass) * std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
  r.n_paths = n_paths;
  nlohmann::json h{{"t", t}, {"rho", kernel.rho}, {"seed", seed}, {"n_paths", n_paths}, {"sign", transport_sign}};
  r.config_hash = hash_config(h);
  return r;
}

KineticResult kmc_estimate(const WignerMeasure& mu0, const PhaseSpaceSymbol& a, double t,
                           const CollisionKernelData& kernel, std::uint64_t n_paths, std::uint64_t seed,
                           int transport_sign) {
  const std::vector<MeasureAtom> atoms = measure_atoms(mu0, 1);
  if (atoms.empty()) throw DomainError("kmc_estimate: initial measure is empty");
  double total = 0.0;
  std::vector<double> w;
  for (const MeasureAtom& at : atoms) {
    if (at.weight < 0.0) throw UnsupportedError("kmc_estimate: initial measure has negative weights");
    w.push_back(at.weight);
    total += at.weight;
  }
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  InitialSampler sampler = [&](std::mt19937_64& rng) {
    MeasureAtom a = atoms.size() == 1 ? atoms[0] : atoms[pick(rng)];
    a.weight = 1.0;
    return a;
  };
  return kmc_estimate(sampler, total, a, t, kernel, n_paths, seed, transport_sign);
}

InitialSampler coherent_wigner_sampler(int dim, const Vec& x0, const Vec& p0, double hbar) {
  const double s = std::sqrt(0.5 * hbar);
  return [=](std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, s);
    MeasureAtom a;
    a.x = x0;
    a.p = p0;
    for (int k = 0; k < dim; ++k) {
      a.x[static_cast<std::size_t>(k)] += g(rng);
      a.p[static_cast<std::size_t>(k)] += g(rng);
    }
    a.weight = 1.0;
    return a;
  };
}

}  // namespace sbl
