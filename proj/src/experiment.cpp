#include "sbl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "sbl/error.hpp"
#include "sbl/kinetics.hpp"
#include "sbl/medium.hpp"
#include "sbl/propagator.hpp"
#include "sbl/quantization.hpp"
#include "sbl/rng.hpp"

namespace sbl {

namespace {

constexpr double kPi = std::numbers::pi;

nlohmann::json vec_json(const Vec& v) { return nlohmann::json::array({v[0], v[1], v[2]}); }

Vec vec_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() > 3) throw IoError("expected an array of at most 3 numbers");
  Vec v{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

template <class T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<double> KernelSpec::speeds() const {
  if (speed_count < 2 || !(speed_min > 0.0) || !(speed_max > speed_min))
    throw DomainError("kernel speeds: need 0 < speed_min < speed_max and at least two speeds");
  std::vector<double> s(speed_count);
  for (std::size_t i = 0; i < speed_count; ++i)
    s[i] = speed_min + (speed_max - speed_min) * static_cast<double>(i) / static_cast<double>(speed_count - 1);
  return s;
}

std::string ExperimentConfig::regime() const { return dim == 3 ? "theorem" : "heuristic"; }

void ExperimentConfig::validate() const {
  if (dim < 1 || dim > 3) throw DomainError("experiment: dim must be 1, 2 or 3");
  if (hbar_list.empty()) throw DomainError("experiment: empty hbar list");
  for (double h : hbar_list)
    if (!(h > 0.0)) throw DomainError("experiment: hbar must be positive");
  if (!(rho >= 0.0) || !(lambda >= 0.0) || !(t >= 0.0)) throw DomainError("experiment: rho, lambda, t must be >= 0");
  if (!(symbol.sx > 0.0) || !(symbol.sp > 0.0)) throw DomainError("experiment: symbol widths must be positive");
  if (realizations == 0) throw DomainError("experiment: need at least one realisation");
  if (!(grid.length > 0.0) || grid.points < 2 || (grid.points & (grid.points - 1)) != 0)
    throw DomainError("experiment: grid points must be a power of two");
  if (boltzmann.paths == 0) throw DomainError("experiment: need at least one Boltzmann path");
  family_from_name(state.family);
  kernel.speeds();
  if (estimated_cost() > cost_budget)
    throw ResourceError("experiment: estimated cost " + std::to_string(estimated_cost()) + " exceeds budget " +
                        std::to_string(cost_budget));
}

double ExperimentConfig::estimated_cost() const {
  const double n = std::pow(static_cast<double>(grid.points), dim);
  const double fft = 5.0 * n * std::log2(std::max(n, 2.0));
  double per_hbar_total = 0.0;
  for (double h : hbar_list) {
    const double pmax = kPi * h * static_cast<double>(grid.points) / grid.length;
    double step = h / (pmax * pmax);
    if (dt > 0.0) step = std::min(step, dt);
    const double steps = std::ceil(t / step) + 1.0;
    // momentum nodes where the symbol is above 1e-16 of its peak
    const double sigma = std::sqrt(h / 2.0);
    const double side = 2.0 * (8.6 * symbol.sp) / sigma + 1.0;
    const double nodes = std::pow(side, dim);
    per_hbar_total += static_cast<double>(realizations) * (steps * 2.0 * fft + nodes * (fft + 4.0 * n));
  }
  return per_hbar_total + 200.0 * static_cast<double>(boltzmann.paths) * static_cast<double>(hbar_list.size());
}

std::uint64_t default_seed() {
  if (const char* s = std::getenv("SBL_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end && *end == '\0' && end != s) return v;
    throw DomainError("SBL_SEED must be an unsigned integer");
  }
  return 1;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["dim"] = c.dim;
  j["hbar_list"] = c.hbar_list;
  j["rho"] = c.rho;
  j["lambda"] = c.lambda;
  j["t"] = c.t;
  j["symbol"] = {{"xc", vec_json(c.symbol.xc)}, {"sx", c.symbol.sx}, {"pc", vec_json(c.symbol.pc)}, {"sp", c.symbol.sp}};
  j["state"] = {{"family", c.state.family},
                {"x0", vec_json(c.state.x0)},
                {"p0", vec_json(c.state.p0)},
                {"profile_width", c.state.profile_width}};
  j["realizations"] = c.realizations;
  j["grid"] = {{"length", c.grid.length}, {"points", c.grid.points}};
  j["dt"] = c.dt;
  j["kernel"] = {{"born_order", c.kernel.born_order},   {"speed_min", c.kernel.speed_min},
                 {"speed_max", c.kernel.speed_max},     {"speed_count", c.kernel.speed_count},
                 {"angle_intervals", c.kernel.angle_intervals}, {"gammas", c.kernel.gammas}};
  j["boltzmann"] = {{"paths", c.boltzmann.paths}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["cost_budget"] = c.cost_budget;
  return j;
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.seed = default_seed();
  try {
    get_if(j, "dim", c.dim);
    get_if(j, "hbar_list", c.hbar_list);
    get_if(j, "rho", c.rho);
    get_if(j, "lambda", c.lambda);
    get_if(j, "t", c.t);
    if (j.contains("symbol")) {
      const auto& s = j.at("symbol");
      if (s.contains("xc")) c.symbol.xc = vec_from(s.at("xc"));
      if (s.contains("pc")) c.symbol.pc = vec_from(s.at("pc"));
      get_if(s, "sx", c.symbol.sx);
      get_if(s, "sp", c.symbol.sp);
    }
    if (j.contains("state")) {
      const auto& s = j.at("state");
      get_if(s, "family", c.state.family);
      if (s.contains("x0")) c.state.x0 = vec_from(s.at("x0"));
      if (s.contains("p0")) c.state.p0 = vec_from(s.at("p0"));
      get_if(s, "profile_width", c.state.profile_width);
    }
    get_if(j, "realizations", c.realizations);
    if (j.contains("grid")) {
      get_if(j.at("grid"), "length", c.grid.length);
      get_if(j.at("grid"), "points", c.grid.points);
    }
    get_if(j, "dt", c.dt);
    if (j.contains("kernel")) {
      const auto& k = j.at("kernel");
      get_if(k, "born_order", c.kernel.born_order);
      get_if(k, "speed_min", c.kernel.speed_min);
      get_if(k, "speed_max", c.kernel.speed_max);
      get_if(k, "speed_count", c.kernel.speed_count);
      get_if(k, "angle_intervals", c.kernel.angle_intervals);
      get_if(k, "gammas", c.kernel.gammas);
    }
    if (j.contains("boltzmann")) get_if(j.at("boltzmann"), "paths", c.boltzmann.paths);
    get_if(j, "seed", c.seed);
    get_if(j, "threads", c.threads);
    get_if(j, "cost_budget", c.cost_budget);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return experiment_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("experiment config " + path + ": " + e.what());
  }
}

PhaseSpaceSymbol make_symbol(int dim, const SymbolSpec& s) { return PhaseSpaceSymbol::gaussian(dim, s.xc, s.sx, s.pc, s.sp); }

PhaseSpaceSymbol antiwick_weyl_equivalent(int dim, const SymbolSpec& s, double hbar) {
  const double vx = s.sx * s.sx + 0.5 * hbar, vp = s.sp * s.sp + 0.5 * hbar;
  const double amp = std::pow(s.sx * s.sp / std::sqrt(vx * vp), dim);
  const PhaseSpaceSymbol g = PhaseSpaceSymbol::gaussian(dim, s.xc, std::sqrt(vx), s.pc, std::sqrt(vp));
  std::vector<std::pair<SpatialFn, SpatialFn>> terms;
  for (const auto& [f, h] : g.separable_terms) terms.emplace_back([f, amp](const Vec& x) { return amp * f(x); }, h);
  return PhaseSpaceSymbol::from_terms(dim, std::move(terms));
}

namespace {

SemiclassicalState initial_state(const ExperimentConfig& cfg, double hbar, const Grid& g) {
  const Family fam = family_from_name(cfg.state.family);
  StateParams params;
  params.x0 = cfg.state.x0;
  params.p0 = cfg.state.p0;
  const ProfileFunction w = ProfileFunction::gaussian(cfg.dim, cfg.state.profile_width, 1.0, cfg.state.x0);
  return make_state(fam, w, params, hbar, g);
}

double one_realization(const ExperimentConfig& cfg, double hbar, const Grid& g, const SemiclassicalState& psi0,
                       const PhaseSpaceSymbol& a, std::uint64_t seed) {
  SemiclassicalState psi = psi0;
  if (cfg.t > 0.0) {
    PropagatorConfig pc;
    pc.lambda = cfg.lambda;
    pc.t_final = cfg.t;
    pc.hbar = hbar;
    pc.dt = cfg.dt;
    PotentialField W;
    if (cfg.lambda > 0.0 && cfg.rho > 0.0) {
      W = build_potential(sample_realization(cfg.rho, hbar, cfg.dim, g.box, seed), g, hbar);
    } else {
      W.grid = g;
      W.hbar = hbar;
      W.values.assign(g.size(), 0.0);
      pc.lambda = 0.0;
    }
    if (!(pc.dt > 0.0)) pc.dt = plan_steps(g, hbar, pc.lambda, W.max(), cfg.t, cfg.t).suggested_dt;
    psi = evolve(psi0, W, pc);
  }
  return antiwick_pair(a, psi);
}

}  // namespace

std::vector<AnnealedPoint> run_annealed(const ExperimentConfig& cfg) {
  cfg.validate();
  const PhaseSpaceSymbol a = make_symbol(cfg.dim, cfg.symbol);
  std::vector<AnnealedPoint> out;
  for (std::size_t ih = 0; ih < cfg.hbar_list.size(); ++ih) {
    const auto t0 = std::chrono::steady_clock::now();
    const double hbar = cfg.hbar_list[ih];
    const Grid g = Grid::cube(cfg.dim, cfg.grid.length, cfg.grid.points);
    const SemiclassicalState psi0 = initial_state(cfg, hbar, g);
    const std::size_t M = cfg.realizations;
    std::vector<double> samples(M, std::numeric_limits<double>::quiet_NaN());
    auto work = [&](std::size_t m) {
      try {
        samples[m] = one_realization(cfg, hbar, g, psi0, a, derive_seed(derive_seed(cfg.seed, ih), m));
      } catch (const Error&) {
        // counted below; the remaining realisations still contribute
      }
    };
    const unsigned nt = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(M)));
    if (nt == 1) {
      for (std::size_t m = 0; m < M; ++m) work(m);
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < nt; ++w)
        pool.emplace_back([&, w] {
          for (std::size_t m = w; m < M; m += nt) work(m);
        });
      for (auto& th : pool) th.join();
    }
    AnnealedPoint p;
    p.hbar = hbar;
    p.samples = samples;
    double s = 0.0, s2 = 0.0;
    for (double v : samples)
      if (std::isfinite(v)) {
        ++p.ok;
        s += v;
      }
    p.failed = M - p.ok;
    if (p.ok == 0) throw AccuracyError("run_annealed: every realisation failed at hbar " + std::to_string(hbar));
    p.mean = s / static_cast<double>(p.ok);
    for (double v : samples)
      if (std::isfinite(v)) s2 += (v - p.mean) * (v - p.mean);
    p.stderr_ = p.ok > 1 ? std::sqrt(s2 / static_cast<double>(p.ok - 1) / static_cast<double>(p.ok)) : 0.0;
    p.runtime_seconds = seconds_since(t0);
    out.push_back(std::move(p));
  }
  return out;
}

OnShellAmplitude experiment_table(const ExperimentConfig& cfg) {
  return build_onshell_table(cfg.dim, cfg.lambda, cfg.kernel.born_order, cfg.kernel.speeds(), cfg.kernel.angle_intervals,
                             cfg.kernel.gammas);
}

BoltzmannPoint boltzmann_side(const ExperimentConfig& cfg, double hbar, const CollisionKernelData& kernel) {
  const Family fam = family_from_name(cfg.state.family);
  const std::uint64_t seed = derive_seed(cfg.seed ^ 0x5bd1e995ULL, static_cast<std::uint64_t>(std::llround(hbar * 1e9)));
  BoltzmannPoint b;
  if (fam == Family::coherent) {
    // Finite-hbar comparison: Wigner function of the coherent state against the
    // smoothed symbol, which reproduces the anti-Wick pairing exactly when lambda = 0.
    const PhaseSpaceSymbol a = antiwick_weyl_equivalent(cfg.dim, cfg.symbol, hbar);
    const InitialSampler base = coherent_wigner_sampler(cfg.dim, cfg.state.x0, cfg.state.p0, hbar);
    const bool scatter = kernel.rho > 0.0;
    const double lo = kernel.min_speed(), hi = kernel.max_speed();
    const int dim = cfg.dim;
    const Vec p0 = cfg.state.p0;
    InitialSampler sampler = [base, scatter, lo, hi, dim, p0](std::mt19937_64& rng) {
      MeasureAtom at = base(rng);
      const double s = std::sqrt(norm2(at.p, dim));
      if (scatter && (s < lo || s > hi)) {
        // dropped; parked on the mean momentum so the path stays inside the table
        at.weight = 0.0;
        at.p = p0;
      }
      return at;
    };
    const KineticResult r = kmc_estimate(sampler, 1.0, a, cfg.t, kernel, cfg.boltzmann.paths, seed, +1);
    // Excluded mass: probability that a gaussian momentum leaves [lo, hi], by sampling.
    if (scatter) {
      std::mt19937_64 rng(derive_seed(seed, 7));
      std::size_t out = 0;
      const std::size_t n = 200000;
      for (std::size_t i = 0; i < n; ++i)
        if (sampler(rng).weight == 0.0) ++out;
      b.excluded_mass = static_cast<double>(out) / static_cast<double>(n);
    }
    b.value = r.value;
    b.error = r.mc_stderr + b.excluded_mass;
    return b;
  }
  StateParams params;
  params.x0 = cfg.state.x0;
  params.p0 = cfg.state.p0;
  const ProfileFunction w = ProfileFunction::gaussian(cfg.dim, cfg.state.profile_width, 1.0, cfg.state.x0);
  const WignerMeasure mu = limiting_measure(fam, w, params);
  const KineticResult r = kmc_estimate(mu, make_symbol(cfg.dim, cfg.symbol), cfg.t, kernel, cfg.boltzmann.paths, seed, +1);
  b.value = r.value;
  b.error = r.mc_stderr;
  return b;
}

std::vector<ComparisonRow> combine(const std::vector<AnnealedPoint>& q, const std::vector<BoltzmannPoint>& b) {
  if (q.size() != b.size()) throw DomainError("combine: size mismatch");
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < q.size(); ++i) {
    ComparisonRow r;
    r.hbar = q[i].hbar;
    r.quantum_mean = q[i].mean;
    r.quantum_stderr = q[i].stderr_;
    r.boltzmann_value = b[i].value;
    r.boltzmann_error = b[i].error;
    r.abs_gap = std::abs(r.quantum_mean - r.boltzmann_value);
    r.runtime_seconds = q[i].runtime_seconds;
    rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& x, const ComparisonRow& y) { return x.hbar > y.hbar; });
  return rows;
}

std::vector<ComparisonRow> run_comparison(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  CollisionKernelData kernel;
  if (cfg.rho > 0.0 && cfg.lambda > 0.0) {
    kernel = collision_kernel(experiment_table(cfg), cfg.rho);
  } else {
    // No scattering: an empty kernel gives pure transport.
    kernel = collision_kernel(first_born_table(cfg.dim, 0.0, cfg.kernel.speeds(), cfg.kernel.angle_intervals), 0.0);
  }
  const double table_seconds = seconds_since(t0);
  const auto q = run_annealed(cfg);
  std::vector<BoltzmannPoint> b;
  for (const auto& p : q) b.push_back(boltzmann_side(cfg, p.hbar, kernel));
  auto rows = combine(q, b);
  for (auto& r : rows) r.runtime_seconds += table_seconds / static_cast<double>(rows.size());
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows, bool with_runtime) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "hbar,quantum_mean,quantum_stderr,boltzmann_value,boltzmann_error,abs_gap";
  if (with_runtime) os << ",runtime_seconds";
  os << '\n';
  for (const auto& r : rows) {
    os << r.hbar << ',' << r.quantum_mean << ',' << r.quantum_stderr << ',' << r.boltzmann_value << ','
       << r.boltzmann_error << ',' << r.abs_gap;
    if (with_runtime) os << ',' << r.runtime_seconds;
    os << '\n';
  }
  return os.str();
}

nlohmann::json comparison_report(const ExperimentConfig& cfg, const std::vector<ComparisonRow>& rows) {
  nlohmann::json j;
  j["config"] = to_json(cfg);
  const std::string dump = j["config"].dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream hs;
  hs << std::hex << std::setw(16) << std::setfill('0') << h;
  j["config_hash"] = hs.str();
  j["regime"] = cfg.regime();
  j["seed"] = cfg.seed;
  j["version"] = "0.1.0";
  nlohmann::json r = nlohmann::json::array();
  for (const auto& row : rows)
    r.push_back({{"hbar", row.hbar},
                 {"quantum_mean", row.quantum_mean},
                 {"quantum_stderr", row.quantum_stderr},
                 {"boltzmann_value", row.boltzmann_value},
                 {"boltzmann_error", row.boltzmann_error},
                 {"abs_gap", row.abs_gap},
                 {"runtime_seconds", row.runtime_seconds}});
  j["rows"] = r;
  return j;
}

}  // namespace sbl
