#include "sbl/propagator.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "sbl/binio.hpp"
#include "sbl/error.hpp"
#include "sbl/fft.hpp"
#include "sbl/simd.hpp"

namespace sbl {

namespace {

// e^{-i s |p|^2/(2 hbar)} / N on the FFT lattice.
Field kinetic_phase(const Grid& g, double hbar, double s) {
  Field k(g.size());
  const double inv_n = 1.0 / static_cast<double>(g.size());
  for_each_wavenumber(g, [&](std::size_t i, const Vec& kv) {
    const double p2 = hbar * hbar * norm2(kv, g.dim);
    k[i] = std::polar(inv_n, -s * p2 / (2.0 * hbar));
  });
  return k;
}

}  // namespace

SemiclassicalState free_evolve(const SemiclassicalState& psi, double t) {
  SemiclassicalState out = psi;
  if (t == 0.0) return out;
  const Field k = kinetic_phase(psi.grid, psi.hbar, t);
  fft::forward(out.grid, out.amplitude);
  simd::active().cmul(out.amplitude.data(), k.data(), k.size());
  fft::backward(out.grid, out.amplitude);
  return out;
}

StepDiagnostics plan_steps(const Grid& g, double hbar, double lambda, double w_max, double dt, double t_final) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (!(hbar > 0.0)) throw DomainError("hbar must be positive");
  StepDiagnostics d;
  d.steps = t_final == 0.0 ? 0 : static_cast<std::size_t>(std::ceil(std::abs(t_final) / dt - 1e-12));
  d.step = d.steps ? t_final / static_cast<double>(d.steps) : 0.0;
  double pmax = 0.0;
  for (int k = 0; k < g.dim; ++k)
    pmax = std::max(pmax, std::numbers::pi * hbar * static_cast<double>(g.points[k]) / g.box[k]);
  const double s = std::abs(d.step);
  d.kinetic_phase = s * pmax * pmax / (2.0 * hbar);
  d.potential_phase = s * lambda * w_max / hbar;
  double limit = 2.0 * hbar * 0.5 / (pmax * pmax);
  if (lambda * w_max > 0.0) limit = std::min(limit, 0.5 * hbar / (lambda * w_max));
  d.suggested_dt = 0.9 * limit;
  return d;
}

SemiclassicalState evolve(const SemiclassicalState& psi, const PotentialField& W, const PropagatorConfig& cfg,
                          const CheckpointSink* sink, StepDiagnostics* diag) {
  if (cfg.hbar > 0.0 && std::abs(cfg.hbar - psi.hbar) > 1e-14 * psi.hbar)
    throw DomainError("propagator hbar differs from the state's hbar");
  if (cfg.lambda < 0.0) throw DomainError("coupling must be non-negative");
  const bool has_potential = cfg.lambda != 0.0 && !W.values.empty();
  if (has_potential && !(W.grid == psi.grid)) throw DomainError("potential and state grids differ");
  const double hbar = psi.hbar;
  const double wmax = has_potential ? W.max() : 0.0;
  const StepDiagnostics d = plan_steps(psi.grid, hbar, cfg.lambda, wmax, cfg.dt, cfg.t_final);
  if (diag) *diag = d;
  if (d.kinetic_phase >= 0.5 || d.potential_phase >= 0.5)
    throw StepSizeError("time step does not resolve the kinetic/potential phase", d.suggested_dt);

  SemiclassicalState out = psi;
  if (d.steps == 0) return out;
  const Grid& g = psi.grid;
  const std::size_t n = g.size();
  const auto& K = simd::active();
  const Field kin = kinetic_phase(g, hbar, d.step);
  Field half;
  if (has_potential) {
    half.resize(n);
    const double c = -cfg.lambda * d.step / (2.0 * hbar);
    for (std::size_t i = 0; i < n; ++i) half[i] = std::polar(1.0, c * W.values[i]);
  }
  cplx* a = out.amplitude.data();
  for (std::size_t step = 1; step <= d.steps; ++step) {
    if (has_potential) K.cmul(a, half.data(), n);
    fft::forward(g, out.amplitude);
    K.cmul(a, kin.data(), n);
    fft::backward(g, out.amplitude);
    if (has_potential) K.cmul(a, half.data(), n);
    if (sink && sink->every && sink->on_snapshot && (step % sink->every == 0 || step == d.steps))
      sink->on_snapshot(step, d.step * static_cast<double>(step), out);
  }
  return out;
}

namespace {
constexpr char kCheckpointMagic[9] = "SBLCHKPT";
}

CheckpointWriter::CheckpointWriter(const std::string& path) : path_(path) {
  std::ofstream os(path_, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path_);
  binio::put_magic(os, kCheckpointMagic);
  binio::put<std::uint32_t>(os, 1);
}

void CheckpointWriter::write(double t, const SemiclassicalState& s) {
  std::ofstream os(path_, std::ios::binary | std::ios::app);
  if (!os) throw IoError("cannot append to " + path_);
  binio::put<double>(os, t);
  write_state(os, s);
}

CheckpointSink CheckpointWriter::sink(std::size_t every) {
  CheckpointSink s;
  s.every = every;
  s.on_snapshot = [this](std::size_t, double t, const SemiclassicalState& st) { write(t, st); };
  return s;
}

std::vector<std::pair<double, SemiclassicalState>> read_checkpoints(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  binio::expect_magic(is, kCheckpointMagic);
  if (binio::get<std::uint32_t>(is) != 1) throw IoError("unsupported checkpoint version");
  std::vector<std::pair<double, SemiclassicalState>> out;
  while (is.peek() != std::char_traits<char>::eof()) {
    const double t = binio::get<double>(is);
    out.emplace_back(t, read_state(is));
  }
  return out;
}

}  // namespace sbl
