#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sbl/medium.hpp"
#include "sbl/states.hpp"

namespace sbl {

struct PropagatorConfig {
  double lambda = 0.0;
  double dt = 1e-3;
  // Signed: negative values run the flow backwards, U(-|t|).
  double t_final = 0.0;
  double hbar = 1.0;
};

// Exact free flow: momentum amplitudes times e^{-i t |p|^2 / (2 hbar)}.
SemiclassicalState free_evolve(const SemiclassicalState& psi, double t);

struct StepDiagnostics {
  std::size_t steps = 0;
  double step = 0.0;             // signed step actually used
  double kinetic_phase = 0.0;    // |step| * p_max^2 / (2 hbar), p_max = pi hbar N / L
  double potential_phase = 0.0;  // |step| * lambda * W_max / hbar
  double suggested_dt = 0.0;
};

StepDiagnostics plan_steps(const Grid& g, double hbar, double lambda, double w_max, double dt, double t_final);

struct CheckpointSink {
  std::size_t every = 0;  // 0 disables
  std::function<void(std::size_t step, double t, const SemiclassicalState&)> on_snapshot;
};

// Strang splitting e^{-i lambda W dt/(2hbar)} free(dt) e^{-i lambda W dt/(2hbar)}.
SemiclassicalState evolve(const SemiclassicalState& psi, const PotentialField& W, const PropagatorConfig& cfg,
                          const CheckpointSink* sink = nullptr, StepDiagnostics* diag = nullptr);

// Checkpoint container: "SBLCHKPT", version, then (f64 t, state record) per snapshot.
class CheckpointWriter {
 public:
  explicit CheckpointWriter(const std::string& path);
  void write(double t, const SemiclassicalState& s);
  CheckpointSink sink(std::size_t every);

 private:
  std::string path_;
};

std::vector<std::pair<double, SemiclassicalState>> read_checkpoints(const std::string& path);

}  // namespace sbl
