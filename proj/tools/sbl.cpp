#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sbl/error.hpp"
#include "sbl/experiment.hpp"
#include "sbl/histories.hpp"
#include "sbl/kinetics.hpp"
#include "sbl/scattering.hpp"

using namespace sbl;

namespace {

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

ExperimentConfig config_from(const std::string& path, long long seed) {
  ExperimentConfig c = load_experiment(path);
  if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semiclassical scattering in random media: quantum vs linear Boltzmann"};
  app.require_subcommand(1);

  std::string config, out = "-", report;
  long long seed = -1;

  auto* sim = app.add_subcommand("simulate", "annealed quantum expectations over realisations");
  sim->add_option("config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("-o,--out", out, "CSV output");
  sim->add_option("--seed", seed, "overrides the config seed");

  auto* boltz = app.add_subcommand("boltzmann", "Boltzmann side of an experiment");
  boltz->add_option("config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
  boltz->add_option("-o,--out", out, "CSV output");
  boltz->add_option("--seed", seed, "overrides the config seed");

  int dim = 3, order = 2;
  double lambda = 0.25, smin = 0.5, smax = 2.0;
  std::size_t scount = 4, angles = 16;
  std::vector<double> optical;
  auto* tm = app.add_subcommand("tmatrix", "on-shell T-matrix table or optical theorem residuals");
  tm->add_option("--dim", dim)->check(CLI::Range(1, 3));
  tm->add_option("--lambda", lambda);
  tm->add_option("--order", order, "Born order")->check(CLI::PositiveNumber);
  tm->add_option("--speed-min", smin);
  tm->add_option("--speed-max", smax);
  tm->add_option("--speed-count", scount);
  tm->add_option("--angles", angles, "angular intervals");
  tm->add_option("--optical", optical, "report optical residuals at these speeds instead");
  tm->add_option("-o,--out", out, "JSON output");

  auto* cmp = app.add_subcommand("compare", "quantum vs Boltzmann comparison rows");
  cmp->add_option("config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
  cmp->add_option("-o,--out", out, "CSV output");
  cmp->add_option("--report", report, "JSON report with config hash and seed");
  cmp->add_option("--seed", seed, "overrides the config seed");
  bool runtime = false;
  cmp->add_flag("--runtime", runtime, "add the runtime column");

  int kmax = 10;
  std::string reading = "printed";
  auto* hist = app.add_subcommand("histories", "recollision map counts against closed forms");
  hist->add_option("--kmax", kmax)->check(CLI::Range(5, 24));
  hist->add_option("--reading", reading, "Q22 constraint reading")->check(CLI::IsMember({"printed", "ordered"}));
  hist->add_option("-o,--out", out, "CSV output");

  auto* est = app.add_subcommand("check-estimates", "quadrature spot checks of the integral estimates");
  est->add_option("-o,--out", out, "JSON output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const auto pts = run_annealed(config_from(config, seed));
      std::ostringstream os;
      os << std::setprecision(17) << "hbar,mean,stderr,ok,failed\n";
      for (const auto& p : pts) os << p.hbar << ',' << p.mean << ',' << p.stderr_ << ',' << p.ok << ',' << p.failed << '\n';
      emit(os.str(), out);
      for (const auto& p : pts)
        if (p.failed) return 1;
    } else if (*boltz) {
      const ExperimentConfig c = config_from(config, seed);
      c.validate();
      const CollisionKernelData k = collision_kernel(experiment_table(c), c.rho);
      std::ostringstream os;
      os << std::setprecision(17) << "hbar,value,error,excluded_mass\n";
      for (double h : c.hbar_list) {
        const BoltzmannPoint b = boltzmann_side(c, h, k);
        os << h << ',' << b.value << ',' << b.error << ',' << b.excluded_mass << '\n';
      }
      emit(os.str(), out);
    } else if (*tm) {
      if (!optical.empty()) {
        nlohmann::json j = nlohmann::json::array();
        bool ok = true;
        for (double q : optical) {
          const OpticalReport r = optical_residual(q, default_gamma_sequence(), std::max(order, 2), lambda, dim);
          j.push_back({{"speed", q}, {"im_t2", r.im_t2}, {"shell_t1", r.shell_t1},
                       {"order_matched_residual", r.order_matched_residual}, {"full_residual", r.full_residual}});
          ok = ok && r.order_matched_residual <= 1e-3;
        }
        emit(j.dump(2) + "\n", out);
        return ok ? 0 : 1;
      }
      KernelSpec ks;
      ks.speed_min = smin;
      ks.speed_max = smax;
      ks.speed_count = scount;
      const OnShellAmplitude t = build_onshell_table(dim, lambda, order, ks.speeds(), angles, default_gamma_sequence());
      emit(to_json(t).dump(2) + "\n", out);
      if (t.max_margin >= 0.8) std::cerr << "warning: Born margin " << t.max_margin << '\n';
    } else if (*cmp) {
      const ExperimentConfig c = config_from(config, seed);
      const auto rows = run_comparison(c);
      emit(comparison_csv(rows, runtime), out);
      if (!report.empty()) emit(comparison_report(c, rows).dump(2) + "\n", report);
    } else if (*hist) {
      const Q22Reading rd = reading == "ordered" ? Q22Reading::ordered : Q22Reading::printed;
      const auto rows = count_table(kmax, rd);
      emit(count_table_csv(rows), out);
      bool ok = true;
      for (int k = 4; k <= kmax; ++k) {
        const auto p = partition_Q22(k, rd);
        const std::size_t n = enumerate_Q(k, HistoryFamily::Q22, rd).size();
        std::cerr << "k=" << k << " Q22 partition " << p.q1.size() << '+' << p.q2.size() << '+' << p.q3.size() << '=' << n
                  << " (closed form " << count_closed_form(k, HistoryFamily::Q22) << ", as typeset "
                  << q22_closed_form_as_typeset(k) << ")\n";
        ok = ok && p.q1.size() + p.q2.size() + p.q3.size() == n;
      }
      for (const auto& r : rows)
        if (r.family != HistoryFamily::Q22 && !r.match) ok = false;
      return ok ? 0 : 1;
    } else if (*est) {
      const LemmaReport r = check_estimate_lemmas();
      nlohmann::json j;
      auto samples = [](const std::vector<LemmaSample>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& s : v) a.push_back({{"name", s.name}, {"parameter", s.parameter}, {"lhs", s.lhs}, {"rhs", s.rhs}, {"holds", s.holds}});
        return a;
      };
      j["time_integral"] = samples(r.time_integral);
      j["log_bound"] = samples(r.log_bound);
      j["log_constant"] = r.log_constant;
      j["log_ratio_spread"] = r.log_ratio_spread;
      nlohmann::json f = nlohmann::json::array();
      for (const auto& s : r.fourier) f.push_back({{"x", {s.x[0], s.x[1], s.x[2]}}, {"relative_error", s.relative_error}});
      j["fourier"] = f;
      j["all_hold"] = r.all_hold;
      emit(j.dump(2) + "\n", out);
      return r.all_hold ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
