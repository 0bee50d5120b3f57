#pragma once

#include <complex>
#include <vector>

#include "json.hpp"
#include "sbl/grid.hpp"
#include "sbl/quadrature.hpp"

namespace sbl {

using cplx = std::complex<double>;

// Fourier transform of the gaussian single-site potential V(u) = e^{-|u|^2/2}
// under F f(xi) = int e^{-i u xi} f(u) du.
struct SingleSiteSpectrum {
  int dim = 3;

  double v_hat(double xi2) const;  // argument |xi|^2
  // ||V^||_{1,inf,n}: max over weights <xi>^beta, beta <= n, and derivatives
  // |eps| <= n of the L1 and Linf norms. Cached per (dim, n).
  double norm_1_inf(int n) const;
};

struct ShellQuadSpec {
  int level = 0;              // each level refines every node count
  std::size_t gl_order = 12;  // nodes per radial panel
  std::size_t angular = 0;    // 0: dimension default (d=3 GL in cos, d=2 uniform angles)
  double radial_tail = 7.0;   // radial cut at |p0| + tail
  double tolerance = 1e-6;    // relative agreement required between levels

  ShellQuadSpec refined() const;
};

// Psi_m^gamma(p, p0) for m = 1..max_order with p described by |p| and the
// cosine of its angle to p0 (radial V makes Psi axisymmetric about p0).
class BornSeries {
 public:
  BornSeries(int dim, double p0_speed, double gamma, int max_order, const ShellQuadSpec& spec = {});

  cplx psi(int m, double speed, double cos_angle) const;
  int max_order() const { return max_order_; }
  double gamma() const { return gamma_; }
  std::size_t node_count() const { return r_.size(); }

 private:
  cplx kernel_sum(const std::vector<cplx>& f, double r, double u, double s) const;

  int dim_;
  double q_, gamma_;
  int max_order_;
  std::vector<double> r_, u_, s_;  // flattened nodes
  std::vector<cplx> w_;            // radial (with resolvent) times angular weight
  std::vector<std::vector<cplx>> F_;  // F_j at nodes, j = 1..max_order-1
};

// Radial rule for int_0^inf g(r) r^{d-1} 2/(gamma - i(r^2 - q^2)) dr.
struct ResolventRadialRule {
  std::vector<double> r;
  std::vector<cplx> w;
};
ResolventRadialRule resolvent_radial_rule(int dim, double q, double gamma, const ShellQuadSpec& spec);

// Psi_m^gamma(p, p0) with two-level agreement check (AccuracyError on failure).
cplx psi_m_gamma(int m, const Vec& p, const Vec& p0, double gamma, int dim, const ShellQuadSpec& spec = {});

struct BornResult {
  cplx value;
  std::vector<cplx> terms;  // -i (i lambda)^n Psi_n, n = 1..N
  double tail_estimate = 0.0;
  double margin = 0.0;      // max |t_n| / |t_{n-1}|
  bool divergence_warning = false;
};

// T^gamma(p, q) = -i sum_{n=1}^N (i lambda)^n Psi_n^gamma(p, q).
BornResult tmatrix_born(const Vec& p, const Vec& q, double gamma, int order, double lambda, int dim,
                        const ShellQuadSpec& spec = {});
BornResult born_sum(const BornSeries& series, double speed, double cos_angle, int order, double lambda);

struct OnShellValue {
  cplx value;
  double error = 0.0;
  std::vector<cplx> per_gamma;
  double margin = 0.0;
};

// Polynomial extrapolation in gamma of the order-N Born sum at |p| = |q| = speed.
OnShellValue onshell_extrapolate(double speed, double cos_angle, const std::vector<double>& gamma_seq, int order,
                                 double lambda, int dim, const ShellQuadSpec& spec = {});

std::vector<double> default_gamma_sequence();

struct OnShellAmplitude {
  int dim = 3;
  double lambda = 0.0;
  int born_order = 1;
  std::vector<double> speeds;
  std::vector<double> angles;  // cos(theta); Chebyshev points incl. +-1 (d=1: {+1, -1})
  std::vector<std::vector<cplx>> t_values;  // [speed][angle]
  std::vector<std::vector<double>> errors;
  std::vector<double> gamma_trace;
  double max_margin = 0.0;  // max over speeds of ||t_n|| / ||t_{n-1}|| across the angle grid

  // Barycentric in angle, linear in speed; DomainError outside speed range.
  cplx t_hat(double speed, double cos_angle) const;
};

OnShellAmplitude build_onshell_table(int dim, double lambda, int born_order, const std::vector<double>& speeds,
                                     std::size_t angle_intervals, const std::vector<double>& gamma_seq,
                                     const ShellQuadSpec& spec = {});
// Closed-form first Born table (gamma-independent).
OnShellAmplitude first_born_table(int dim, double lambda, const std::vector<double>& speeds,
                                  std::size_t angle_intervals);

nlohmann::json to_json(const OnShellAmplitude& t);
OnShellAmplitude onshell_from_json(const nlohmann::json& j);

// Unit-sphere quadrature in the cosine variable: int_{S^{d-1}} g(omega . e) d sigma.
struct SphereRule {
  std::vector<double> cos_angle;
  std::vector<double> weight;
};
SphereRule sphere_rule(int dim, std::size_t n);

struct CollisionKernelData {
  int dim = 3;
  double rho = 0.0;
  OnShellAmplitude table;
  std::vector<double> sigma_tot_nodes;  // at table speeds

  // Density on the unit sphere: int Sigma(p,q) g(p) dp = int sigma_shell(|q|, w.q^) g(|q| w) d sigma(w).
  double sigma_shell(double speed, double cos_angle) const;
  double sigma_tot(double speed) const;
  // Sigma(p, q) with the energy delta removed, for p, q on a common shell.
  double sigma(const Vec& p, const Vec& q) const;
  double min_speed() const { return table.speeds.front(); }
  double max_speed() const { return table.speeds.back(); }
};

CollisionKernelData collision_kernel(const OnShellAmplitude& table, double rho);

struct OpticalReport {
  double speed = 0.0;
  double im_t2 = 0.0;            // Im T^(2)(q,q) extrapolated
  double shell_t1 = 0.0;         // pi * shell integral of |T^(1)|^2
  double order_matched_residual = 0.0;  // relative
  double im_t_full = 0.0;
  double shell_full = 0.0;
  double full_residual = 0.0;    // relative, order-N sum
  std::vector<double> per_gamma_residual;  // order-matched, unextrapolated
  double extrapolation_error = 0.0;
};

OpticalReport optical_residual(double speed, const std::vector<double>& gamma_seq, int order, double lambda, int dim,
                               const ShellQuadSpec& spec = {});

// Reciprocity check for d = 3: the second-order term via the axisymmetric
// recursion against a one-dimensional radial reduction specific to the gaussian.
cplx psi2_gaussian_direct(const Vec& p, const Vec& p0, double gamma);

struct PsiBoundSample {
  int m;
  double gamma;
  double speed, cos_angle;
  double abs_psi;
  double implied_constant;  // (|psi| (2 pi)^d / ||V^||^m)^{1/(m-1)}
};
struct PsiBoundReport {
  double norm = 0.0;  // ||V^||_{1,inf,2d+2}
  double fitted_constant = 0.0;
  double spread = 0.0;  // max/min over (m, gamma) of the angular sup
  bool first_order_ok = false;
  std::vector<PsiBoundSample> samples;
};
PsiBoundReport fit_psi_bound(int dim, const std::vector<int>& orders, const std::vector<double>& gammas,
                             double speed, const ShellQuadSpec& spec = {});

// ---- quadrature spot checks of the integral lemmas
struct LemmaSample {
  std::string name;
  double parameter = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct ResolventFourierSample {
  Vec x{};
  cplx z;
  cplx numeric;
  cplx closed_form;
  double relative_error = 0.0;
};

struct LemmaReport {
  std::vector<LemmaSample> time_integral;   // int (1-e^{-g t})/max(1,t^{3/2}) <= 5 g^{1/3}
  std::vector<LemmaSample> log_bound;       // sup_a int dnu/(<nu>|nu+a+i zeta|) <= C |log zeta|
  double log_constant = 0.0;
  double log_ratio_spread = 0.0;
  std::vector<ResolventFourierSample> fourier;
  double fourier_tolerance = 1e-6;
  bool all_hold = false;
};

double gamma_time_integral(double gamma);
double resolvent_log_integral(double a, double zeta);
double resolvent_log_sup(double zeta, double* argmax = nullptr);
cplx resolvent_fourier_numeric(double r, cplx z);
cplx resolvent_fourier_closed(double r, cplx z);

struct LemmaSampleSpec {
  std::vector<double> gammas{0.5, 0.1, 0.01, 0.001};
  std::vector<double> zetas{0.3, 0.1, 0.03, 0.01};
  std::vector<std::pair<Vec, cplx>> fourier_points;  // empty: defaults
  double max_log_spread = 2.0;
};

LemmaReport check_estimate_lemmas(const LemmaSampleSpec& spec = {});

}  // namespace sbl
