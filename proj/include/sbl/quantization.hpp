#pragma once

#include <iosfwd>
#include <string>

#include "sbl/states.hpp"
#include "sbl/symbol.hpp"

namespace sbl {

// F psi(p) = int e^{-i<x,p>/hbar} psi(x) dx sampled at p_m = hbar * k_m
// (FFT order, k_m = 2 pi m / L per axis).
struct MomentumField {
  double hbar = 1.0;
  Grid grid;  // the spatial grid the transform came from
  Field values;

  Vec momentum(std::size_t i) const;
  // (2 pi hbar)^{-d} * (2 pi hbar / L)^d, the p-space measure of one bin.
  double bin_measure() const;
};

MomentumField sc_fourier(const SemiclassicalState& psi);
SemiclassicalState sc_ifourier(const MomentumField& f);

// <Op^W(a) psi, psi> by direct quadrature of the midpoint kernel, d <= 2.
cplx weyl_pair_complex(const PhaseSpaceSymbol& a, const SemiclassicalState& psi);
double weyl_pair_exact(const PhaseSpaceSymbol& a, const SemiclassicalState& psi);

struct HusimiDensity {
  double hbar = 1.0;
  Grid xgrid;
  Grid pgrid;          // centred momentum nodes
  RealField values;    // index ip * xgrid.size() + ix

  double mass() const;
};

// Momentum nodes covering the state's spectral support plus four coherent
// widths sqrt(hbar/2), spaced `spacing_factor` widths apart.
Grid default_husimi_momentum_grid(const SemiclassicalState& psi, double spacing_factor = 1.0);

HusimiDensity husimi(const SemiclassicalState& psi, const Grid& pgrid);
HusimiDensity husimi(const SemiclassicalState& psi);

// int a H_psi dx dp on the Husimi grid.
double antiwick_pair(const PhaseSpaceSymbol& a, const SemiclassicalState& psi, const Grid* pgrid = nullptr);

void write_husimi_csv(std::ostream& os, const HusimiDensity& h);
void write_husimi_binary(std::ostream& os, const HusimiDensity& h);
HusimiDensity read_husimi_binary(std::istream& is);

}  // namespace sbl
