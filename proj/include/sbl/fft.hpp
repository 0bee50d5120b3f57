#pragma once

#include "sbl/aligned.hpp"
#include "sbl/grid.hpp"

namespace sbl::fft {

// Unnormalised in-place DFTs over the active axes of g.
// forward: sum_j e^{-2 pi i jm/N} f_j ; backward: sum_m e^{+2 pi i jm/N} f_m.
void forward(const Grid& g, Field& f);
void backward(const Grid& g, Field& f);

// 1D transform of arbitrary length n (used by the Weyl kernel builder).
void forward_1d(std::size_t n, cplx* data);
void backward_1d(std::size_t n, cplx* data);

}  // namespace sbl::fft
