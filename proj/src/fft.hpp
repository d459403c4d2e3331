#pragma once

#include <complex>
#include <vector>

namespace afc::detail {

// In-place unnormalized DFT. sign = -1 forward (e^{-i...}), +1 backward.
void dft_inplace(std::vector<std::complex<double>>& x, int sign);

}  // namespace afc::detail
