#ifndef CSDET_FFT_UTIL_HPP
#define CSDET_FFT_UTIL_HPP

#include <complex>
#include <vector>

namespace csdet::detail {

// In-place complex DFT. Forward: X_k = sum_n x_n e^{-j2pi nk/N}.
// Inverse applies the 1/N normalization.
void fft_inplace(std::vector<std::complex<double>>& x, bool inverse);

}  // namespace csdet::detail

#endif
