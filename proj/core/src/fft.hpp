#pragma once

#include <complex>
#include <span>
#include <vector>

namespace lfboot::detail {

/// In-place unnormalized DFT, X_k = sum_j x_j exp(-2 pi i jk/m). Plans are
/// cached per size; execution is thread-safe.
void fft_forward(std::span<std::complex<double>> data);

/// In-place unnormalized inverse DFT (exp(+2 pi i jk/m)), no 1/m factor.
void fft_backward(std::span<std::complex<double>> data);

/// Linear convolution y_i = sum_k h_k a_{i-k} for i in [0, a.size() + h.size() - 1).
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> h);

}  // namespace lfboot::detail
