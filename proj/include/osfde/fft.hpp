#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace osfde::fft {

using Complex = std::complex<double>;

/// In-place unnormalized forward DFT, X_k = sum_j x_j e^{-2 pi i jk/n}.
/// Any length is supported. Plans are cached per length and shared across
/// threads; execution uses caller-owned buffers only.
void forward(std::span<Complex> data);

/// In-place inverse DFT, normalized by 1/n.
void inverse(std::span<Complex> data);

}  // namespace osfde::fft
