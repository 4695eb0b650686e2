#pragma once

#include <complex>
#include <vector>

#include "nstr/common.hpp"

namespace nstr {

struct StftConfig {
  int window = 256;  // power of two
  int hop = 64;
};

// In-place radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a);

// Hann-windowed magnitude spectrogram, frames x (window/2 + 1). Frames start
// at 0 and advance by hop while they fit; no padding. Throws SchemaError when
// the signal is shorter than one window.
Mat stft_magnitude(const Vec& signal, const StftConfig& cfg = {});

}  // namespace nstr
