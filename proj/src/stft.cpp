#include "nstr/stft.hpp"

#include <cmath>

namespace nstr {

void fft_inplace(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw SchemaError("fft: size must be a power of two");
  }
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

Mat stft_magnitude(const Vec& signal, const StftConfig& cfg) {
  const int n = static_cast<int>(signal.size());
  const int w = cfg.window;
  if (n < w) throw SchemaError("stft: signal shorter than window");
  const int frames = (n - w) / cfg.hop + 1;
  const int bins = w / 2 + 1;

  std::vector<double> hann(w);
  for (int i = 0; i < w; ++i) {
    hann[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / w));
  }

  Mat mag(frames, bins);
  std::vector<std::complex<double>> buf(w);
  for (int f = 0; f < frames; ++f) {
    const int start = f * cfg.hop;
    for (int i = 0; i < w; ++i) {
      buf[i] = std::complex<double>(signal(start + i) * hann[i], 0.0);
    }
    fft_inplace(buf);
    for (int b = 0; b < bins; ++b) mag(f, b) = std::abs(buf[b]);
  }
  return mag;
}

}  // namespace nstr
