#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nstr/common.hpp"

namespace nstr {

struct DatasetMeta {
  std::string source;
  std::vector<int> resolution;  // per-axis sample counts (W,H for images)
  double sample_rate = 0;       // audio only
  // Inverse of the value normalization: raw = v * value_scale + value_offset.
  double value_scale = 1.0;
  double value_offset = 0.0;
  // Ground-truth local frequency (rad per unit normalized coordinate), N x d,
  // stored by synthetic fixtures that know their phase function.
  std::optional<Mat> freq_field;
  // Noise-free reference values for noisy fixtures.
  std::optional<Mat> clean_values;
};

// Coordinate/value pairs on [-1,1]^d, d in {1,2}. Grid-sourced data is stored
// row-major over the sample grid so reassembly into an image or waveform is a
// reshape.
struct SignalDataset {
  int d = 0;
  int channels = 0;
  Mat coords;  // N x d
  Mat values;  // N x C, normalized to [-1,1]
  DatasetMeta meta;

  int64_t size() const { return coords.rows(); }
};

// y(t) = sin(2*pi*(f0*t + (f1-f0)/2 * t^2)) on t in [0,1]; instantaneous
// frequency f0 + (f1-f0)*t cycles per domain.
double chirp_value(double t, double f0, double f1);
SignalDataset make_chirp(int samples, double f0, double f1);

// 2-D sinusoid with a smoothly swept local frequency along both axes;
// meta.freq_field holds the analytic phase gradient per pixel.
SignalDataset make_warped_texture(int resolution, double base_freq,
                                  double warp_strength);

// Left half: horizontal ramp. Right half: separable sinusoidal checker at
// `cells` cycles. The seam is a deliberate structural boundary.
SignalDataset make_checker_gradient(int resolution, double cells);

// Procedural stand-in for a natural photo: smooth shading, two blobs, a soft
// edge, and a localized texture patch.
SignalDataset make_photo(int resolution);

// Adds clipped Gaussian noise; the clean values move to meta.clean_values.
SignalDataset add_noise(SignalDataset ds, double sigma, uint64_t seed);

SignalDataset load_image(const std::string& path);  // 8/16-bit PNG or PGM
SignalDataset load_audio(const std::string& path);  // 16-bit PCM mono WAV

// values in [-1,1], length w*h*channels (row-major pixels); 8-bit output.
void save_image_png(const std::string& path, const Mat& values, int w, int h);
void save_image_pgm(const std::string& path, const Mat& values, int w, int h);
void save_audio_wav(const std::string& path, const Vec& samples, int sample_rate);

// Grayscale min-max normalized rendering; returns the normalization bounds.
void save_heatmap_png(const std::string& path, const Vec& field, int w, int h,
                      double* out_min, double* out_max);

}  // namespace nstr
