#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "nstr/data.hpp"
#include "nstr/stft.hpp"

using namespace nstr;

namespace {

// Peak bin of each STFT frame with parabolic refinement, in cycles/domain.
std::vector<std::pair<double, double>> stft_ridge(const Vec& y, int window,
                                                  int hop) {
  StftConfig cfg{window, hop};
  Mat mag = stft_magnitude(y, cfg);
  const int n = static_cast<int>(y.size());
  std::vector<std::pair<double, double>> out;  // (t_center, freq)
  for (int f = 0; f < mag.rows(); ++f) {
    int kbest = 1;
    for (int k = 1; k + 1 < mag.cols(); ++k) {
      if (mag(f, k) > mag(f, kbest)) kbest = k;
    }
    double delta = 0.0;
    const double l = std::log(mag(f, kbest - 1) + 1e-12);
    const double c = std::log(mag(f, kbest) + 1e-12);
    const double r = std::log(mag(f, kbest + 1) + 1e-12);
    const double den = l - 2 * c + r;
    if (std::abs(den) > 1e-12) delta = 0.5 * (l - r) / den;
    const double bin = kbest + std::clamp(delta, -0.5, 0.5);
    const double t_center = (f * hop + window / 2.0) / n;
    out.emplace_back(t_center, bin * n / window);
  }
  return out;
}

}  // namespace

TEST_CASE("chirp: zero phase at t=0 and degenerate pure tone") {
  CHECK(chirp_value(0.0, 5.0, 60.0) == 0.0);
  CHECK(chirp_value(0.0, 0.0, 17.0) == 0.0);

  // f0 == f1 degenerates to a constant-frequency tone
  SignalDataset tone = make_chirp(1024, 8.0, 8.0);
  auto ridge = stft_ridge(tone.values.col(0), 256, 64);
  for (const auto& [t, f] : ridge) {
    CHECK(std::abs(f - 8.0) < 2.0);
  }
}

TEST_CASE("chirp: STFT ridge follows the instantaneous frequency") {
  const double f0 = 5.0, f1 = 60.0;
  SignalDataset ds = make_chirp(2048, f0, f1);
  CHECK(ds.size() == 2048);
  CHECK(ds.d == 1);
  auto ridge = stft_ridge(ds.values.col(0), 256, 64);
  double err = 0;
  for (const auto& [t, f] : ridge) {
    err += std::abs(f - (f0 + (f1 - f0) * t));
  }
  err /= ridge.size();
  MESSAGE("mean ridge error (cycles/domain): ", err);
  CHECK(err < 2.0);  // a quarter of the 8-cycle bin width
}

TEST_CASE("chirp: aliasing raises") {
  CHECK_THROWS_AS(make_chirp(128, 5.0, 65.0), SchemaError);
  CHECK_THROWS_AS(make_chirp(128, 70.0, 10.0), SchemaError);
}

TEST_CASE("warped texture: zero warp is a stationary grating") {
  SignalDataset ds = make_warped_texture(32, 4.0, 0.0);
  REQUIRE(ds.meta.freq_field.has_value());
  const Mat& ff = *ds.meta.freq_field;
  for (int i = 0; i < ds.size(); ++i) {
    CHECK(ff(i, 0) == doctest::Approx(kPi * 4.0));
    CHECK(ff(i, 1) == doctest::Approx(0.7 * kPi * 4.0));
  }
}

TEST_CASE("warped texture: values bounded and phase gradient matches stored field") {
  const int res = 64;
  const double fb = 6.0, w = 1.5;
  SignalDataset ds = make_warped_texture(res, fb, w);
  for (int i = 0; i < ds.size(); ++i) {
    CHECK(ds.values(i, 0) >= -1.0);
    CHECK(ds.values(i, 0) <= 1.0);
  }

  // independent reimplementation of the phase function, differentiated
  // numerically; the stored field must agree to < 2% of Nyquist
  auto psi = [&](double x1, double x2) {
    const double u = (x1 + 1.0) * 0.5, v = (x2 + 1.0) * 0.5;
    return 2.0 * kPi * fb *
           ((u + 0.5 * w * u * u) + 0.7 * (v + 0.5 * w * v * v));
  };
  const double h = 1e-5;
  const Mat& ff = *ds.meta.freq_field;
  double err = 0;
  for (int i = 0; i < ds.size(); ++i) {
    const double x1 = ds.coords(i, 0), x2 = ds.coords(i, 1);
    const double g1 = (psi(x1 + h, x2) - psi(x1 - h, x2)) / (2 * h);
    const double g2 = (psi(x1, x2 + h) - psi(x1, x2 - h)) / (2 * h);
    err += std::hypot(ff(i, 0) - g1, ff(i, 1) - g2);
  }
  err /= ds.size();
  const double nyquist = kPi * res / 2.0;  // rad per unit coordinate
  MESSAGE("mean phase-gradient error: ", err, " (2% of Nyquist = ",
          0.02 * nyquist, ")");
  CHECK(err < 0.02 * nyquist);
}

TEST_CASE("checker and photo fixtures stay in range") {
  for (const SignalDataset& ds :
       {make_checker_gradient(32, 4.0), make_photo(32)}) {
    CHECK(ds.values.minCoeff() >= -1.0);
    CHECK(ds.values.maxCoeff() <= 1.0);
    CHECK(ds.size() == 32 * 32);
  }
}

TEST_CASE("noisy fixture stores the clean reference") {
  SignalDataset ds = add_noise(make_warped_texture(32, 4.0, 1.0), 0.1, 7);
  REQUIRE(ds.meta.clean_values.has_value());
  CHECK(ds.values.minCoeff() >= -1.0);
  CHECK(ds.values.maxCoeff() <= 1.0);
  double diff = (ds.values - *ds.meta.clean_values).cwiseAbs().mean();
  CHECK(diff > 0.01);
  CHECK(diff < 0.5);
}

TEST_CASE("grid datasets are unique and sorted row-major") {
  SignalDataset ds = make_warped_texture(16, 3.0, 0.5);
  for (int i = 1; i < ds.size(); ++i) {
    const bool later = ds.coords(i, 1) > ds.coords(i - 1, 1) ||
                       (ds.coords(i, 1) == ds.coords(i - 1, 1) &&
                        ds.coords(i, 0) > ds.coords(i - 1, 0));
    CHECK(later);
  }
  SignalDataset ch = make_chirp(64, 1.0, 4.0);
  for (int i = 1; i < ch.size(); ++i) CHECK(ch.coords(i, 0) > ch.coords(i - 1, 0));
}

TEST_CASE("png: known 2x2 gray pixels normalize to thirds") {
  // craft a PGM with pixels {0, 85, 170, 255} (same loader contract as PNG)
  const char* path = "/tmp/nstr_test_2x2.pgm";
  {
    std::ofstream f(path, std::ios::binary);
    f << "P5\n2 2\n255\n";
    const uint8_t px[4] = {0, 85, 170, 255};
    f.write(reinterpret_cast<const char*>(px), 4);
  }
  SignalDataset ds = load_image(path);
  CHECK(ds.size() == 4);
  CHECK(ds.values(0, 0) == doctest::Approx(-1.0));
  CHECK(ds.values(1, 0) == doctest::Approx(-1.0 / 3.0));
  CHECK(ds.values(2, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(ds.values(3, 0) == doctest::Approx(1.0));
  // meta records the inverse transform back to raw pixel values
  CHECK(ds.values(1, 0) * ds.meta.value_scale + ds.meta.value_offset ==
        doctest::Approx(85.0));
  std::remove(path);
}

TEST_CASE("png round trip: save-then-load within one quantization step") {
  SignalDataset src = make_photo(24);
  const char* path = "/tmp/nstr_test_roundtrip.png";
  save_image_png(path, src.values, 24, 24);
  SignalDataset back = load_image(path);
  CHECK(back.size() == src.size());
  CHECK(back.channels == 1);
  const double step = 2.0 / 255.0;
  for (int i = 0; i < src.size(); ++i) {
    CHECK(std::abs(back.values(i, 0) - src.values(i, 0)) <= step * 0.5 + 1e-12);
  }
  std::remove(path);
}

TEST_CASE("pgm: 16-bit big-endian samples load correctly") {
  const char* path = "/tmp/nstr_test_16bit.pgm";
  {
    std::ofstream f(path, std::ios::binary);
    f << "P5\n2 1\n65535\n";
    const uint8_t bytes[4] = {0x00, 0x00, 0xff, 0xff};  // 0 and 65535
    f.write(reinterpret_cast<const char*>(bytes), 4);
  }
  SignalDataset ds = load_image(path);
  CHECK(ds.values(0, 0) == doctest::Approx(-1.0));
  CHECK(ds.values(1, 0) == doctest::Approx(1.0));
  std::remove(path);
}

TEST_CASE("image loader rejects missing and corrupt files") {
  CHECK_THROWS_AS(load_image("/tmp/does_not_exist_nstr.png"), SchemaError);
  const char* path = "/tmp/nstr_corrupt.png";
  {
    std::ofstream f(path, std::ios::binary);
    f << "not a png at all";
  }
  CHECK_THROWS_AS(load_image(path), SchemaError);
  std::remove(path);
}

TEST_CASE("wav: counting, coords, and round trip") {
  SignalDataset tone = make_chirp(44100, 100.0, 100.0);
  const char* path = "/tmp/nstr_test_tone.wav";
  save_audio_wav(path, tone.values.col(0), 44100);
  SignalDataset back = load_audio(path);
  CHECK(back.size() == 44100);
  CHECK(back.d == 1);
  CHECK(back.meta.sample_rate == 44100);
  CHECK(back.coords(0, 0) > -1.0);
  CHECK(back.coords(back.size() - 1, 0) < 1.0);
  for (int i = 0; i < back.size(); ++i) {
    CHECK(std::abs(back.values(i, 0) - tone.values(i, 0)) <= 1.5 / 32767.0);
  }
  std::remove(path);
}

TEST_CASE("wav: rejects non-PCM and truncated input") {
  const char* path = "/tmp/nstr_bad.wav";
  {
    std::ofstream f(path, std::ios::binary);
    f << "RIFFxxxxWAVEjunk";
  }
  CHECK_THROWS_AS(load_audio(path), SchemaError);
  std::remove(path);
}
