#include "nstr/data.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "nstr/rng.hpp"

namespace nstr {

namespace {

Mat grid_coords_1d(int n) {
  Mat c(n, 1);
  for (int i = 0; i < n; ++i) c(i, 0) = 2.0 * (i + 0.5) / n - 1.0;
  return c;
}

// Row-major over pixels: sample n = i*w + j maps to (x1, x2) with x1 along
// columns (j) and x2 along rows (i), both at cell centers.
Mat grid_coords_2d(int w, int h) {
  Mat c(static_cast<int64_t>(w) * h, 2);
  int64_t n = 0;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j, ++n) {
      c(n, 0) = 2.0 * (j + 0.5) / w - 1.0;
      c(n, 1) = 2.0 * (i + 0.5) / h - 1.0;
    }
  }
  return c;
}

uint8_t quantize8(double v) {
  const double q = std::round((std::clamp(v, -1.0, 1.0) + 1.0) * 0.5 * 255.0);
  return static_cast<uint8_t>(std::clamp(q, 0.0, 255.0));
}

}  // namespace

double chirp_value(double t, double f0, double f1) {
  return std::sin(2.0 * kPi * (f0 * t + 0.5 * (f1 - f0) * t * t));
}

SignalDataset make_chirp(int samples, double f0, double f1) {
  if (samples < 2) throw SchemaError("chirp: need at least 2 samples");
  const double nyquist = samples / 2.0;
  if (f0 > nyquist || f1 > nyquist || f0 < 0 || f1 < 0) {
    throw SchemaError("chirp: frequency above Nyquist (" +
                      std::to_string(nyquist) + " cycles/domain)");
  }
  SignalDataset ds;
  ds.d = 1;
  ds.channels = 1;
  ds.coords = grid_coords_1d(samples);
  ds.values.resize(samples, 1);
  for (int i = 0; i < samples; ++i) {
    const double t = (i + 0.5) / samples;
    ds.values(i, 0) = chirp_value(t, f0, f1);
  }
  ds.meta.source = "chirp";
  ds.meta.resolution = {samples};
  ds.meta.sample_rate = samples;  // one domain = one second
  return ds;
}

SignalDataset make_warped_texture(int resolution, double base_freq,
                                  double warp_strength) {
  if (resolution < 16) throw SchemaError("warped texture: resolution >= 16");
  if (base_freq * (1.0 + warp_strength) > resolution / 2.0) {
    throw SchemaError("warped texture: sweep exceeds Nyquist");
  }
  const int w = resolution, h = resolution;
  SignalDataset ds;
  ds.d = 2;
  ds.channels = 1;
  ds.coords = grid_coords_2d(w, h);
  const int64_t n = ds.coords.rows();
  ds.values.resize(n, 1);
  Mat freq(n, 2);
  const double alpha = 0.7;  // incommensurate sweep rate on the second axis
  for (int64_t i = 0; i < n; ++i) {
    const double u = (ds.coords(i, 0) + 1.0) * 0.5;
    const double v = (ds.coords(i, 1) + 1.0) * 0.5;
    const double psi =
        2.0 * kPi * base_freq *
        ((u + 0.5 * warp_strength * u * u) + alpha * (v + 0.5 * warp_strength * v * v));
    ds.values(i, 0) = std::sin(psi);
    // d(psi)/dx with du/dx1 = dv/dx2 = 1/2
    freq(i, 0) = kPi * base_freq * (1.0 + warp_strength * u);
    freq(i, 1) = alpha * kPi * base_freq * (1.0 + warp_strength * v);
  }
  ds.meta.source = "warped";
  ds.meta.resolution = {w, h};
  ds.meta.freq_field = std::move(freq);
  return ds;
}

SignalDataset make_checker_gradient(int resolution, double cells) {
  if (resolution < 16) throw SchemaError("checker: resolution >= 16");
  const int w = resolution, h = resolution;
  SignalDataset ds;
  ds.d = 2;
  ds.channels = 1;
  ds.coords = grid_coords_2d(w, h);
  const int64_t n = ds.coords.rows();
  ds.values.resize(n, 1);
  for (int64_t i = 0; i < n; ++i) {
    const double x1 = ds.coords(i, 0);
    const double x2 = ds.coords(i, 1);
    if (x1 < 0) {
      ds.values(i, 0) = 2.0 * x1 + 1.0;  // ramp -1..1 across the left half
    } else {
      // hard binary squares; broadband like printed patterns
      const double s = std::sin(kPi * cells * x1) * std::sin(kPi * cells * x2);
      ds.values(i, 0) = s >= 0 ? 0.8 : -0.8;
    }
  }
  ds.meta.source = "checker";
  ds.meta.resolution = {w, h};
  return ds;
}

namespace {
// Deterministic per-pixel grain in [-1,1]; photographs are never clean.
double pixel_grain(int64_t key) {
  uint64_t x = static_cast<uint64_t>(key) + 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return 2.0 * (static_cast<double>(x >> 11) * 0x1.0p-53) - 1.0;
}
}  // namespace

SignalDataset make_photo(int resolution) {
  const int w = resolution, h = resolution;
  SignalDataset ds;
  ds.d = 2;
  ds.channels = 1;
  ds.coords = grid_coords_2d(w, h);
  const int64_t n = ds.coords.rows();
  ds.values.resize(n, 1);
  auto blob = [](double u, double v, double cu, double cv, double s) {
    const double du = u - cu, dv = v - cv;
    return std::exp(-(du * du + dv * dv) / s);
  };
  // edge-rich scene: hard shapes, oriented micro-textures, shading, grain
  for (int64_t i = 0; i < n; ++i) {
    const double u = (ds.coords(i, 0) + 1.0) * 0.5;
    const double v = (ds.coords(i, 1) + 1.0) * 0.5;
    double y = 0.25 - 0.6 * v + 0.2 * std::sin(kPi * u);  // sky-to-ground shading

    const double r = std::hypot(u - 0.32, v - 0.34);
    if (r < 0.17) y = 0.55 - 1.8 * r;  // disk with interior falloff

    // tilted dark bar
    const double bu = (u - 0.68) * 0.866 + (v - 0.25) * 0.5;
    const double bv = -(u - 0.68) * 0.5 + (v - 0.25) * 0.866;
    if (std::abs(bu) < 0.20 && std::abs(bv) < 0.045) y = -0.62;

    // two oriented gratings under smooth envelopes
    const double t1 = u * 0.766 + v * 0.643;
    y += 0.55 * blob(u, v, 0.72, 0.62, 0.018) * std::sin(2.0 * kPi * 11.0 * t1);
    const double t2 = u * 0.966 - v * 0.259;
    y += 0.45 * blob(u, v, 0.24, 0.78, 0.014) * std::sin(2.0 * kPi * 7.0 * t2);

    // step edge along a curved horizon
    y += 0.28 * ((v - 0.62 - 0.07 * std::sin(2.0 * kPi * u)) > 0 ? 1.0 : -1.0) *
         blob(u, v, 0.5, 0.68, 0.25);

    y += 0.04 * pixel_grain(i);
    ds.values(i, 0) = std::clamp(y, -1.0, 1.0);
  }
  ds.meta.source = "photo";
  ds.meta.resolution = {w, h};
  return ds;
}

SignalDataset add_noise(SignalDataset ds, double sigma, uint64_t seed) {
  ds.meta.clean_values = ds.values;
  Rng rng(seed);
  for (int64_t i = 0; i < ds.values.rows(); ++i) {
    for (int c = 0; c < ds.values.cols(); ++c) {
      ds.values(i, c) =
          std::clamp(ds.values(i, c) + rng.normal(0.0, sigma), -1.0, 1.0);
    }
  }
  ds.meta.source += "+noise";
  return ds;
}

// ---------------------------------------------------------------------------
// PNG / PGM

namespace {

SignalDataset dataset_from_pixels(const std::vector<double>& px, int w, int h,
                                  int channels, double maxval,
                                  const std::string& source) {
  SignalDataset ds;
  ds.d = 2;
  ds.channels = channels;
  ds.coords = grid_coords_2d(w, h);
  const int64_t n = static_cast<int64_t>(w) * h;
  ds.values.resize(n, channels);
  for (int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < channels; ++c) {
      ds.values(i, c) = 2.0 * (px[i * channels + c] / maxval) - 1.0;
    }
  }
  ds.meta.source = source;
  ds.meta.resolution = {w, h};
  ds.meta.value_scale = maxval / 2.0;
  ds.meta.value_offset = maxval / 2.0;
  return ds;
}

SignalDataset load_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw SchemaError("cannot open image: " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw SchemaError("corrupt PNG: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  png_set_expand(png);       // palette -> rgb, low bit depth -> 8
  png_set_strip_alpha(png);
  if (png_get_bit_depth(png, info) == 16) png_set_swap(png);  // LE host
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int ch = png_get_channels(png, info);
  if (ch != 1 && ch != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw SchemaError("unsupported PNG channel count: " + std::to_string(ch));
  }

  const size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<uint8_t> raw(static_cast<size_t>(h) * rowbytes);
  std::vector<png_bytep> rows(h);
  for (int i = 0; i < h; ++i) rows[i] = raw.data() + static_cast<size_t>(i) * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  const double maxval = depth == 16 ? 65535.0 : 255.0;
  std::vector<double> px(static_cast<size_t>(w) * h * ch);
  if (depth == 16) {
    const uint16_t* p16 = reinterpret_cast<const uint16_t*>(raw.data());
    for (size_t i = 0; i < px.size(); ++i) px[i] = p16[i];
  } else {
    for (size_t i = 0; i < px.size(); ++i) px[i] = raw[i];
  }
  return dataset_from_pixels(px, w, h, ch, maxval, path);
}

SignalDataset load_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SchemaError("cannot open image: " + path);
  std::string magic;
  f >> magic;
  if (magic != "P5" && magic != "P2") {
    throw SchemaError("unsupported PGM magic: " + magic);
  }
  auto next_int = [&f]() {
    // skip whitespace and '#' comments
    while (true) {
      int c = f.peek();
      if (c == '#') {
        std::string line;
        std::getline(f, line);
      } else if (std::isspace(c)) {
        f.get();
      } else {
        break;
      }
    }
    long v;
    f >> v;
    return v;
  };
  const int w = static_cast<int>(next_int());
  const int h = static_cast<int>(next_int());
  const long maxval = next_int();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw SchemaError("corrupt PGM header: " + path);
  }
  std::vector<double> px(static_cast<size_t>(w) * h);
  if (magic == "P2") {
    for (auto& v : px) {
      long s;
      f >> s;
      v = static_cast<double>(s);
    }
  } else {
    f.get();  // single whitespace after maxval
    if (maxval < 256) {
      std::vector<uint8_t> buf(px.size());
      f.read(reinterpret_cast<char*>(buf.data()), buf.size());
      for (size_t i = 0; i < px.size(); ++i) px[i] = buf[i];
    } else {
      std::vector<uint8_t> buf(px.size() * 2);  // big-endian 16-bit
      f.read(reinterpret_cast<char*>(buf.data()), buf.size());
      for (size_t i = 0; i < px.size(); ++i) {
        px[i] = 256.0 * buf[2 * i] + buf[2 * i + 1];
      }
    }
  }
  if (!f) throw SchemaError("truncated PGM: " + path);
  return dataset_from_pixels(px, w, h, 1, static_cast<double>(maxval), path);
}

}  // namespace

SignalDataset load_image(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".pgm") {
    return load_pgm(path);
  }
  return load_png(path);
}

void save_image_png(const std::string& path, const Mat& values, int w, int h) {
  const int ch = static_cast<int>(values.cols());
  if (values.rows() != static_cast<int64_t>(w) * h || (ch != 1 && ch != 3)) {
    throw SchemaError("save_image_png: bad shape");
  }
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw SchemaError("cannot write image: " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw SchemaError("PNG write failure: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, 8,
               ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> row(static_cast<size_t>(w) * ch);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int c = 0; c < ch; ++c) {
        row[static_cast<size_t>(j) * ch + c] =
            quantize8(values(static_cast<int64_t>(i) * w + j, c));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

void save_image_pgm(const std::string& path, const Mat& values, int w, int h) {
  if (values.rows() != static_cast<int64_t>(w) * h || values.cols() != 1) {
    throw SchemaError("save_image_pgm: bad shape");
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SchemaError("cannot write image: " + path);
  f << "P5\n" << w << " " << h << "\n255\n";
  for (int64_t i = 0; i < values.rows(); ++i) {
    const uint8_t b = quantize8(values(i, 0));
    f.write(reinterpret_cast<const char*>(&b), 1);
  }
}

// ---------------------------------------------------------------------------
// WAV (16-bit PCM mono, little-endian)

namespace {

void put_u32(std::ofstream& f, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  f.write(reinterpret_cast<char*>(b), 4);
}
void put_u16(std::ofstream& f, uint16_t v) {
  uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
  f.write(reinterpret_cast<char*>(b), 2);
}
uint32_t get_u32(const uint8_t* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t get_u16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace

SignalDataset load_audio(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SchemaError("cannot open audio: " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw SchemaError("not a RIFF/WAVE file: " + path);
  }
  size_t pos = 12;
  int sample_rate = 0;
  bool fmt_ok = false;
  const uint8_t* data = nullptr;
  uint32_t data_len = 0;
  while (pos + 8 <= buf.size()) {
    const uint32_t len = get_u32(buf.data() + pos + 4);
    if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0 && len >= 16) {
      const uint8_t* p = buf.data() + pos + 8;
      const uint16_t format = get_u16(p);
      const uint16_t channels = get_u16(p + 2);
      sample_rate = static_cast<int>(get_u32(p + 4));
      const uint16_t bits = get_u16(p + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        throw SchemaError("unsupported WAV (need 16-bit PCM mono): " + path);
      }
      fmt_ok = true;
    } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
      data = buf.data() + pos + 8;
      data_len = len;
    }
    pos += 8 + len + (len & 1);
  }
  if (!fmt_ok || data == nullptr || data + data_len > buf.data() + buf.size()) {
    throw SchemaError("corrupt WAV: " + path);
  }
  const int64_t n = data_len / 2;
  if (n < 2) throw SchemaError("WAV too short: " + path);

  SignalDataset ds;
  ds.d = 1;
  ds.channels = 1;
  ds.coords = grid_coords_1d(static_cast<int>(n));
  ds.values.resize(n, 1);
  double peak = 1.0;
  std::vector<double> raw(n);
  for (int64_t i = 0; i < n; ++i) {
    const int16_t s = static_cast<int16_t>(get_u16(data + 2 * i));
    raw[i] = s;
    peak = std::max(peak, std::abs(static_cast<double>(s)));
  }
  for (int64_t i = 0; i < n; ++i) ds.values(i, 0) = raw[i] / peak;
  ds.meta.source = path;
  ds.meta.resolution = {static_cast<int>(n)};
  ds.meta.sample_rate = sample_rate;
  ds.meta.value_scale = peak / 32768.0;
  return ds;
}

void save_audio_wav(const std::string& path, const Vec& samples, int sample_rate) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SchemaError("cannot write audio: " + path);
  const uint32_t n = static_cast<uint32_t>(samples.size());
  f.write("RIFF", 4);
  put_u32(f, 36 + 2 * n);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put_u32(f, 16);
  put_u16(f, 1);  // PCM
  put_u16(f, 1);  // mono
  put_u32(f, static_cast<uint32_t>(sample_rate));
  put_u32(f, static_cast<uint32_t>(sample_rate) * 2);
  put_u16(f, 2);
  put_u16(f, 16);
  f.write("data", 4);
  put_u32(f, 2 * n);
  for (uint32_t i = 0; i < n; ++i) {
    const double v = std::clamp(samples(i), -1.0, 1.0);
    const int16_t s = static_cast<int16_t>(std::lround(v * 32767.0));
    put_u16(f, static_cast<uint16_t>(s));
  }
}

void save_heatmap_png(const std::string& path, const Vec& field, int w, int h,
                      double* out_min, double* out_max) {
  const double lo = field.minCoeff();
  const double hi = field.maxCoeff();
  if (out_min) *out_min = lo;
  if (out_max) *out_max = hi;
  const double span = hi - lo;
  Mat values(field.size(), 1);
  for (int64_t i = 0; i < field.size(); ++i) {
    const double t = span > 0 ? (field(i) - lo) / span : 0.0;
    values(i, 0) = 2.0 * t - 1.0;
  }
  save_image_png(path, values, w, h);
}

}  // namespace nstr
