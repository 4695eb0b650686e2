#include "nstr/baselines.hpp"

#include <cmath>

namespace nstr {

Vec fourier_embed(const Vec& x, const Mat& freq) {
  const int m = static_cast<int>(freq.rows());
  Vec out(2 * m);
  for (int i = 0; i < m; ++i) {
    const double phase = 2.0 * kPi * freq.row(i).dot(x.transpose());
    out(i) = std::sin(phase);
    out(m + i) = std::cos(phase);
  }
  return out;
}

Mat fourier_embed_batch(const Mat& X, const Mat& freq) {
  const int B = static_cast<int>(X.rows());
  const int m = static_cast<int>(freq.rows());
  Mat phase = 2.0 * kPi * (X * freq.transpose());  // B x m
  Mat out(B, 2 * m);
  for (int r = 0; r < B; ++r) {
    for (int i = 0; i < m; ++i) {
      out(r, i) = std::sin(phase(r, i));
      out(r, m + i) = std::cos(phase(r, i));
    }
  }
  return out;
}

std::unique_ptr<FourierMlp> FourierMlp::create(const ModelConfig& cfg, int d,
                                               int channels, uint64_t seed) {
  auto m = std::make_unique<FourierMlp>();
  m->d_ = d;
  m->channels_ = channels;
  Rng rng(seed);
  m->freq_.resize(cfg.fourier_features, d);
  for (int i = 0; i < cfg.fourier_features; ++i) {
    for (int a = 0; a < d; ++a) m->freq_(i, a) = rng.normal(0.0, cfg.fourier_sigma);
  }
  const int w = cfg.fourier_width;
  std::vector<int> hidden(std::max(0, cfg.fourier_depth - 1), w);
  m->mlp_ = Mlp::dense(m->tape_, rng, "fourier", 2 * cfg.fourier_features,
                       hidden, channels);
  return m;
}

NodeId FourierMlp::build_forward(Graph& g, const Mat& X) const {
  NodeId embed = g.constant(fourier_embed_batch(X, freq_));
  return mlp_.build(g, embed);
}

std::unique_ptr<Siren> Siren::create(const ModelConfig& cfg, int d, int channels,
                                     uint64_t seed) {
  auto m = std::make_unique<Siren>();
  m->d_ = d;
  m->channels_ = channels;
  Rng rng(seed);
  std::vector<int> hidden = cfg.siren_hidden;
  if (cfg.siren_width > 0) hidden.assign(3, cfg.siren_width);
  m->net_ = Mlp::siren(m->tape_, rng, "siren", d, hidden, channels,
                       cfg.siren_omega0);
  return m;
}

NodeId Siren::build_forward(Graph& g, const Mat& X) const {
  return net_.build(g, g.constant(X));
}

std::unique_ptr<FieldModel> make_model(const ModelConfig& cfg, int d,
                                       int channels, int max_axis_res,
                                       uint64_t seed) {
  if (cfg.kind == "nstr") return NstrModel::create(cfg, d, channels, max_axis_res, seed);
  if (cfg.kind == "fourier") return FourierMlp::create(cfg, d, channels, seed);
  if (cfg.kind == "siren") return Siren::create(cfg, d, channels, seed);
  throw SchemaError("unknown model kind: " + cfg.kind);
}

int64_t fourier_param_count(int features, int width, int depth, int d,
                            int channels) {
  (void)d;
  int64_t n = 0;
  int in = 2 * features;
  for (int layer = 0; layer < depth - 1; ++layer) {
    n += static_cast<int64_t>(in + 1) * width;
    in = width;
  }
  n += static_cast<int64_t>(in + 1) * channels;
  return n;
}

int64_t siren_param_count(int width, int n_hidden, int d, int channels) {
  int64_t n = static_cast<int64_t>(d + 1) * width;
  for (int i = 1; i < n_hidden; ++i) n += static_cast<int64_t>(width + 1) * width;
  n += static_cast<int64_t>(width + 1) * channels;
  return n;
}

void match_params(ModelConfig& cfg, int64_t target, int d, int channels) {
  if (cfg.kind != "fourier" && cfg.kind != "siren") {
    throw SchemaError("match_params: only baselines are resized");
  }
  auto count = [&](int features, int w) -> int64_t {
    if (cfg.kind == "fourier") {
      return fourier_param_count(features, w, cfg.fourier_depth, d, channels);
    }
    return siren_param_count(w, 3, d, channels);
  };
  auto best_width = [&](int features, int64_t* out_diff) {
    int best_w = 1;
    int64_t best = std::abs(count(features, 1) - target);
    for (int w = 2; w <= 4096; ++w) {
      const int64_t c = count(features, w);
      const int64_t diff = std::abs(c - target);
      if (diff < best) {
        best = diff;
        best_w = w;
      }
      if (c > target * 2) break;
    }
    *out_diff = best;
    return best_w;
  };

  // Width search; for small targets the Fourier embedding itself is the
  // floor, so halve the feature count until the budget is reachable.
  int features = cfg.fourier_features;
  while (true) {
    int64_t diff = 0;
    const int w = best_width(features, &diff);
    if (diff <= target * 0.05) {
      if (cfg.kind == "fourier") {
        cfg.fourier_features = features;
        cfg.fourier_width = w;
      } else {
        cfg.siren_width = w;
        cfg.siren_hidden.assign(3, w);
      }
      return;
    }
    if (cfg.kind != "fourier" || features <= 2) {
      throw SchemaError("match_params: cannot reach +-5% of " +
                        std::to_string(target));
    }
    features /= 2;
  }
}

}  // namespace nstr
