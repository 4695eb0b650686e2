#pragma once

#include "nstr/model.hpp"

namespace nstr {

// [sin(2*pi*B x), cos(2*pi*B x)] against a fixed frequency matrix B (M x d).
Vec fourier_embed(const Vec& x, const Mat& freq);
Mat fourier_embed_batch(const Mat& X, const Mat& freq);

class FourierMlp final : public FieldModel {
 public:
  static std::unique_ptr<FourierMlp> create(const ModelConfig& cfg, int d,
                                            int channels, uint64_t seed);

  const std::string& kind() const override { return kind_; }
  int dim() const override { return d_; }
  int channels() const override { return channels_; }
  ParamTape& tape() override { return tape_; }
  const ParamTape& tape() const override { return tape_; }
  NodeId build_forward(Graph& g, const Mat& X) const override;

  const Mat& freq_matrix() const { return freq_; }
  const Mlp& mlp() const { return mlp_; }

 private:
  std::string kind_ = "fourier";
  int d_ = 0, channels_ = 0;
  Mat freq_;  // fixed after init, not on the tape
  ParamTape tape_;
  Mlp mlp_;
};

class Siren final : public FieldModel {
 public:
  static std::unique_ptr<Siren> create(const ModelConfig& cfg, int d,
                                       int channels, uint64_t seed);

  const std::string& kind() const override { return kind_; }
  int dim() const override { return d_; }
  int channels() const override { return channels_; }
  ParamTape& tape() override { return tape_; }
  const ParamTape& tape() const override { return tape_; }
  NodeId build_forward(Graph& g, const Mat& X) const override;

  const Mlp& net() const { return net_; }

 private:
  std::string kind_ = "siren";
  int d_ = 0, channels_ = 0;
  ParamTape tape_;
  Mlp net_;
};

std::unique_ptr<FieldModel> make_model(const ModelConfig& cfg, int d,
                                       int channels, int max_axis_res,
                                       uint64_t seed);

// Trainable parameter counts by closed form, used to size the baselines.
int64_t fourier_param_count(int features, int width, int depth, int d, int channels);
int64_t siren_param_count(int width, int n_hidden, int d, int channels);

// Adjusts cfg so the named baseline lands within +-5% of target trainable
// parameters (width search); throws SchemaError when impossible.
void match_params(ModelConfig& cfg, int64_t target, int d, int channels);

}  // namespace nstr
