#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nstr/graph.hpp"
#include "nstr/spatial.hpp"

namespace nstr {

// One [model] table covers every model kind; unused fields are ignored.
struct ModelConfig {
  std::string kind = "nstr";  // nstr | fourier | siren

  // NSTR
  int k = 16;
  int latent_dim = 16;
  int grid_res = 16;
  std::vector<int> hyper_hidden{64, 64};
  std::vector<int> flow_hidden{64, 64};
  std::vector<int> decoder_hidden{64, 64};
  bool scalar_bottleneck = false;
  bool basis_trainable = true;
  double omega_max = 0.0;  // 0: pi * R / 4 from the dataset resolution

  // Fourier-MLP baseline
  int fourier_features = 256;
  double fourier_sigma = 10.0;
  int fourier_width = 48;
  int fourier_depth = 4;  // weight layers

  // SIREN baseline
  std::vector<int> siren_hidden{64, 64, 64};
  double siren_omega0 = 30.0;
  int siren_width = 0;  // >0: overrides siren_hidden with 3 layers this wide
};

// Dense MLP whose weights live on a ParamTape. Hidden activation is tanh or
// sine (SIREN convention: every sine layer computes sin(omega0 * (Wx + b))
// and the output layer stays linear).
struct Mlp {
  enum class Act { kTanh, kSine };

  int in = 0, out = 0;
  Act act = Act::kTanh;
  double omega0 = 0.0;  // >0 only for sine nets
  std::vector<SegmentHandle> w, b;
  std::vector<int> widths;  // [in, hidden..., out]

  static Mlp dense(ParamTape& tape, Rng& rng, const std::string& prefix, int in,
                   const std::vector<int>& hidden, int out);
  static Mlp siren(ParamTape& tape, Rng& rng, const std::string& prefix, int in,
                   const std::vector<int>& hidden, int out, double omega0);

  struct Trace {
    std::vector<NodeId> act_out;  // hidden activation outputs, in order
  };

  NodeId build(Graph& g, NodeId x, Trace* trace = nullptr) const;

  // Propagates a coordinate tangent through a recorded tanh forward pass:
  // given tx = d(input)/d(x_a), returns d(output)/d(x_a). The returned value
  // participates in the graph, so parameter gradients flow through it.
  NodeId build_tangent(Graph& g, const Trace& trace, NodeId tx) const;

  int64_t param_count() const;
};

// The K global frequencies and phases of the modulated basis.
struct GlobalBasis {
  int k = 0, d = 0;
  bool trainable = true;
  SegmentHandle omega_h, phase_h;  // when trainable
  Mat omega_const;                 // K x d, when frozen
  Vec phase_const;

  static GlobalBasis create(ParamTape& tape, Rng& rng, int k, int d,
                            double omega_max, bool trainable);

  Mat omega(const ParamTape& tape) const;
  Vec phase(const ParamTape& tape) const;
  NodeId omega_node(Graph& g) const;
  NodeId phase_node(Graph& g) const;
};

// Coarse trainable feature grid over [-1,1]^d with multilinear interpolation.
// Interpolation is C0 at cell boundaries; stencils there use the right-limit
// cell (floor), except at the +1 edge which belongs to the last cell.
struct LatentGrid {
  int d = 0;
  int latent_dim = 0;
  std::vector<int> res;      // cells per axis
  std::vector<int> strides;  // node-index strides per axis
  int64_t nodes = 0;
  SegmentHandle features_h;

  static LatentGrid create(ParamTape& tape, Rng& rng, int d, int res,
                           int latent_dim);

  // Throws DomainError when any coordinate leaves [-1,1].
  InterpPlan plan(const Mat& X) const;
  // Stencil of d(weights)/d(x_axis) at the same corners.
  InterpPlan dplan(const Mat& X, int axis) const;
};

class NstrModel;

// Anything trainable by optim::train: NSTR and both baselines.
class FieldModel {
 public:
  virtual ~FieldModel() = default;
  virtual const std::string& kind() const = 0;
  virtual int dim() const = 0;
  virtual int channels() const = 0;
  virtual ParamTape& tape() = 0;
  virtual const ParamTape& tape() const = 0;
  virtual NodeId build_forward(Graph& g, const Mat& X) const = 0;
  virtual const NstrModel* nstr() const { return nullptr; }

  int64_t param_count() const { return static_cast<int64_t>(tape().size()); }
};

// Batched value-only forward over all rows of X.
Mat eval_forward(const FieldModel& model, const Mat& X, int chunk = 2048);

class NstrModel final : public FieldModel {
 public:
  static std::unique_ptr<NstrModel> create(const ModelConfig& cfg, int d,
                                           int channels, int max_axis_res,
                                           uint64_t seed);

  const std::string& kind() const override { return kind_; }
  int dim() const override { return d_; }
  int channels() const override { return channels_; }
  ParamTape& tape() override { return tape_; }
  const ParamTape& tape() const override { return tape_; }
  NodeId build_forward(Graph& g, const Mat& X) const override;
  const NstrModel* nstr() const override { return this; }

  struct SpectrumNodes {
    NodeId x = -1;
    NodeId z = -1;
    NodeId s = -1;
    Mlp::Trace trace;
  };
  SpectrumNodes build_spectrum(Graph& g, const Mat& X) const;
  // Modulation stage: [B,K] unsummed terms S_i(x) sin(w_i.x + b_i), or the
  // scalar row-sum when the literal bottleneck is configured.
  NodeId build_modulated(Graph& g, NodeId x_node, NodeId s_node) const;
  NodeId build_flow(Graph& g, NodeId x_node, NodeId s_node) const;  // [B,K*d]
  // Spectrum Jacobian as a graph value [B, K*d], column (k,a) at k*d+a.
  // kFd: clamp-and-shift central differences (eps = kFdEpsilon);
  // kAnalytic: hand-derived chain rules through interp/affine/tanh.
  NodeId build_grad_s(Graph& g, const Mat& X, GradMode mode,
                      double eps = kFdEpsilon) const;

  // Value-level views used by diagnostics and tests.
  Vec grid_sample(const Vec& x) const;
  Vec spectrum(const Vec& x) const;
  Mat spectrum_batch(const Mat& X) const;
  Vec modulated_features(const Vec& x) const;
  Mat flow_eval(const Vec& x, const Vec& s) const;  // K x d
  Mat flow_batch(const Mat& X, const Mat& S) const;  // B x (K*d)
  Mat grad_s_batch(const Mat& X, GradMode mode) const;
  VectorField spectrum_field() const;

  const ModelConfig& config() const { return cfg_; }
  const GlobalBasis& basis() const { return basis_; }
  const LatentGrid& grid() const { return grid_; }
  const Mlp& hyper() const { return hyper_; }
  const Mlp& flow() const { return flow_; }
  const Mlp& decoder() const { return decoder_; }
  int k() const { return cfg_.k; }

 private:
  std::string kind_ = "nstr";
  ModelConfig cfg_;
  int d_ = 0, channels_ = 0;
  ParamTape tape_;
  GlobalBasis basis_;
  LatentGrid grid_;
  Mlp hyper_, flow_, decoder_;
};

}  // namespace nstr
