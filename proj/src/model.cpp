#include "nstr/model.hpp"

#include <cmath>

namespace nstr {

// ---------------------------------------------------------------------------
// Mlp

Mlp Mlp::dense(ParamTape& tape, Rng& rng, const std::string& prefix, int in,
               const std::vector<int>& hidden, int out) {
  Mlp m;
  m.in = in;
  m.out = out;
  m.act = Act::kTanh;
  std::vector<int> widths;
  widths.push_back(in);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    const int fi = widths[i], fo = widths[i + 1];
    const double bound = std::sqrt(6.0 / (fi + fo));
    m.w.push_back(tape.register_segment(prefix + ".w" + std::to_string(i),
                                        {fi, fo}, InitSpec::uniform(-bound, bound),
                                        rng));
    m.b.push_back(tape.register_segment(prefix + ".b" + std::to_string(i), {fo},
                                        InitSpec::constant(0.0), rng));
  }
  m.widths = widths;
  return m;
}

Mlp Mlp::siren(ParamTape& tape, Rng& rng, const std::string& prefix, int in,
               const std::vector<int>& hidden, int out, double omega0) {
  Mlp m;
  m.in = in;
  m.out = out;
  m.act = Act::kSine;
  m.omega0 = omega0;
  std::vector<int> widths;
  widths.push_back(in);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    const int fi = widths[i], fo = widths[i + 1];
    m.w.push_back(tape.register_segment(
        prefix + ".w" + std::to_string(i), {fi, fo},
        InitSpec::siren_uniform(fi, omega0, i == 0), rng));
    const double bb = 1.0 / std::sqrt(static_cast<double>(fi));
    m.b.push_back(tape.register_segment(prefix + ".b" + std::to_string(i), {fo},
                                        InitSpec::uniform(-bb, bb), rng));
  }
  m.widths = widths;
  return m;
}

NodeId Mlp::build(Graph& g, NodeId x, Trace* trace) const {
  NodeId h = x;
  for (size_t i = 0; i < w.size(); ++i) {
    NodeId pre = g.add_bias(g.matmul(h, g.param(w[i])), g.param(b[i]));
    if (i + 1 == w.size()) return pre;  // linear output layer
    if (act == Act::kSine) {
      h = g.sin_of(g.scale(pre, omega0));
    } else {
      h = g.tanh_of(pre);
    }
    if (trace) trace->act_out.push_back(h);
  }
  return h;  // unreachable for nonempty nets
}

NodeId Mlp::build_tangent(Graph& g, const Trace& trace, NodeId tx) const {
  if (act != Act::kTanh) throw SchemaError("tangent propagation needs tanh");
  if (trace.act_out.size() + 1 != w.size()) {
    throw SchemaError("tangent: trace does not match layer count");
  }
  NodeId t = tx;
  for (size_t i = 0; i < w.size(); ++i) {
    t = g.matmul(t, g.param(w[i]));
    if (i + 1 == w.size()) break;
    NodeId y = trace.act_out[i];
    NodeId dact = g.affine_comb(g.mul(y, y), -1.0, 1.0);  // 1 - tanh^2
    t = g.mul(dact, t);
  }
  return t;
}

int64_t Mlp::param_count() const {
  int64_t n = 0;
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    n += static_cast<int64_t>(widths[i] + 1) * widths[i + 1];
  }
  return n;
}

// ---------------------------------------------------------------------------
// GlobalBasis

GlobalBasis GlobalBasis::create(ParamTape& tape, Rng& rng, int k, int d,
                                double omega_max, bool trainable) {
  if (k < 1) throw SchemaError("GlobalBasis: K must be >= 1");
  GlobalBasis gb;
  gb.k = k;
  gb.d = d;
  gb.trainable = trainable;

  // Directions uniform on the sphere, magnitudes log-uniform in [pi, omega_max].
  const double lo = std::log(kPi);
  const double hi = std::log(std::max(omega_max, 1.5 * kPi));
  Mat omega(k, d);
  Vec phase(k);
  for (int i = 0; i < k; ++i) {
    Vec dir(d);
    if (d == 1) {
      dir(0) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    } else {
      double n2 = 0;
      do {
        for (int a = 0; a < d; ++a) dir(a) = rng.normal();
        n2 = dir.squaredNorm();
      } while (n2 < 1e-12);
      dir /= std::sqrt(n2);
    }
    const double mag = std::exp(rng.uniform(lo, hi));
    omega.row(i) = mag * dir.transpose();
    phase(i) = rng.uniform(0.0, 2.0 * kPi);
  }

  if (trainable) {
    gb.omega_h = tape.register_segment("basis.omega", {k, d},
                                       InitSpec::constant(0.0), rng);
    gb.phase_h =
        tape.register_segment("basis.phase", {k}, InitSpec::constant(0.0), rng);
    auto ow = tape.param_span(gb.omega_h);
    std::copy(omega.data(), omega.data() + omega.size(), ow.begin());
    auto pw = tape.param_span(gb.phase_h);
    std::copy(phase.data(), phase.data() + phase.size(), pw.begin());
  } else {
    gb.omega_const = omega;
    gb.phase_const = phase;
  }
  return gb;
}

Mat GlobalBasis::omega(const ParamTape& tape) const {
  if (!trainable) return omega_const;
  auto s = tape.param_span(omega_h);
  return Eigen::Map<const Mat>(s.data(), k, d);
}

Vec GlobalBasis::phase(const ParamTape& tape) const {
  if (!trainable) return phase_const;
  auto s = tape.param_span(phase_h);
  return Eigen::Map<const Vec>(s.data(), k);
}

NodeId GlobalBasis::omega_node(Graph& g) const {
  if (trainable) return g.param(omega_h);
  return g.constant(omega_const);
}

NodeId GlobalBasis::phase_node(Graph& g) const {
  if (trainable) return g.param(phase_h);
  Mat row(1, k);
  row = phase_const.transpose();
  return g.constant(row);
}

// ---------------------------------------------------------------------------
// LatentGrid

LatentGrid LatentGrid::create(ParamTape& tape, Rng& rng, int d, int res,
                              int latent_dim) {
  if (res < 1) throw SchemaError("LatentGrid: resolution must be >= 1");
  LatentGrid gr;
  gr.d = d;
  gr.latent_dim = latent_dim;
  gr.res.assign(d, res);
  gr.strides.assign(d, 1);
  for (int a = d - 2; a >= 0; --a) {
    gr.strides[a] = gr.strides[a + 1] * (gr.res[a + 1] + 1);
  }
  gr.nodes = 1;
  for (int a = 0; a < d; ++a) gr.nodes *= gr.res[a] + 1;
  gr.features_h = tape.register_segment(
      "grid.features", {static_cast<int>(gr.nodes), latent_dim},
      InitSpec::normal(0.0, 0.1), rng);
  return gr;
}

InterpPlan LatentGrid::plan(const Mat& X) const {
  const int B = static_cast<int>(X.rows());
  const int corners = 1 << d;
  InterpPlan p;
  p.rows = B;
  p.corners = corners;
  p.idx.resize(static_cast<size_t>(B) * corners);
  p.w.resize(static_cast<size_t>(B) * corners);
  std::vector<int> cell(d);
  std::vector<double> t(d);
  for (int r = 0; r < B; ++r) {
    for (int a = 0; a < d; ++a) {
      const double x = X(r, a);
      if (x < -1.0 || x > 1.0) {
        throw DomainError("grid query outside [-1,1]: " + std::to_string(x));
      }
      const double u = (x + 1.0) * 0.5 * res[a];
      int c = static_cast<int>(std::floor(u));
      if (c >= res[a]) c = res[a] - 1;
      if (c < 0) c = 0;
      cell[a] = c;
      t[a] = u - c;
    }
    for (int m = 0; m < corners; ++m) {
      double w = 1.0;
      int64_t idx = 0;
      for (int a = 0; a < d; ++a) {
        const int bit = (m >> a) & 1;
        w *= bit ? t[a] : 1.0 - t[a];
        idx += static_cast<int64_t>(cell[a] + bit) * strides[a];
      }
      p.w[static_cast<size_t>(r) * corners + m] = w;
      p.idx[static_cast<size_t>(r) * corners + m] = static_cast<int32_t>(idx);
    }
  }
  return p;
}

InterpPlan LatentGrid::dplan(const Mat& X, int axis) const {
  const int B = static_cast<int>(X.rows());
  const int corners = 1 << d;
  InterpPlan p;
  p.rows = B;
  p.corners = corners;
  p.idx.resize(static_cast<size_t>(B) * corners);
  p.w.resize(static_cast<size_t>(B) * corners);
  std::vector<int> cell(d);
  std::vector<double> t(d);
  const double du_dx = 0.5 * res[axis];  // u = (x+1)/2 * res
  for (int r = 0; r < B; ++r) {
    for (int a = 0; a < d; ++a) {
      const double x = X(r, a);
      if (x < -1.0 || x > 1.0) {
        throw DomainError("grid query outside [-1,1]: " + std::to_string(x));
      }
      const double u = (x + 1.0) * 0.5 * res[a];
      int c = static_cast<int>(std::floor(u));
      if (c >= res[a]) c = res[a] - 1;
      if (c < 0) c = 0;
      cell[a] = c;
      t[a] = u - c;
    }
    for (int m = 0; m < corners; ++m) {
      double w = 1.0;
      int64_t idx = 0;
      for (int a = 0; a < d; ++a) {
        const int bit = (m >> a) & 1;
        if (a == axis) {
          w *= bit ? 1.0 : -1.0;
        } else {
          w *= bit ? t[a] : 1.0 - t[a];
        }
        idx += static_cast<int64_t>(cell[a] + bit) * strides[a];
      }
      p.w[static_cast<size_t>(r) * corners + m] = w * du_dx;
      p.idx[static_cast<size_t>(r) * corners + m] = static_cast<int32_t>(idx);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// NstrModel

std::unique_ptr<NstrModel> NstrModel::create(const ModelConfig& cfg, int d,
                                             int channels, int max_axis_res,
                                             uint64_t seed) {
  auto m = std::make_unique<NstrModel>();
  m->cfg_ = cfg;
  m->d_ = d;
  m->channels_ = channels;
  Rng rng(seed);
  const double omega_max =
      cfg.omega_max > 0 ? cfg.omega_max : kPi * max_axis_res / 4.0;
  m->basis_ =
      GlobalBasis::create(m->tape_, rng, cfg.k, d, omega_max, cfg.basis_trainable);
  m->grid_ = LatentGrid::create(m->tape_, rng, d, cfg.grid_res, cfg.latent_dim);
  m->hyper_ = Mlp::dense(m->tape_, rng, "hyper", cfg.latent_dim + d,
                         cfg.hyper_hidden, cfg.k);
  m->flow_ =
      Mlp::dense(m->tape_, rng, "flow", d + cfg.k, cfg.flow_hidden, cfg.k * d);
  const int dec_in = cfg.scalar_bottleneck ? 1 : cfg.k;
  m->decoder_ =
      Mlp::dense(m->tape_, rng, "decoder", dec_in, cfg.decoder_hidden, channels);
  return m;
}

NstrModel::SpectrumNodes NstrModel::build_spectrum(Graph& g, const Mat& X) const {
  SpectrumNodes out;
  out.x = g.constant(X);
  const int plan_id = g.add_plan(grid_.plan(X));
  out.z = g.grid_interp(g.param(grid_.features_h), plan_id);
  NodeId h = g.concat_cols(out.z, out.x);
  out.s = hyper_.build(g, h, &out.trace);
  return out;
}

NodeId NstrModel::build_modulated(Graph& g, NodeId x_node, NodeId s_node) const {
  NodeId phase = g.add_bias(g.matmul_nt(x_node, basis_.omega_node(g)),
                            basis_.phase_node(g));
  NodeId terms = g.mul(s_node, g.sin_of(phase));
  if (cfg_.scalar_bottleneck) return g.row_sum(terms);
  return terms;
}

NodeId NstrModel::build_forward(Graph& g, const Mat& X) const {
  SpectrumNodes sn = build_spectrum(g, X);
  NodeId feats = build_modulated(g, sn.x, sn.s);
  return decoder_.build(g, feats);
}

NodeId NstrModel::build_flow(Graph& g, NodeId x_node, NodeId s_node) const {
  return flow_.build(g, g.concat_cols(x_node, s_node));
}

NodeId NstrModel::build_grad_s(Graph& g, const Mat& X, GradMode mode,
                               double eps) const {
  const int B = static_cast<int>(X.rows());
  if (mode == GradMode::kAnalytic) {
    SpectrumNodes sn = build_spectrum(g, X);
    NodeId features = g.param(grid_.features_h);
    std::vector<NodeId> tangents;
    for (int a = 0; a < d_; ++a) {
      NodeId dz = g.grid_interp(features, g.add_plan(grid_.dplan(X, a)));
      Vec ea = Vec::Zero(d_);
      ea(a) = 1.0;
      NodeId th = g.concat_cols(dz, g.constant_rows(ea, B));
      tangents.push_back(hyper_.build_tangent(g, sn.trace, th));
    }
    return g.interleave_cols(tangents);
  }

  // Central differences with the stencil shifted to stay inside the domain.
  std::vector<NodeId> tangents;
  for (int a = 0; a < d_; ++a) {
    Mat xp = X, xm = X;
    for (int r = 0; r < B; ++r) {
      double hi = X(r, a) + eps, lo = X(r, a) - eps;
      if (hi > 1.0) {
        hi = 1.0;
        lo = 1.0 - 2.0 * eps;
      } else if (lo < -1.0) {
        lo = -1.0;
        hi = -1.0 + 2.0 * eps;
      }
      xp(r, a) = hi;
      xm(r, a) = lo;
    }
    NodeId sp = build_spectrum(g, xp).s;
    NodeId sm = build_spectrum(g, xm).s;
    tangents.push_back(g.scale(g.sub(sp, sm), 1.0 / (2.0 * eps)));
  }
  return g.interleave_cols(tangents);
}

Vec NstrModel::grid_sample(const Vec& x) const {
  Mat X(1, d_);
  X.row(0) = x.transpose();
  Graph g(tape_);
  NodeId z = g.grid_interp(g.param(grid_.features_h), g.add_plan(grid_.plan(X)));
  return g.value(z).row(0).transpose();
}

Vec NstrModel::spectrum(const Vec& x) const {
  Mat X(1, d_);
  X.row(0) = x.transpose();
  Graph g(tape_);
  return g.value(build_spectrum(g, X).s).row(0).transpose();
}

Mat NstrModel::spectrum_batch(const Mat& X) const {
  Graph g(tape_);
  return g.value(build_spectrum(g, X).s);
}

Vec NstrModel::modulated_features(const Vec& x) const {
  Mat X(1, d_);
  X.row(0) = x.transpose();
  Graph g(tape_);
  SpectrumNodes sn = build_spectrum(g, X);
  NodeId feats = build_modulated(g, sn.x, sn.s);
  return g.value(feats).row(0).transpose();
}

Mat NstrModel::flow_eval(const Vec& x, const Vec& s) const {
  Mat X(1, d_);
  X.row(0) = x.transpose();
  Mat S(1, cfg_.k);
  S.row(0) = s.transpose();
  Graph g(tape_);
  NodeId f = build_flow(g, g.constant(X), g.constant(S));
  Mat out(cfg_.k, d_);
  auto v = g.value(f);
  for (int k = 0; k < cfg_.k; ++k) {
    for (int a = 0; a < d_; ++a) out(k, a) = v(0, k * d_ + a);
  }
  return out;
}

Mat NstrModel::flow_batch(const Mat& X, const Mat& S) const {
  Graph g(tape_);
  return g.value(build_flow(g, g.constant(X), g.constant(S)));
}

Mat NstrModel::grad_s_batch(const Mat& X, GradMode mode) const {
  Graph g(tape_);
  return g.value(build_grad_s(g, X, mode));
}

VectorField NstrModel::spectrum_field() const {
  VectorField f;
  f.in_dim = d_;
  f.out_dim = cfg_.k;
  f.eval = [this](const Vec& x) { return spectrum(x); };
  f.analytic_jac = [this](const Vec& x) {
    Mat X(1, d_);
    X.row(0) = x.transpose();
    Mat row = grad_s_batch(X, GradMode::kAnalytic);
    Mat jac(cfg_.k, d_);
    for (int k = 0; k < cfg_.k; ++k) {
      for (int a = 0; a < d_; ++a) jac(k, a) = row(0, k * d_ + a);
    }
    return jac;
  };
  return f;
}

// ---------------------------------------------------------------------------

Mat eval_forward(const FieldModel& model, const Mat& X, int chunk) {
  const int B = static_cast<int>(X.rows());
  Mat out(B, model.channels());
  for (int start = 0; start < B; start += chunk) {
    const int n = std::min(chunk, B - start);
    Graph g(model.tape());
    NodeId y = model.build_forward(g, X.middleRows(start, n));
    out.middleRows(start, n) = g.value(y);
  }
  return out;
}

}  // namespace nstr
