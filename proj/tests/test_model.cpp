#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nstr/model.hpp"
#include "nstr/optim.hpp"

using namespace nstr;

namespace {

void fill_segment(ParamTape& tape, const std::string& name, double value) {
  auto h = tape.find(name);
  REQUIRE(h.valid());
  for (double& v : tape.param_span(h)) v = value;
}

void set_segment(ParamTape& tape, const std::string& name,
                 const std::vector<double>& values) {
  auto h = tape.find(name);
  REQUIRE(h.valid());
  auto span = tape.param_span(h);
  REQUIRE(span.size() == values.size());
  std::copy(values.begin(), values.end(), span.begin());
}

void zero_mlp(ParamTape& tape, const std::string& prefix, int layers) {
  for (int i = 0; i < layers; ++i) {
    fill_segment(tape, prefix + ".w" + std::to_string(i), 0.0);
    fill_segment(tape, prefix + ".b" + std::to_string(i), 0.0);
  }
}

// Plain-loop MLP evaluation, independent of the graph engine.
Vec manual_mlp(const ParamTape& tape, const Mlp& m, Vec h) {
  for (size_t layer = 0; layer < m.w.size(); ++layer) {
    auto W = tape.param_span(m.w[layer]);
    auto b = tape.param_span(m.b[layer]);
    const int in = m.widths[layer];
    const int out = m.widths[layer + 1];
    Vec y(out);
    for (int j = 0; j < out; ++j) {
      double acc = b[j];
      for (int i = 0; i < in; ++i) acc += h(i) * W[static_cast<size_t>(i) * out + j];
      y(j) = acc;
    }
    if (layer + 1 < m.w.size()) {
      if (m.act == Mlp::Act::kSine) {
        for (int j = 0; j < out; ++j) y(j) = std::sin(m.omega0 * y(j));
      } else {
        for (int j = 0; j < out; ++j) y(j) = std::tanh(y(j));
      }
    }
    h = y;
  }
  return h;
}

// Bilinear interpolation written from scratch for the oracle.
Vec manual_grid_sample(const ParamTape& tape, const LatentGrid& grid, const Vec& x) {
  auto F = tape.param_span(grid.features_h);
  const int L = grid.latent_dim;
  std::vector<int> cell(grid.d);
  std::vector<double> t(grid.d);
  for (int a = 0; a < grid.d; ++a) {
    double u = (x(a) + 1.0) * 0.5 * grid.res[a];
    int c = static_cast<int>(std::floor(u));
    c = std::min(c, grid.res[a] - 1);
    c = std::max(c, 0);
    cell[a] = c;
    t[a] = u - c;
  }
  Vec z = Vec::Zero(L);
  for (int m = 0; m < (1 << grid.d); ++m) {
    double w = 1.0;
    int64_t idx = 0;
    for (int a = 0; a < grid.d; ++a) {
      const int bit = (m >> a) & 1;
      w *= bit ? t[a] : 1.0 - t[a];
      idx += static_cast<int64_t>(cell[a] + bit) * grid.strides[a];
    }
    for (int l = 0; l < L; ++l) z(l) += w * F[idx * L + l];
  }
  return z;
}

}  // namespace

TEST_CASE("grid_sample: 1-D midpoint, node-exact, and cell-center queries") {
  ModelConfig cfg;
  cfg.k = 1;
  cfg.latent_dim = 1;
  cfg.grid_res = 1;
  cfg.hyper_hidden = {};
  cfg.flow_hidden = {};
  cfg.decoder_hidden = {};

  auto m1 = NstrModel::create(cfg, 1, 1, 16, 1);
  set_segment(m1->tape(), "grid.features", {0.0, 4.0});
  Vec x(1);
  x << 0.0;
  CHECK(m1->grid_sample(x)(0) == doctest::Approx(2.0));

  auto m2 = NstrModel::create(cfg, 2, 1, 16, 1);
  set_segment(m2->tape(), "grid.features", {1.0, 2.0, 3.0, 4.0});
  Vec center(2);
  center << 0.0, 0.0;
  CHECK(m2->grid_sample(center)(0) == doctest::Approx(2.5));
  // exact node query returns that node's feature exactly
  Vec corner(2);
  corner << -1.0, -1.0;
  CHECK(m2->grid_sample(corner)(0) == 1.0);
  Vec corner2(2);
  corner2 << 1.0, 1.0;
  CHECK(m2->grid_sample(corner2)(0) == 4.0);
}

TEST_CASE("grid_sample: out-of-domain query raises") {
  ModelConfig cfg;
  cfg.k = 2;
  cfg.latent_dim = 2;
  cfg.grid_res = 2;
  cfg.hyper_hidden = {4};
  auto m = NstrModel::create(cfg, 2, 1, 16, 1);
  Vec x(2);
  x << 1.2, 0.0;
  CHECK_THROWS_AS(m->grid_sample(x), DomainError);
}

TEST_CASE("grid interpolation weights are a partition of unity") {
  ModelConfig cfg;
  cfg.k = 2;
  cfg.latent_dim = 3;
  cfg.grid_res = 5;
  auto m = NstrModel::create(cfg, 2, 1, 16, 3);
  fill_segment(m->tape(), "grid.features", 0.731);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    Vec x(2);
    x << rng.uniform(-1, 1), rng.uniform(-1, 1);
    Vec z = m->grid_sample(x);
    for (int l = 0; l < 3; ++l) CHECK(z(l) == doctest::Approx(0.731).epsilon(1e-12));
  }
}

TEST_CASE("spectrum: zero-weight hypernet yields its output bias everywhere") {
  ModelConfig cfg;
  cfg.k = 3;
  cfg.latent_dim = 4;
  cfg.grid_res = 4;
  cfg.hyper_hidden = {8};
  auto m = NstrModel::create(cfg, 2, 1, 16, 3);
  zero_mlp(m->tape(), "hyper", 2);
  set_segment(m->tape(), "hyper.b1", {0.5, -1.5, 2.0});
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    Vec x(2);
    x << rng.uniform(-1, 1), rng.uniform(-1, 1);
    Vec s = m->spectrum(x);
    CHECK(s(0) == doctest::Approx(0.5));
    CHECK(s(1) == doctest::Approx(-1.5));
    CHECK(s(2) == doctest::Approx(2.0));
  }
}

TEST_CASE("spectrum: identity hypernet tracks interpolated grid features") {
  ModelConfig cfg;
  cfg.k = 1;
  cfg.latent_dim = 1;
  cfg.grid_res = 1;
  cfg.hyper_hidden = {};  // single affine layer [z,x] -> S
  auto m = NstrModel::create(cfg, 1, 1, 16, 1);
  set_segment(m->tape(), "grid.features", {0.0, 4.0});
  set_segment(m->tape(), "hyper.w0", {1.0, 0.0});  // S = z
  set_segment(m->tape(), "hyper.b0", {0.0});
  for (double x1 : {-1.0, -0.5, 0.0, 0.25, 1.0}) {
    Vec x(1);
    x << x1;
    CHECK(m->spectrum(x)(0) == doctest::Approx(2.0 * (x1 + 1.0)));
  }
}

TEST_CASE("spectrum Lipschitz probe (reported, not asserted)") {
  ModelConfig cfg;
  cfg.k = 4;
  cfg.latent_dim = 4;
  cfg.grid_res = 8;
  cfg.hyper_hidden = {16};
  auto m = NstrModel::create(cfg, 2, 1, 32, 17);
  Rng rng(3);
  double lip = 0;
  for (int i = 0; i < 500; ++i) {
    Vec x(2);
    x << rng.uniform(-0.99, 0.99), rng.uniform(-0.99, 0.99);
    Vec dx(2);
    dx << rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3);
    Vec x2 = x + dx;
    const double num = (m->spectrum(x2) - m->spectrum(x)).norm();
    const double den = dx.norm();
    if (den > 0) lip = std::max(lip, num / den);
  }
  MESSAGE("empirical spectrum Lipschitz constant: ", lip);
  CHECK(std::isfinite(lip));
}

TEST_CASE("modulated_features: zero spectrum, unit cases, two-term sum") {
  ModelConfig cfg;
  cfg.k = 1;
  cfg.latent_dim = 2;
  cfg.grid_res = 2;
  cfg.hyper_hidden = {4};
  auto m = NstrModel::create(cfg, 1, 1, 16, 5);

  zero_mlp(m->tape(), "hyper", 2);
  Vec x(1);
  x << 0.3;
  CHECK(m->modulated_features(x)(0) == 0.0);  // S == 0

  // K=1, S=1, omega=0, b=pi/2 -> sin(pi/2) = 1
  set_segment(m->tape(), "hyper.b1", {1.0});
  set_segment(m->tape(), "basis.omega", {0.0});
  set_segment(m->tape(), "basis.phase", {kPi / 2.0});
  CHECK(m->modulated_features(x)(0) == doctest::Approx(1.0));

  // K=2, S=(1,2), omega=(pi,2pi), b=0 at x=0.5 -> 1*sin(pi/2) + 2*sin(pi) = 1
  ModelConfig cfg2 = cfg;
  cfg2.k = 2;
  auto m2 = NstrModel::create(cfg2, 1, 1, 16, 5);
  zero_mlp(m2->tape(), "hyper", 2);
  set_segment(m2->tape(), "hyper.b1", {1.0, 2.0});
  set_segment(m2->tape(), "basis.omega", {kPi, 2.0 * kPi});
  set_segment(m2->tape(), "basis.phase", {0.0, 0.0});
  Vec xh(1);
  xh << 0.5;
  const Vec terms = m2->modulated_features(xh);
  CHECK(terms.sum() == doctest::Approx(1.0));
}

TEST_CASE("forward: identity decoder and constant decoder") {
  ModelConfig cfg;
  cfg.k = 1;
  cfg.latent_dim = 1;
  cfg.grid_res = 1;
  cfg.hyper_hidden = {};
  cfg.decoder_hidden = {};
  cfg.scalar_bottleneck = true;
  auto m = NstrModel::create(cfg, 1, 1, 16, 2);
  zero_mlp(m->tape(), "hyper", 1);
  set_segment(m->tape(), "hyper.b0", {1.0});            // S = 1
  set_segment(m->tape(), "basis.omega", {0.0});
  set_segment(m->tape(), "basis.phase", {kPi / 2.0});   // feature = 1
  set_segment(m->tape(), "decoder.w0", {1.0});
  set_segment(m->tape(), "decoder.b0", {0.0});
  Mat X(1, 1);
  X(0, 0) = -0.2;
  CHECK(eval_forward(*m, X)(0, 0) == doctest::Approx(1.0));

  // zero decoder weights, bias c
  set_segment(m->tape(), "decoder.w0", {0.0});
  set_segment(m->tape(), "decoder.b0", {0.77});
  Mat X2(3, 1);
  X2 << -0.9, 0.1, 0.8;
  Mat y = eval_forward(*m, X2);
  for (int i = 0; i < 3; ++i) CHECK(y(i, 0) == doctest::Approx(0.77));
}

TEST_CASE("forward matches a from-scratch recomputation") {
  ModelConfig cfg;
  cfg.k = 5;
  cfg.latent_dim = 3;
  cfg.grid_res = 3;
  cfg.hyper_hidden = {7};
  cfg.decoder_hidden = {6};
  auto m = NstrModel::create(cfg, 2, 2, 32, 123);

  Rng rng(55);
  for (int trial = 0; trial < 30; ++trial) {
    Vec x(2);
    x << rng.uniform(-1, 1), rng.uniform(-1, 1);
    Mat X(1, 2);
    X.row(0) = x.transpose();
    Mat got = eval_forward(*m, X);

    // independent path: manual interpolation + manual MLPs
    Vec z = manual_grid_sample(m->tape(), m->grid(), x);
    Vec h(z.size() + 2);
    h << z, x;
    Vec s = manual_mlp(m->tape(), m->hyper(), h);
    Mat omega = m->basis().omega(m->tape());
    Vec phase = m->basis().phase(m->tape());
    Vec terms(cfg.k);
    for (int i = 0; i < cfg.k; ++i) {
      terms(i) = s(i) * std::sin(omega.row(i).dot(x.transpose()) + phase(i));
    }
    Vec want = manual_mlp(m->tape(), m->decoder(), terms);
    for (int c = 0; c < 2; ++c) {
      CHECK(got(0, c) == doctest::Approx(want(c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward is deterministic bit for bit") {
  ModelConfig cfg;
  cfg.k = 4;
  cfg.latent_dim = 4;
  cfg.grid_res = 4;
  auto m = NstrModel::create(cfg, 2, 1, 64, 9);
  Mat X(17, 2);
  Rng rng(2);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform(-1, 1);
  Mat a = eval_forward(*m, X);
  Mat b = eval_forward(*m, X);
  for (int i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("flow_eval: bias reshape convention and manual recomputation") {
  ModelConfig cfg;
  cfg.k = 3;
  cfg.latent_dim = 2;
  cfg.grid_res = 2;
  cfg.flow_hidden = {5};
  auto m = NstrModel::create(cfg, 2, 1, 16, 31);

  zero_mlp(m->tape(), "flow", 2);
  Vec x(2);
  x << 0.2, -0.3;
  Vec s(3);
  s << 1.0, -1.0, 0.5;
  Mat f0 = m->flow_eval(x, s);
  CHECK(f0.cwiseAbs().maxCoeff() == 0.0);

  std::vector<double> beta(3 * 2);
  for (size_t i = 0; i < beta.size(); ++i) beta[i] = 0.1 * (i + 1);
  set_segment(m->tape(), "flow.b1", beta);
  Mat f1 = m->flow_eval(x, s);
  for (int k = 0; k < 3; ++k) {
    for (int a = 0; a < 2; ++a) {
      CHECK(f1(k, a) == doctest::Approx(beta[static_cast<size_t>(k) * 2 + a]));
    }
  }

  // random weights vs manual affine+tanh chain
  auto m2 = NstrModel::create(cfg, 2, 1, 16, 77);
  Vec in(2 + 3);
  in << x, s;
  Vec want = manual_mlp(m2->tape(), m2->flow(), in);
  Mat got = m2->flow_eval(x, s);
  for (int k = 0; k < 3; ++k) {
    for (int a = 0; a < 2; ++a) {
      CHECK(got(k, a) == doctest::Approx(want(k * 2 + a)).epsilon(1e-12));
    }
  }
}

TEST_CASE("scaling the spectrum scales the modulation stage linearly") {
  ModelConfig cfg;
  cfg.k = 4;
  cfg.latent_dim = 3;
  cfg.grid_res = 3;
  cfg.hyper_hidden = {6};
  auto m = NstrModel::create(cfg, 2, 1, 16, 8);
  Vec x(2);
  x << 0.4, 0.1;
  Vec before = m->modulated_features(x);

  // scale S by alpha by scaling the (linear) hyper output layer
  const double alpha = 2.5;
  for (const char* name : {"hyper.w1", "hyper.b1"}) {
    auto h = m->tape().find(name);
    for (double& v : m->tape().param_span(h)) v *= alpha;
  }
  Vec after = m->modulated_features(x);
  for (int i = 0; i < before.size(); ++i) {
    CHECK(after(i) == doctest::Approx(alpha * before(i)).epsilon(1e-12));
  }
}

TEST_CASE("frozen basis stays constant through optimizer steps") {
  ModelConfig cfg;
  cfg.k = 4;
  cfg.latent_dim = 3;
  cfg.grid_res = 3;
  cfg.hyper_hidden = {6};
  cfg.decoder_hidden = {6};
  cfg.flow_hidden = {6};
  cfg.basis_trainable = false;
  auto m = NstrModel::create(cfg, 1, 1, 16, 21);
  CHECK_FALSE(m->tape().find("basis.omega").valid());
  const Mat omega0 = m->basis().omega(m->tape());
  const Vec phase0 = m->basis().phase(m->tape());

  // a few steps of descent on a toy target
  SignalDataset ds = make_chirp(64, 1.0, 3.0);
  TrainConfig tc;
  tc.iterations = 20;
  tc.batch_size = 16;
  tc.adam.lr = 1e-2;
  tc.log_every = 10;
  train(*m, ds, tc);

  const Mat omega1 = m->basis().omega(m->tape());
  const Vec phase1 = m->basis().phase(m->tape());
  CHECK((omega1 - omega0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((phase1 - phase0).cwiseAbs().maxCoeff() == 0.0);

  // trainable twin has the same drawn values registered on the tape
  ModelConfig cfg2 = cfg;
  cfg2.basis_trainable = true;
  auto m2 = NstrModel::create(cfg2, 1, 1, 16, 21);
  CHECK(m2->tape().find("basis.omega").valid());
  CHECK((m2->basis().omega(m2->tape()) - omega0).cwiseAbs().maxCoeff() == 0.0);
}
