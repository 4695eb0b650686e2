#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nstr/baselines.hpp"
#include "nstr/data.hpp"
#include "nstr/optim.hpp"
#include "test_util.hpp"

using namespace nstr;
using nstr::testutil::fd_param_grad;
using nstr::testutil::rel_err;

TEST_CASE("fourier_embed: x = 0 gives all-zero sines and all-one cosines") {
  Mat freq(5, 2);
  Rng rng(1);
  for (int i = 0; i < freq.size(); ++i) freq.data()[i] = rng.normal(0, 3);
  Vec x = Vec::Zero(2);
  Vec e = fourier_embed(x, freq);
  for (int i = 0; i < 5; ++i) {
    CHECK(e(i) == 0.0);
    CHECK(e(5 + i) == 1.0);
  }
}

TEST_CASE("fourier_embed: single unit frequency at x = 0.25") {
  Mat freq(1, 1);
  freq(0, 0) = 1.0;
  Vec x(1);
  x << 0.25;
  Vec e = fourier_embed(x, freq);
  CHECK(e(0) == doctest::Approx(1.0));          // sin(pi/2)
  CHECK(e(1) == doctest::Approx(0.0).epsilon(1e-12));  // cos(pi/2)
}

TEST_CASE("fourier_embed: squared norm equals the feature count everywhere") {
  Mat freq(16, 2);
  Rng rng(4);
  for (int i = 0; i < freq.size(); ++i) freq.data()[i] = rng.normal(0, 10);
  for (int trial = 0; trial < 50; ++trial) {
    Vec x(2);
    x << rng.uniform(-1, 1), rng.uniform(-1, 1);
    CHECK(fourier_embed(x, freq).squaredNorm() == doctest::Approx(16.0));
  }
}

TEST_CASE("siren: zero weights with output bias c is c everywhere") {
  ModelConfig cfg;
  cfg.kind = "siren";
  cfg.siren_hidden = {8, 8};
  auto m = Siren::create(cfg, 2, 1, 3);
  for (auto& seg : m->tape().params()) seg = 0.0;
  auto h = m->tape().find("siren.b2");
  m->tape().param_span(h)[0] = 0.42;
  Mat X(5, 2);
  Rng rng(2);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform(-1, 1);
  Mat y = eval_forward(*m, X);
  for (int i = 0; i < 5; ++i) CHECK(y(i, 0) == doctest::Approx(0.42));
}

TEST_CASE("siren: single-unit preactivation follows the omega0 convention") {
  ModelConfig cfg;
  cfg.kind = "siren";
  cfg.siren_hidden = {1};
  cfg.siren_omega0 = 30.0;
  auto m = Siren::create(cfg, 1, 1, 8);
  // net: x -> sin(30*(w x + b)) -> u*. + c
  const double w = m->tape().param_span(m->tape().find("siren.w0"))[0];
  const double b = m->tape().param_span(m->tape().find("siren.b0"))[0];
  const double u = m->tape().param_span(m->tape().find("siren.w1"))[0];
  const double c = m->tape().param_span(m->tape().find("siren.b1"))[0];
  for (double xv : {-0.7, -0.1, 0.33, 0.92}) {
    Mat X(1, 1);
    X(0, 0) = xv;
    const double want = u * std::sin(30.0 * (w * xv + b)) + c;
    CHECK(eval_forward(*m, X)(0, 0) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("siren: initialization bounds hold for every layer") {
  ModelConfig cfg;
  cfg.kind = "siren";
  cfg.siren_hidden = {32, 32, 32};
  cfg.siren_omega0 = 30.0;
  auto m = Siren::create(cfg, 2, 1, 123);
  auto check_bound = [&](const std::string& name, double bound) {
    for (double v : m->tape().param_span(m->tape().find(name))) {
      CHECK(std::abs(v) <= bound);
    }
  };
  check_bound("siren.w0", 1.0 / 2.0);  // first layer: 1/fan_in
  check_bound("siren.w1", std::sqrt(6.0 / 32.0) / 30.0);
  check_bound("siren.w2", std::sqrt(6.0 / 32.0) / 30.0);
  check_bound("siren.w3", std::sqrt(6.0 / 32.0) / 30.0);
}

TEST_CASE("siren: gradients match finite differences") {
  ModelConfig cfg;
  cfg.kind = "siren";
  cfg.siren_hidden = {12, 12};
  auto m = Siren::create(cfg, 2, 1, 31);
  Rng rng(9);
  Mat xs(6, 2), ys(6, 1);
  for (int i = 0; i < xs.size(); ++i) xs.data()[i] = rng.uniform(-1, 1);
  for (int i = 0; i < ys.size(); ++i) ys.data()[i] = rng.uniform(-1, 1);
  auto build = [&](Graph& g) {
    NodeId out = m->build_forward(g, xs);
    NodeId diff = g.sub(out, g.constant(ys));
    return g.scaled_sum(g.mul(diff, diff), 1.0 / 6.0);
  };
  auto value = [&]() {
    Graph g(m->tape());
    return g.scalar(build(g));
  };
  m->tape().zero_grads();
  grad_of_loss(m->tape(), build);
  Rng pick(10);
  for (int trial = 0; trial < 64; ++trial) {
    const size_t idx = pick.index(m->tape().size());
    const double fd = fd_param_grad(m->tape(), value, idx);
    CHECK(rel_err(m->tape().grads()[idx], fd) < 1e-3);
  }
}

TEST_CASE("param_count: linear layer and frozen-basis exclusion") {
  // 16 -> 4 with bias
  ParamTape tape;
  Rng rng(1);
  Mlp m = Mlp::dense(tape, rng, "lin", 16, {}, 4);
  CHECK(m.param_count() == 68);
  CHECK(tape.size() == 68);

  // NSTR default-config count vs a hand sum
  ModelConfig cfg;  // K=16, latent 16, grid 16, hyper/flow/decoder 2x64
  auto nstr = NstrModel::create(cfg, 2, 1, 64, 7);
  const int64_t basis = 16 * 2 + 16;
  const int64_t grid = 17LL * 17 * 16;
  const int64_t hyper = (18 + 1) * 64 + (64 + 1) * 64 + (64 + 1) * 16;
  const int64_t flow = (18 + 1) * 64 + (64 + 1) * 64 + (64 + 1) * 32;
  const int64_t dec = (16 + 1) * 64 + (64 + 1) * 64 + (64 + 1) * 1;
  CHECK(nstr->param_count() == basis + grid + hyper + flow + dec);

  // frozen global basis is excluded from the trainable count
  ModelConfig frozen = cfg;
  frozen.basis_trainable = false;
  auto nstr2 = NstrModel::create(frozen, 2, 1, 64, 7);
  CHECK(nstr2->param_count() == nstr->param_count() - basis);
}

TEST_CASE("matched-parameter sizing lands within 5 percent") {
  ModelConfig base;  // default NSTR
  auto nstr = NstrModel::create(base, 2, 1, 64, 3);
  const int64_t target = nstr->param_count();

  ModelConfig fcfg;
  fcfg.kind = "fourier";
  fcfg.fourier_features = 256;
  match_params(fcfg, target, 2, 1);
  auto fm = FourierMlp::create(fcfg, 2, 1, 5);
  CHECK(std::abs(static_cast<double>(fm->param_count() - target)) / target < 0.05);

  ModelConfig scfg;
  scfg.kind = "siren";
  match_params(scfg, target, 2, 1);
  auto sm = Siren::create(scfg, 2, 1, 5);
  CHECK(std::abs(static_cast<double>(sm->param_count() - target)) / target < 0.05);
}

TEST_CASE("all model kinds share the same batch-sampling stream") {
  SignalDataset ds = make_chirp(512, 2.0, 8.0);
  TrainConfig tc;
  tc.iterations = 3;
  tc.batch_size = 64;
  tc.seed = 99;
  tc.log_every = 1;

  ModelConfig nc;
  nc.k = 4;
  nc.latent_dim = 4;
  nc.grid_res = 4;
  nc.hyper_hidden = {8};
  nc.flow_hidden = {8};
  nc.decoder_hidden = {8};
  auto nstr = NstrModel::create(nc, 1, 1, 64, 1);
  ModelConfig fc;
  fc.kind = "fourier";
  fc.fourier_features = 16;
  fc.fourier_width = 8;
  auto fourier = FourierMlp::create(fc, 1, 1, 1);
  ModelConfig sc;
  sc.kind = "siren";
  sc.siren_hidden = {8, 8};
  auto siren = Siren::create(sc, 1, 1, 1);

  TrainReport rn = train(*nstr, ds, tc);
  TrainReport rf = train(*fourier, ds, tc);
  TrainReport rs = train(*siren, ds, tc);
  REQUIRE(rn.sample_trace.size() == 64);
  CHECK(rn.sample_trace == rf.sample_trace);
  CHECK(rn.sample_trace == rs.sample_trace);
}
