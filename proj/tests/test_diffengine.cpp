#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nstr/graph.hpp"
#include "nstr/model.hpp"
#include "nstr/spatial.hpp"
#include "test_util.hpp"

using namespace nstr;
using nstr::testutil::fd_param_grad;
using nstr::testutil::rel_err;

TEST_CASE("tape registration: constant init and packing") {
  ParamTape tape;
  Rng rng(7);
  auto h = tape.register_segment("decoder.w1", {64, 16}, InitSpec::constant(0.0), rng);
  CHECK(tape.segment(h).size == 1024);
  for (double v : tape.param_span(h)) CHECK(v == 0.0);

  ParamTape t2;
  auto a = t2.register_segment("a", {3}, InitSpec::constant(1.0), rng);
  auto b = t2.register_segment("b", {5}, InitSpec::constant(2.0), rng);
  CHECK(t2.segment(a).offset == 0);
  CHECK(t2.segment(b).offset == 3);
  CHECK(t2.size() == 8);
  CHECK(t2.grads().size() == 8);
  for (double g : t2.grads()) CHECK(g == 0.0);
}

TEST_CASE("tape registration: duplicate name raises") {
  ParamTape tape;
  Rng rng(1);
  tape.register_segment("x", {2}, InitSpec::constant(0.0), rng);
  CHECK_THROWS_AS(tape.register_segment("x", {2}, InitSpec::constant(0.0), rng),
                  SchemaError);
}

TEST_CASE("siren-uniform init stays within the analytic bound") {
  ParamTape tape;
  Rng rng(99);
  const double bound = std::sqrt(6.0 / 16.0) / 30.0;
  auto h = tape.register_segment("w", {16, 64},
                                 InitSpec::siren_uniform(16, 30.0, false), rng);
  for (double v : tape.param_span(h)) {
    CHECK(std::abs(v) <= bound);
  }
  // first-layer rule: 1/fan_in
  auto h0 = tape.register_segment("w0", {16, 64},
                                  InitSpec::siren_uniform(16, 30.0, true), rng);
  for (double v : tape.param_span(h0)) {
    CHECK(std::abs(v) <= 1.0 / 16.0);
  }
}

TEST_CASE("grad_of_loss: quadratic analytic gradient") {
  ParamTape tape;
  Rng rng(1);
  auto h = tape.register_segment("p", {3}, InitSpec::constant(0.0), rng);
  auto s = tape.param_span(h);
  s[0] = 1;
  s[1] = 2;
  s[2] = 3;
  const double loss = grad_of_loss(tape, [&](Graph& g) {
    NodeId p = g.param(h);
    return g.scaled_sum(g.mul(p, p), 1.0);
  });
  CHECK(loss == doctest::Approx(14.0));
  CHECK(tape.grads()[0] == doctest::Approx(2.0));
  CHECK(tape.grads()[1] == doctest::Approx(4.0));
  CHECK(tape.grads()[2] == doctest::Approx(6.0));
}

TEST_CASE("grad_of_loss: constant loss leaves gradients zero") {
  ParamTape tape;
  Rng rng(1);
  tape.register_segment("p", {4}, InitSpec::normal(0, 1), rng);
  Mat one(1, 1);
  one(0, 0) = 3.5;
  const double loss =
      grad_of_loss(tape, [&](Graph& g) { return g.constant(one); });
  CHECK(loss == 3.5);
  for (double g : tape.grads()) CHECK(g == 0.0);
}

TEST_CASE("gradient accumulation is additive") {
  ParamTape tape;
  Rng rng(3);
  auto h = tape.register_segment("p", {3}, InitSpec::normal(0, 1), rng);
  auto build = [&](Graph& g) {
    NodeId p = g.param(h);
    return g.scaled_sum(g.mul(p, p), 1.0);
  };
  grad_of_loss(tape, build);
  std::vector<double> once = tape.grads();
  grad_of_loss(tape, build);
  for (size_t i = 0; i < tape.size(); ++i) {
    CHECK(tape.grads()[i] == 2.0 * once[i]);
  }
}

TEST_CASE("grad_of_loss: random 2-layer MLP matches finite differences") {
  for (uint64_t seed : {11u, 22u, 33u}) {
    ParamTape tape;
    Rng rng(seed);
    Mlp mlp = Mlp::dense(tape, rng, "mlp", 3, {8}, 2);
    Mat x(4, 3);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    Mat y(4, 2);
    for (int i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-1, 1);

    auto build = [&](Graph& g) {
      NodeId out = mlp.build(g, g.constant(x));
      NodeId diff = g.sub(out, g.constant(y));
      return g.scaled_sum(g.mul(diff, diff), 1.0 / 8.0);
    };
    auto value = [&]() {
      Graph g(tape);
      return g.scalar(build(g));
    };
    tape.zero_grads();
    grad_of_loss(tape, build);
    Rng pick(seed + 1);
    for (int trial = 0; trial < 24; ++trial) {
      const size_t idx = pick.index(tape.size());
      const double fd = fd_param_grad(tape, value, idx);
      CHECK(rel_err(tape.grads()[idx], fd) < 1e-4);
    }
  }
}

TEST_CASE("spatial_jacobian fd: linear field") {
  VectorField f;
  f.in_dim = 2;
  f.out_dim = 2;
  f.eval = [](const Vec& x) {
    Vec y(2);
    y(0) = x(0);
    y(1) = 2.0 * x(1);
    return y;
  };
  Vec x(2);
  x << 0.3, -0.4;
  Mat j = spatial_jacobian(f, x, GradMode::kFd);
  CHECK(j(0, 0) == doctest::Approx(1.0));
  CHECK(j(0, 1) == doctest::Approx(0.0));
  CHECK(j(1, 0) == doctest::Approx(0.0));
  CHECK(j(1, 1) == doctest::Approx(2.0));
}

TEST_CASE("spatial_jacobian fd: sin(3x) derivative at 0") {
  VectorField f;
  f.in_dim = 1;
  f.out_dim = 1;
  f.eval = [](const Vec& x) {
    Vec y(1);
    y(0) = std::sin(3.0 * x(0));
    return y;
  };
  Vec x(1);
  x << 0.0;
  Mat j = spatial_jacobian(f, x, GradMode::kFd);
  CHECK(j(0, 0) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("spectrum field: analytic Jacobian matches fd away from cell edges") {
  ModelConfig cfg;
  cfg.k = 6;
  cfg.latent_dim = 5;
  cfg.grid_res = 4;
  cfg.hyper_hidden = {16};
  cfg.flow_hidden = {8};
  cfg.decoder_hidden = {8};
  auto model = NstrModel::create(cfg, 2, 1, 32, 42);
  VectorField field = model->spectrum_field();

  Rng rng(5);
  int tested = 0;
  while (tested < 50) {
    Vec x(2);
    x << rng.uniform(-0.95, 0.95), rng.uniform(-0.95, 0.95);
    // keep away from the C0 cell boundaries
    bool ok = true;
    for (int a = 0; a < 2; ++a) {
      const double u = (x(a) + 1.0) * 0.5 * cfg.grid_res;
      if (std::abs(u - std::round(u)) * 2.0 / cfg.grid_res < 2e-3) ok = false;
    }
    if (!ok) continue;
    ++tested;
    Mat ja = spatial_jacobian(field, x, GradMode::kAnalytic);
    Mat jf = spatial_jacobian(field, x, GradMode::kFd, 1e-4);
    for (int i = 0; i < ja.rows(); ++i) {
      for (int j = 0; j < ja.cols(); ++j) {
        CHECK(std::abs(ja(i, j) - jf(i, j)) < 1e-3);
      }
    }
  }
}

TEST_CASE("ops raise on non-finite values") {
  ParamTape tape;
  Mat bad(1, 2);
  bad(0, 0) = 1.0;
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  Graph g(tape);
  CHECK_THROWS_AS(g.constant(bad), NumericError);

  Mat big(1, 1);
  big(0, 0) = 1e308;
  Graph g2(tape);
  NodeId b = g2.constant(big);
  CHECK_THROWS_AS(g2.mul(b, b), NumericError);  // overflow to inf
}

TEST_CASE("graph op values: composite wiring") {
  // matmul + bias + tanh + concat + interleave round out the op vocabulary
  ParamTape tape;
  Graph g(tape);
  Mat a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 10, 20, 30, 40;
  NodeId na = g.constant(a), nb = g.constant(b);
  NodeId inter = g.interleave_cols({na, nb});
  auto v = g.value(inter);
  CHECK(v(0, 0) == 1);
  CHECK(v(0, 1) == 10);
  CHECK(v(0, 2) == 2);
  CHECK(v(0, 3) == 20);
  CHECK(v(1, 2) == 4);
  CHECK(v(1, 3) == 40);

  NodeId rs = g.row_sum(na);
  CHECK(g.value(rs)(0, 0) == 3);
  CHECK(g.value(rs)(1, 0) == 7);
}
