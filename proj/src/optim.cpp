#include "nstr/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace nstr {

void adam_step(ParamTape& tape, AdamState& state) {
  const size_t n = tape.size();
  if (state.m.size() != n) throw SchemaError("adam state size mismatch");
  state.t += 1;
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  double* p = tape.params().data();
  double* g = tape.grads().data();
  for (size_t i = 0; i < n; ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g[i] * g[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    p[i] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
    if (!std::isfinite(p[i])) throw NumericError("adam: non-finite update");
  }
  tape.zero_grads();
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("NSTR_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return std::min(t, 64);
  }
  return 1;
}

namespace {

constexpr int kChunk = 256;

struct StepScratch {
  std::vector<std::unique_ptr<Graph>> graphs;  // one per chunk slot, reused
  std::vector<std::vector<double>> grad_bufs;
  std::vector<double> task_sums, pde_sums, smooth_sums;
};

// Evaluates loss sums + gradients for fixed chunk boundaries. Reductions
// always run in chunk order so results do not depend on the thread count.
LossTerms step_losses(FieldModel& model, const Mat& xs, const Mat& ys,
                      const Mat& pde_xs, const TrainConfig& cfg, int threads,
                      StepScratch& scratch, bool want_grads) {
  const int B = static_cast<int>(xs.rows());
  const int C = static_cast<int>(ys.cols());
  const int n_chunks = (B + kChunk - 1) / kChunk;
  const bool has_pde = pde_xs.rows() > 0;
  const double n_task = static_cast<double>(B) * C;
  const double n_pde = has_pde ? static_cast<double>(pde_xs.rows()) : 1.0;

  scratch.task_sums.assign(n_chunks, 0.0);
  scratch.pde_sums.assign(n_chunks, 0.0);
  scratch.smooth_sums.assign(n_chunks, 0.0);
  while (scratch.graphs.size() < static_cast<size_t>(n_chunks)) {
    scratch.graphs.push_back(std::make_unique<Graph>(model.tape()));
  }
  if (want_grads) {
    scratch.grad_bufs.resize(n_chunks);
    for (auto& buf : scratch.grad_bufs) buf.assign(model.tape().size(), 0.0);
  }

  auto run_chunk = [&](int ci) {
    const int s = ci * kChunk;
    const int e = std::min(B, s + kChunk);
    const Mat cxs = xs.middleRows(s, e - s);
    const Mat cys = ys.middleRows(s, e - s);
    Mat cpde;
    if (has_pde) {
      const int ps = 2 * s;
      const int pe = std::min<int>(static_cast<int>(pde_xs.rows()), 2 * e);
      cpde = pde_xs.middleRows(ps, pe - ps);
    }
    Graph& g = *scratch.graphs[ci];
    g.reset();
    ChunkSums sums = build_loss_sums(g, model, cxs, cys, cpde, cfg.task,
                                     cfg.grad_mode);
    scratch.task_sums[ci] = g.scalar(sums.task);
    NodeId root = g.scale(sums.task, 1.0 / n_task);
    if (sums.pde >= 0) {
      scratch.pde_sums[ci] = g.scalar(sums.pde);
      scratch.smooth_sums[ci] = g.scalar(sums.smooth);
      root = g.add(root, g.scale(sums.pde, cfg.weights.lambda_pde / n_pde));
      root = g.add(root, g.scale(sums.smooth, cfg.weights.lambda_smooth / n_pde));
    }
    if (want_grads) {
      g.backward(root, std::span<double>(scratch.grad_bufs[ci]));
    }
  };

  if (threads <= 1 || n_chunks <= 1) {
    for (int ci = 0; ci < n_chunks; ++ci) run_chunk(ci);
  } else {
    const int T = std::min(threads, n_chunks);
    std::vector<std::thread> pool;
    pool.reserve(T);
    std::exception_ptr err;
    std::mutex err_mu;
    for (int t = 0; t < T; ++t) {
      pool.emplace_back([&, t]() {
        try {
          for (int ci = t; ci < n_chunks; ci += T) run_chunk(ci);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }

  if (want_grads) {
    double* g = model.tape().grads().data();
    for (int ci = 0; ci < n_chunks; ++ci) {
      const double* src = scratch.grad_bufs[ci].data();
      for (size_t i = 0; i < model.tape().size(); ++i) g[i] += src[i];
    }
  }

  LossTerms t;
  for (int ci = 0; ci < n_chunks; ++ci) t.task += scratch.task_sums[ci];
  t.task /= n_task;
  if (has_pde) {
    for (int ci = 0; ci < n_chunks; ++ci) {
      t.pde += scratch.pde_sums[ci];
      t.smooth += scratch.smooth_sums[ci];
    }
    t.pde /= n_pde;
    t.smooth /= n_pde;
  }
  t.total = t.task + cfg.weights.lambda_pde * t.pde +
            cfg.weights.lambda_smooth * t.smooth;
  return t;
}

}  // namespace

TrainReport train(FieldModel& model, const SignalDataset& data,
                  const TrainConfig& cfg) {
  if (data.size() == 0) throw SchemaError("train: empty dataset");
  if (cfg.iterations < 1 || cfg.batch_size < 1) {
    throw SchemaError("train: iterations and batch_size must be >= 1");
  }
  const int threads = resolve_threads(cfg.threads);
  const int B = cfg.batch_size;
  const int d = model.dim();
  const bool is_nstr = model.nstr() != nullptr;
  const int64_t N = data.size();

  Rng root(cfg.seed);
  Rng sample_rng = root.child(1);
  Rng pde_rng = root.child(2);

  AdamState adam(model.tape().size(), cfg.adam);
  StepScratch scratch;
  TrainReport report;

  Mat xs(B, d), ys(B, data.channels);
  Mat pde_xs;
  if (is_nstr) pde_xs.resize(2 * B, d);

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&t0]() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
  };

  // The blow-up guard tracks a smoothed loss; raw minibatch values are too
  // noisy to compare against a global minimum.
  double ema = std::numeric_limits<double>::quiet_NaN();
  double min_ema = std::numeric_limits<double>::infinity();
  int blowup_streak = 0;

  for (int step = 0; step < cfg.iterations; ++step) {
    for (int i = 0; i < B; ++i) {
      const auto idx = sample_rng.index(static_cast<uint64_t>(N));
      if (step == 0 && i < 64) report.sample_trace.push_back(static_cast<uint32_t>(idx));
      xs.row(i) = data.coords.row(static_cast<int64_t>(idx));
      ys.row(i) = data.values.row(static_cast<int64_t>(idx));
    }
    if (is_nstr) {
      pde_xs.topRows(B) = xs;
      for (int i = 0; i < B; ++i) {
        for (int a = 0; a < d; ++a) pde_xs(B + i, a) = pde_rng.uniform(-1.0, 1.0);
      }
    }

    LossTerms terms;
    try {
      terms = step_losses(model, xs, ys, pde_xs, cfg, threads, scratch, true);
    } catch (const NumericError& e) {
      throw DivergenceError(std::string("training diverged at step ") +
                            std::to_string(step) + ": " + e.what());
    }
    if (!std::isfinite(terms.total)) {
      throw DivergenceError("training diverged at step " + std::to_string(step) +
                            ": non-finite loss");
    }
    ema = std::isnan(ema) ? terms.total : 0.99 * ema + 0.01 * terms.total;
    min_ema = std::min(min_ema, ema);
    if (ema > 100.0 * min_ema) {
      if (++blowup_streak >= 500) {
        throw DivergenceError("training diverged: loss 100x above minimum for "
                              "500 consecutive steps");
      }
    } else {
      blowup_streak = 0;
    }

    if (step % cfg.log_every == 0 || step + 1 == cfg.iterations) {
      report.rows.push_back({step, terms.total, terms.task, terms.pde,
                             terms.smooth, elapsed_ms()});
    }

    try {
      adam_step(model.tape(), adam);
    } catch (const NumericError& e) {
      throw DivergenceError(std::string("training diverged at step ") +
                            std::to_string(step) + ": " + e.what());
    }
  }

  // Full-dataset task error with the final parameters.
  const Mat pred = eval_forward(model, data.coords);
  double se = 0;
  for (int64_t i = 0; i < N; ++i) {
    for (int c = 0; c < data.channels; ++c) {
      const double dv = pred(i, c) - data.values(i, c);
      se += dv * dv;
    }
  }
  report.final_task_mse = se / (static_cast<double>(N) * data.channels);
  report.total_wall_ms = elapsed_ms();
  report.steps = cfg.iterations;
  return report;
}

void write_report_jsonl(const TrainReport& report, std::ostream& os) {
  for (const auto& r : report.rows) {
    nlohmann::json j;
    j["step"] = r.step;
    j["L"] = r.total;
    j["L_task"] = r.task;
    j["L_PDE"] = r.pde;
    j["L_smooth"] = r.smooth;
    j["wall_ms"] = r.wall_ms;
    os << j.dump() << "\n";
  }
  nlohmann::json fin;
  fin["final_task_mse"] = report.final_task_mse;
  fin["steps"] = report.steps;
  fin["wall_ms"] = report.total_wall_ms;
  os << fin.dump() << "\n";
}

}  // namespace nstr
