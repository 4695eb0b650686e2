#pragma once

#include <iosfwd>
#include <vector>

#include "nstr/data.hpp"
#include "nstr/transport.hpp"

namespace nstr {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::vector<double> m, v;
  int64_t t = 0;

  AdamState(size_t n, const AdamConfig& c) : cfg(c), m(n, 0.0), v(n, 0.0) {}
};

// Bias-corrected Adam update from tape.grads(), applied in place; grads are
// zeroed afterwards. Throws NumericError if any parameter becomes non-finite.
void adam_step(ParamTape& tape, AdamState& state);

struct TrainConfig {
  int iterations = 2000;
  int batch_size = 256;
  uint64_t seed = 1;
  AdamConfig adam;
  LossWeights weights;
  GradMode grad_mode = GradMode::kFd;
  TaskLoss task = TaskLoss::kL2;
  int log_every = 100;
  int threads = 0;  // 0: NSTR_THREADS env, else 1
};

struct TrainLogRow {
  int step = 0;
  double total = 0, task = 0, pde = 0, smooth = 0;
  double wall_ms = 0;
};

struct TrainReport {
  std::vector<TrainLogRow> rows;
  double final_task_mse = 0;
  double total_wall_ms = 0;
  int steps = 0;
  std::vector<uint32_t> sample_trace;  // first batch indices of step 0
};

// Uniform-with-replacement minibatch training. PDE/smoothness terms are
// evaluated on the batch coordinates plus an equal count of uniform domain
// samples. Deterministic given (seed, config, dataset) for any thread count:
// chunk boundaries are fixed and reductions run in chunk order.
TrainReport train(FieldModel& model, const SignalDataset& data,
                  const TrainConfig& cfg);

// One JSON object per log row: {"step","L","L_task","L_PDE","L_smooth","wall_ms"},
// then a final record with the full-dataset task MSE.
void write_report_jsonl(const TrainReport& report, std::ostream& os);

int resolve_threads(int requested);

}  // namespace nstr
