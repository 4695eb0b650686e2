#pragma once

#include "nstr/model.hpp"

namespace nstr {

struct LossWeights {
  double lambda_pde = 0.1;
  double lambda_smooth = 0.01;
};

enum class TaskLoss { kL2, kL1 };

struct LossTerms {
  double total = 0, task = 0, pde = 0, smooth = 0;
};

// Raw (unnormalized) per-chunk loss sums as graph nodes. The caller divides
// by the full batch sizes and applies the lambda weights, so chunked
// evaluation reproduces the unchunked sums bit for bit.
struct ChunkSums {
  NodeId task = -1;    // sum of squared (or absolute) task errors
  NodeId pde = -1;     // sum over samples of ||grad S - F||_F^2
  NodeId smooth = -1;  // sum over samples of ||grad S||_F^2
};

// Records one chunk of the total loss. pde_xs may be empty; non-NSTR models
// get task-only sums. grad S uses `mode` (fd turns the PDE term into a plain
// first-order loss; analytic differentiates the hand-derived Jacobian chain).
ChunkSums build_loss_sums(Graph& g, const FieldModel& model, const Mat& xs,
                          const Mat& ys, const Mat& pde_xs, TaskLoss task,
                          GradMode mode);

// Mean over the batch of ||grad S(x) - F(x, S(x))||_2^2.
double pde_residual(const NstrModel& model, const Mat& xs, GradMode mode);

// Same wiring with the flow output replaced by the computed grad S; exactly
// zero by construction, which pins the residual layout conventions.
double pde_residual_forced(const NstrModel& model, const Mat& xs, GradMode mode);

// Mean over the batch of ||grad S(x)||_F^2.
double smoothness_penalty(const NstrModel& model, const Mat& xs,
                          GradMode mode = GradMode::kFd);

// Loss values with the per-term breakdown; total = task + l_pde*pde +
// l_smooth*smooth evaluated in exactly that order.
LossTerms total_loss(const FieldModel& model, const Mat& xs, const Mat& ys,
                     const Mat& pde_xs, const LossWeights& weights,
                     TaskLoss task = TaskLoss::kL2,
                     GradMode mode = GradMode::kFd);

}  // namespace nstr
