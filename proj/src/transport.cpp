#include "nstr/transport.hpp"

namespace nstr {

ChunkSums build_loss_sums(Graph& g, const FieldModel& model, const Mat& xs,
                          const Mat& ys, const Mat& pde_xs, TaskLoss task,
                          GradMode mode) {
  if (xs.rows() != ys.rows()) throw SchemaError("loss: xs/ys length mismatch");
  ChunkSums sums;

  NodeId pred = model.build_forward(g, xs);
  NodeId diff = g.sub(pred, g.constant(ys));
  if (task == TaskLoss::kL2) {
    sums.task = g.scaled_sum(g.mul(diff, diff), 1.0);
  } else {
    sums.task = g.scaled_sum(g.abs_of(diff), 1.0);
  }

  const NstrModel* nm = model.nstr();
  if (nm != nullptr && pde_xs.rows() > 0) {
    NodeId grad_s = nm->build_grad_s(g, pde_xs, mode);
    NstrModel::SpectrumNodes sn = nm->build_spectrum(g, pde_xs);
    NodeId flow = nm->build_flow(g, sn.x, sn.s);
    NodeId resid = g.sub(grad_s, flow);
    sums.pde = g.scaled_sum(g.mul(resid, resid), 1.0);
    sums.smooth = g.scaled_sum(g.mul(grad_s, grad_s), 1.0);
  }
  return sums;
}

double pde_residual(const NstrModel& model, const Mat& xs, GradMode mode) {
  Graph g(model.tape());
  NodeId grad_s = model.build_grad_s(g, xs, mode);
  NstrModel::SpectrumNodes sn = model.build_spectrum(g, xs);
  NodeId flow = model.build_flow(g, sn.x, sn.s);
  NodeId resid = g.sub(grad_s, flow);
  NodeId out = g.scaled_sum(g.mul(resid, resid), 1.0 / xs.rows());
  return g.scalar(out);
}

double pde_residual_forced(const NstrModel& model, const Mat& xs, GradMode mode) {
  Graph g(model.tape());
  NodeId grad_s = model.build_grad_s(g, xs, mode);
  NodeId resid = g.sub(grad_s, grad_s);
  NodeId out = g.scaled_sum(g.mul(resid, resid), 1.0 / xs.rows());
  return g.scalar(out);
}

double smoothness_penalty(const NstrModel& model, const Mat& xs, GradMode mode) {
  Graph g(model.tape());
  NodeId grad_s = model.build_grad_s(g, xs, mode);
  NodeId out = g.scaled_sum(g.mul(grad_s, grad_s), 1.0 / xs.rows());
  return g.scalar(out);
}

LossTerms total_loss(const FieldModel& model, const Mat& xs, const Mat& ys,
                     const Mat& pde_xs, const LossWeights& weights,
                     TaskLoss task, GradMode mode) {
  Graph g(model.tape());
  ChunkSums sums = build_loss_sums(g, model, xs, ys, pde_xs, task, mode);
  LossTerms t;
  const double n_task = static_cast<double>(xs.rows() * ys.cols());
  t.task = g.scalar(sums.task) / n_task;
  if (sums.pde >= 0) {
    t.pde = g.scalar(sums.pde) / static_cast<double>(pde_xs.rows());
    t.smooth = g.scalar(sums.smooth) / static_cast<double>(pde_xs.rows());
  }
  t.total = t.task + weights.lambda_pde * t.pde + weights.lambda_smooth * t.smooth;
  return t;
}

}  // namespace nstr
