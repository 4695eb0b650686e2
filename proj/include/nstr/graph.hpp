#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "nstr/common.hpp"
#include "nstr/param_tape.hpp"

namespace nstr {

using NodeId = int;

// Precomputed multilinear interpolation stencil for a coordinate batch:
// row r of the output gathers `corners` rows of the feature table with the
// given weights. Derivative stencils (d weights / d x_axis) use the same
// structure.
struct InterpPlan {
  int rows = 0;
  int corners = 0;
  std::vector<int32_t> idx;  // rows * corners
  std::vector<double> w;     // rows * corners
};

// Bump allocator over fixed blocks. Pointers stay valid until reset();
// blocks are recycled across graphs, so a reused Graph allocates nothing
// in steady state.
class Arena {
 public:
  double* alloc(size_t n);
  void reset();

 private:
  static constexpr size_t kBlock = 1u << 20;  // doubles per block
  std::vector<std::unique_ptr<double[]>> blocks_;
  std::vector<size_t> sizes_;
  size_t block_ = 0;
  size_t used_ = 0;
};

// Reverse-mode differentiation over an explicit operation record.
//
// Every op evaluates eagerly into arena storage and appends a record;
// backward() walks the record in reverse and accumulates d(root)/d(p) for
// every parameter segment touched by a param() node. Shapes are [rows, cols]
// row-major. Each op validates that its output is finite and throws
// NumericError otherwise.
//
// A Graph may be reused: reset() drops the record but keeps the arena
// blocks, which makes per-step graph rebuilds allocation-free.
class Graph {
 public:
  explicit Graph(const ParamTape& tape) : tape_(&tape) {}

  void reset();

  // --- leaves ---------------------------------------------------------
  NodeId constant(const Mat& m);
  NodeId constant_rows(const Vec& row, int rows);  // broadcast a row
  NodeId param(SegmentHandle h);                   // cached per segment

  // --- ops ------------------------------------------------------------
  NodeId matmul(NodeId x, NodeId w);     // [B,n]*[n,m] -> [B,m]
  NodeId matmul_nt(NodeId x, NodeId w);  // [B,n]*[m,n]^T -> [B,m]
  NodeId add_bias(NodeId x, NodeId b);   // b: [1,m]
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);  // elementwise
  NodeId scale(NodeId a, double alpha);
  NodeId affine_comb(NodeId a, double alpha, double beta);  // alpha*a + beta
  NodeId tanh_of(NodeId a);
  NodeId sin_of(NodeId a);
  NodeId cos_of(NodeId a);
  NodeId abs_of(NodeId a);
  NodeId concat_cols(NodeId a, NodeId b);
  // out[:, k*n_inputs + i] = input_i[:, k]; assembles K x d Jacobians in
  // row-major (k-major) column order from per-axis tangents.
  NodeId interleave_cols(const std::vector<NodeId>& parts);
  NodeId grid_interp(NodeId features, int plan_id);  // features: [nodes, L]
  NodeId row_sum(NodeId a);                          // [B,n] -> [B,1]
  NodeId scaled_sum(NodeId a, double alpha);         // scalar [1,1]

  int add_plan(InterpPlan plan);

  // --- access ---------------------------------------------------------
  int rows(NodeId n) const { return nodes_[n].r; }
  int cols(NodeId n) const { return nodes_[n].c; }
  Eigen::Map<const Mat> value(NodeId n) const;
  double scalar(NodeId n) const;

  // Accumulates d(root)/d(params) into grad_out (sized tape.size()).
  // root must be a [1,1] node. May be called repeatedly; contributions add.
  void backward(NodeId root, std::span<double> grad_out);

  const ParamTape& tape() const { return *tape_; }

 private:
  enum class Op : uint8_t {
    kConst, kParam, kMatMul, kMatMulNT, kAddBias, kAdd, kSub, kMul, kScale,
    kAffineComb, kTanh, kSin, kCos, kAbs, kConcat, kInterleave, kGridInterp,
    kRowSum, kScaledSum,
  };

  struct Node {
    Op op;
    int r = 0, c = 0;
    NodeId a = -1, b = -1;
    double alpha = 0, beta = 0;
    int seg = -1;    // kParam
    int plan = -1;   // kGridInterp
    int extra = -1;  // index into multi_inputs_ for kInterleave
    double* val = nullptr;
    double* grad = nullptr;
    bool needs_grad = false;
  };

  NodeId push(Node n, size_t count);
  size_t count(NodeId n) const {
    return static_cast<size_t>(nodes_[n].r) * nodes_[n].c;
  }

  const ParamTape* tape_;
  std::vector<Node> nodes_;
  Arena values_;
  Arena grads_;
  std::vector<InterpPlan> plans_;
  std::vector<std::vector<NodeId>> multi_inputs_;
  std::vector<std::pair<int, NodeId>> param_cache_;
};

// Builds the record for `build_loss`, runs backward, accumulates gradients
// into tape.grads() (additive), and returns the loss value. Throws
// NumericError if the loss is non-finite.
double grad_of_loss(ParamTape& tape, const std::function<NodeId(Graph&)>& build_loss);

// Fast finite check: a running |v| sum only overflows to inf/nan when the
// input holds a non-finite or astronomically large value.
inline void check_finite_fast(const double* p, size_t n, const char* what) {
  double acc = 0;
  for (size_t i = 0; i < n; ++i) acc += std::abs(p[i]);
  if (!std::isfinite(acc)) check_finite(p, n, what);
}

}  // namespace nstr
