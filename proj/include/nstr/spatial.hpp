#pragma once

#include <functional>

#include "nstr/common.hpp"

namespace nstr {

// A vector-valued field of the coordinate, with an optional exact Jacobian.
// The analytic closure is supplied by models whose layer vocabulary admits
// hand-derived chain rules; the fd path works for any closure.
struct VectorField {
  int in_dim = 0;
  int out_dim = 0;
  std::function<Vec(const Vec&)> eval;
  std::function<Mat(const Vec&)> analytic_jac;  // may be empty (fd only)
};

// Central-difference Jacobian (out_dim x d). The stencil is not clamped;
// callers keep x at distance > eps from the domain boundary and from grid
// cell boundaries, where fields are only C0.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double eps);

Mat spatial_jacobian(const VectorField& field, const Vec& x, GradMode mode,
                     double eps = 1e-4);

}  // namespace nstr
