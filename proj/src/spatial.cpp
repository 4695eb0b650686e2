#include "nstr/spatial.hpp"

namespace nstr {

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double eps) {
  const int d = static_cast<int>(x.size());
  Vec xp = x, xm = x;
  Mat jac;
  for (int a = 0; a < d; ++a) {
    xp(a) = x(a) + eps;
    xm(a) = x(a) - eps;
    const Vec fp = f(xp);
    const Vec fm = f(xm);
    if (jac.size() == 0) jac.setZero(fp.size(), d);
    jac.col(a) = (fp - fm) / (2.0 * eps);
    xp(a) = x(a);
    xm(a) = x(a);
  }
  check_finite(jac.data(), static_cast<size_t>(jac.size()), "fd_jacobian");
  return jac;
}

Mat spatial_jacobian(const VectorField& field, const Vec& x, GradMode mode,
                     double eps) {
  if (mode == GradMode::kAnalytic) {
    if (!field.analytic_jac) {
      throw SchemaError("spatial_jacobian: field has no analytic Jacobian");
    }
    Mat j = field.analytic_jac(x);
    check_finite(j.data(), static_cast<size_t>(j.size()), "spatial_jacobian");
    return j;
  }
  return fd_jacobian(field.eval, x, eps);
}

}  // namespace nstr
