#pragma once

#include <Eigen/Dense>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nstr {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;

// Central-difference step for the spectrum Jacobian in training (normalized coords).
inline constexpr double kFdEpsilon = 1e-3;

enum class GradMode { kFd, kAnalytic };

// Non-finite value produced by a numeric op.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Query outside the normalized domain [-1,1]^d.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed file, config, or checkpoint.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training loss became non-finite or blew up past the guard.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void check_finite(const double* p, size_t n, const char* what) {
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) {
      throw NumericError(std::string(what) + ": non-finite value at index " +
                         std::to_string(i));
    }
  }
}

}  // namespace nstr
