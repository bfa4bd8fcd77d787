#pragma once

#include <Eigen/Dense>

#include <functional>

namespace ccomp {

/// Small dynamic vectors (at most 8 entries) with inline storage.
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

using ResidualFn = std::function<SmallVec(const SmallVec&)>;

struct NewtonOptions {
  int max_iterations = 100;
  double tolerance = 1e-12;   // on the infinity norm of the residual
  double relative_step = 1e-6;
  /// Reuse a supplied Jacobian instead of recomputing it every iteration.
  bool chord = false;
};

struct NewtonResult {
  SmallVec x;
  SmallVec residual;
  SmallMat jacobian;  // at the last Jacobian evaluation
  int iterations = 0;
  bool converged = false;

  double residual_norm() const { return residual.size() ? residual.lpNorm<Eigen::Infinity>() : 0.0; }
};

/// Central-difference Jacobian with per-component step relative_step * max(1, |x_i|).
SmallMat numeric_jacobian(const ResidualFn& f, const SmallVec& x, double relative_step = 1e-6);

/// Damped Newton iteration with backtracking on the residual norm.
/// When `initial_jacobian` is non-null and options.chord is set, it is used as the
/// iteration matrix until progress stalls, at which point a fresh one is computed.
NewtonResult damped_newton(const ResidualFn& f, SmallVec x0, const NewtonOptions& options = {},
                           const SmallMat* initial_jacobian = nullptr);

}  // namespace ccomp
