#include "ccomp/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace ccomp {

SmallMat numeric_jacobian(const ResidualFn& f, const SmallVec& x, double relative_step) {
  const SmallVec f0 = f(x);
  SmallMat jac(f0.size(), x.size());
  SmallVec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = relative_step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const SmallVec fp = f(xp);
    xp[i] = x[i] - h;
    const SmallVec fm = f(xp);
    xp[i] = x[i];
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

namespace {

bool finite(const SmallVec& v) { return v.allFinite(); }

}  // namespace

NewtonResult damped_newton(const ResidualFn& f, SmallVec x0, const NewtonOptions& options,
                           const SmallMat* initial_jacobian) {
  NewtonResult result;
  result.x = std::move(x0);
  result.residual = f(result.x);
  bool fresh_jacobian = false;
  if (options.chord && initial_jacobian != nullptr) {
    result.jacobian = *initial_jacobian;
  } else {
    result.jacobian = numeric_jacobian(f, result.x, options.relative_step);
    fresh_jacobian = true;
  }

  double norm = result.residual.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < options.max_iterations; ++it) {
    if (norm <= options.tolerance) {
      result.converged = true;
      return result;
    }
    result.iterations = it + 1;

    Eigen::ColPivHouseholderQR<SmallMat> qr(result.jacobian);
    const SmallVec step = qr.solve(-result.residual);
    if (!finite(step)) break;

    double alpha = 1.0;
    bool accepted = false;
    SmallVec trial_x;
    SmallVec trial_r;
    for (int ls = 0; ls < 30; ++ls) {
      trial_x = result.x + alpha * step;
      trial_r = f(trial_x);
      if (finite(trial_r) && trial_r.lpNorm<Eigen::Infinity>() < (1.0 - 1e-4 * alpha) * norm) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }

    if (!accepted) {
      if (!fresh_jacobian) {
        result.jacobian = numeric_jacobian(f, result.x, options.relative_step);
        fresh_jacobian = true;
        continue;
      }
      // Accept the full step anyway if the residual is already at round-off level.
      break;
    }

    const double new_norm = trial_r.lpNorm<Eigen::Infinity>();
    const bool slow = new_norm > 0.5 * norm;
    result.x = trial_x;
    result.residual = trial_r;
    norm = new_norm;
    if (!options.chord || (slow && !fresh_jacobian)) {
      result.jacobian = numeric_jacobian(f, result.x, options.relative_step);
      fresh_jacobian = true;
    } else {
      fresh_jacobian = false;
    }
  }
  result.converged = norm <= options.tolerance;
  return result;
}

}  // namespace ccomp
