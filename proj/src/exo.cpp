#include "ccomp/exo.hpp"

#include "ccomp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ccomp {

namespace {
constexpr double kMinSpan = 1e-6;
}

double ExoStateW::amplitude() const { return std::hypot(w2, w3); }
double ExoStateD::amplitude() const { return std::hypot(d2, d3); }

void ExoParams::validate() const {
  if (!(omega_w >= 0.0) || !(omega_d >= 0.0)) throw InvalidParameter("exo frequencies must be >= 0");
}

ExoStateW::Vector exo_w_rhs(const ExoStateW& w, const ExoParams& p) {
  ExoStateW::Vector dw = ExoStateW::Vector::Zero();
  dw[1] = p.omega_w * w.w3;
  dw[2] = -p.omega_w * w.w2;
  return dw;
}

ExoStateD::Vector exo_d_rhs(const ExoStateD& d, const ExoParams& p) {
  return ExoStateD::Vector(0.0, p.omega_d * d.d3, -p.omega_d * d.d2);
}

void exo_advance(ExoStateW& w, ExoStateD& d, const ExoParams& p, double dt) {
  auto rotate = [](double& a, double& b, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    const double a1 = c * a + s * b;
    const double b1 = -s * a + c * b;
    a = a1;
    b = b1;
  };
  rotate(w.w2, w.w3, p.omega_w * dt);
  rotate(d.d2, d.d3, p.omega_d * dt);
}

RampConfig configure_ramp(const RampSpec& spec) {
  if (!(spec.slope > 0.0) || !std::isfinite(spec.slope)) throw InvalidParameter("ramp slope must be > 0");
  if (!(std::abs(spec.end - spec.start) >= kMinSpan)) throw InvalidParameter("ramp span below minimum");
  if (!(spec.margin > 1.0)) throw InvalidParameter("ramp amplitude margin must be > 1");
  if (!(spec.delay >= 0.0)) throw InvalidParameter("ramp delay must be >= 0");

  RampConfig cfg;
  auto& w = cfg.w;
  w.w4 = std::min(spec.start, spec.end);
  w.w5 = std::max(spec.start, spec.end);
  w.w1 = 0.5 * (spec.start + spec.end);
  const double amp = spec.margin * 0.5 * (w.w5 - w.w4);
  cfg.omega_w = spec.slope / amp;

  // w2 = A sin(theta), w3 = A cos(theta), theta advancing at omega.
  const double s0 = std::clamp((spec.start - w.w1) / amp, -1.0, 1.0);
  const double phi = spec.end > spec.start ? std::asin(s0) : std::numbers::pi - std::asin(s0);
  const double theta = phi - cfg.omega_w * spec.delay;
  w.w2 = amp * std::sin(theta);
  w.w3 = amp * std::cos(theta);
  return cfg;
}

double pv_manifold(const ExoStateD& d, double omega_d, double tau) {
  const double wt = omega_d * tau;
  const double den = 1.0 + wt * wt;
  return d.d1 + d.d2 / den - wt * d.d3 / den;
}

}  // namespace ccomp
