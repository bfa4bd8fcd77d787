#pragma once

#include <Eigen/Dense>

namespace ccomp {

/// Setpoint exo-state. w1 sine offset, (w2, w3) quadrature pair, w4/w5 lower/upper bound,
/// w6 max-pressure constant. All in pressure-ratio units.
struct ExoStateW {
  double w1 = 0.0, w2 = 0.0, w3 = 0.0, w4 = 0.0, w5 = 0.0, w6 = 0.0;

  using Vector = Eigen::Matrix<double, 6, 1>;
  Vector vec() const { return (Vector() << w1, w2, w3, w4, w5, w6).finished(); }
  static ExoStateW from(const Vector& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }

  /// Sinusoidal setpoint w1 + w2.
  double sine() const { return w1 + w2; }
  double amplitude() const;
};

/// Disturbance exo-state: d1 offset, (d2, d3) quadrature pair. Valve-position units.
struct ExoStateD {
  double d1 = 0.0, d2 = 0.0, d3 = 0.0;

  using Vector = Eigen::Matrix<double, 3, 1>;
  Vector vec() const { return Vector(d1, d2, d3); }
  static ExoStateD from(const Vector& v) { return {v[0], v[1], v[2]}; }

  /// Process-valve command q_D(d) = d1 + d2.
  double signal() const { return d1 + d2; }
  double amplitude() const;
};

struct ExoParams {
  double omega_w = 0.0;  // rad/s
  double omega_d = 0.0;  // rad/s

  void validate() const;
};

ExoStateW::Vector exo_w_rhs(const ExoStateW& w, const ExoParams& p);
ExoStateD::Vector exo_d_rhs(const ExoStateD& d, const ExoParams& p);

/// Exact flow of both generators over dt (a rotation of the quadrature pairs).
void exo_advance(ExoStateW& w, ExoStateD& d, const ExoParams& p, double dt);

struct RampSpec {
  double start = 0.0;
  double end = 0.0;
  double slope = 0.0;   // peak slope of the sinusoid, setpoint units / s
  double delay = 0.0;   // time until the sinusoid passes `start`
  double margin = 1.25; // amplitude over half-span
};

struct RampConfig {
  ExoStateW w;
  double omega_w = 0.0;
};

/// Builds the sine/lower/upper exo-state approximating a ramp from start to end.
/// w6 is left at zero for the caller to fill. Throws InvalidParameter.
RampConfig configure_ramp(const RampSpec& spec);

/// Offset of the PV-position manifold: the stationary response of a first-order lag
/// with time constant tau to q_D(d), x4 = d1 + alpha d2 + beta d3.
double pv_manifold(const ExoStateD& d, double omega_d, double tau);

}  // namespace ccomp
