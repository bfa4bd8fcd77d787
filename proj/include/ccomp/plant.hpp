#pragma once

#include "ccomp/compressor_map.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>

namespace ccomp {

/// Physical parameters of the compressor system. Units: R_S J/(kg K), T1 K, lengths m,
/// areas m^2, V m^3, time constants s; kappa, K_PV, K_BOV and kv0 are dimensionless.
struct PlantParams {
  double R_S = 287.0;
  double T1 = 295.4;
  double kappa = 1.4;
  double L12 = 13.0;
  double L23 = 2.5;
  double L34 = 1.0;
  double A2 = 0.44;
  double A3 = 0.11;
  double A4 = 0.22;
  double V = 32.0;
  double K_PV = 1.0;
  double K_BOV = 1.0;
  double A_PV_max = 0.196;
  double A_BOV_max = 0.196;
  double kv0 = 0.03;
  double tau_GV = 0.50;
  double tau_PV = 0.35;
  double tau_BOV = 0.35;

  /// Throws InvalidParameter naming the first violated invariant.
  void validate() const;
};

struct DerivedParams {
  double k1 = 0.0;  // J/kg
  double k2 = 0.0;  // 1/m
  double r_k = 0.0;
};

DerivedParams derive_params(const PlantParams& p);

/// State x = (c2, Pi, r_GV, r_PV, r_BOV).
struct PlantState {
  double c2 = 0.0;
  double pi = 1.0;
  double r_gv = 0.0;
  double r_pv = 0.0;
  double r_bov = 0.0;

  using Vector = Eigen::Matrix<double, 5, 1>;
  Vector vec() const { return Vector(c2, pi, r_gv, r_pv, r_bov); }
  static PlantState from(const Vector& v) { return {v[0], v[1], v[2], v[3], v[4]}; }
};

struct ControlInput {
  double u_gv = 0.0;
  double u_bov = 0.0;
};

struct DisturbanceInput {
  double z_pv = 0.0;
};

using StateDerivative = Eigen::Matrix<double, 5, 1>;

enum class Valve { Process, BlowOff };

/// Effective passage length L(x2) from suction to plenum; decreasing in x2.
double passage_length(double pressure_ratio, const PlantParams& p);

/// Pressure ratio separating the two valve-coefficient branches, (2/(kappa+1))^(-1/r_k).
double critical_pressure_ratio(double kappa);

/// Valve flow coefficient k_PV or k_BOV. The constant branch applies for x2 <= Pi_crit,
/// the pressure-dependent one above it.
double valve_coefficient(double pressure_ratio, const PlantParams& p, Valve which);

/// Relative stroke from valve position: equal-percentage for the PV, linear for the BOV.
double valve_stroke(double position, Valve which, const PlantParams& p);

/// The five-state compressor model bound to a parameter set and a compressor map.
class CompressorModel {
 public:
  CompressorModel(PlantParams params, std::shared_ptr<const CompressorMap> map);

  const PlantParams& params() const { return params_; }
  const DerivedParams& derived() const { return derived_; }
  const CompressorMap& map() const { return *map_; }
  std::shared_ptr<const CompressorMap> map_ptr() const { return map_; }

  /// dx/dt. Commands and disturbance are clamped to [0, 1]; valve positions must lie in [0, 1].
  StateDerivative rhs(const PlantState& x, const ControlInput& u, DisturbanceInput z) const;

  /// dx/dt without clamping. Valve characteristics and the map are continued outside their
  /// ranges so steady-state solvers may visit virtual points (e.g. a negative BOV opening).
  StateDerivative rhs_extended(const PlantState& x, const ControlInput& u, DisturbanceInput z) const;

  /// Flow through a fully characterised valve in impeller-velocity units (m/s).
  double valve_flow(double pressure_ratio, double stroke, Valve which) const;

  /// Specific work delivered into the plenum at pressure ratio x2: k1 (x2^r_k - 1).
  double pressure_work(double pressure_ratio) const;

 private:
  StateDerivative evaluate(const PlantState& x, double u_gv, double u_bov, double z, double h_pv,
                           double h_bov, bool extended) const;

  PlantParams params_;
  DerivedParams derived_;
  std::shared_ptr<const CompressorMap> map_;
};

StateDerivative plant_rhs(const PlantState& x, const ControlInput& u, DisturbanceInput z,
                          const CompressorModel& model);

/// Scaled infinity norm of a state derivative (x1 in m/s^2, other rows in 1/s).
double scaled_residual(const StateDerivative& dx);

enum class FreeInputs { GuideVane, GuideVaneAndBlowOff };

struct EquilibriumTarget {
  double pressure_ratio = 1.0;
  /// Optional extra condition g(c2, Pi) = 0, e.g. "on the surge control line".
  std::function<double(double, double)> flow_constraint;
};

struct Equilibrium {
  PlantState state;
  ControlInput input;
  double residual = 0.0;
};

/// Steady state at the requested pressure ratio with the actuator states pinned to their
/// commands (x3 = u1, x4 = z, x5 = u2). With GuideVane only, u2 is fixed at `fixed_bov`.
/// Throws NoConvergence or MapRangeError.
Equilibrium find_equilibrium(const EquilibriumTarget& target, FreeInputs free, DisturbanceInput z,
                             const CompressorModel& model, double fixed_bov = 0.0,
                             std::optional<PlantState> guess = std::nullopt);

}  // namespace ccomp
