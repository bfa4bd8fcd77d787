#pragma once

#include "ccomp/exo.hpp"
#include "ccomp/numerics.hpp"
#include "ccomp/plant.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ccomp {

/// Anti-surge measurement: sum of b[n1][n2] * (x1 / flow_ref)^n1 * x2^n2.
struct ASCPolynomial {
  std::vector<std::vector<double>> b;
  double flow_ref = 1.0;  // m/s

  /// Throws InvalidParameter when no coefficient with n1 >= 1 is nonzero.
  void validate() const;
  double value(double x1, double x2) const;
  double d_dx1(double x1, double x2) const;
};

double y_asc(double x1, double x2, const ASCPolynomial& poly);

/// Surge-control-line polynomial: y = x1/flow_ref - (b00 + b01 x2 + b02 x2^2), zero on the line
/// c2 = margin * c2_surge(x2). Fitted by least squares on x2 in [x2_lo, x2_hi].
struct SclFit {
  ASCPolynomial poly;
  double max_residual = 0.0;  // in scaled flow units at the anchor points
  std::vector<std::pair<double, double>> anchors;  // (x2, c2_scl)
};
SclFit fit_scl(const CompressorModel& model, double margin = 1.1, double x2_lo = 1.6, double x2_hi = 2.2,
               int samples = 41);

/// Flow on the surge limit at pressure ratio x2 (bisection over the guide-vane range).
double surge_flow_at(const CompressorModel& model, double x2);

enum class Domain { Siso, Mimo };
enum class SetpointKind { Sine, Lower, Upper, Constant };

double setpoint_value(SetpointKind kind, const ExoStateW& w);
/// Time derivative of the setpoint along the exo flow.
double setpoint_rate(SetpointKind kind, const ExoStateW& w, const ExoParams& p);

using GainMatrix = Eigen::Matrix<double, 2, 5>;

struct SubController {
  int k = 1;
  Domain domain = Domain::Siso;
  SetpointKind setpoint = SetpointKind::Sine;
  /// Row j: feedback weights of input j over (x1..x5). Row 2 unused for SISO controllers.
  GainMatrix gain = GainMatrix::Zero();
};

/// C1..C4 SISO with sine/lower/upper/constant setpoints, C5..C8 the same on the MIMO domain.
std::array<SubController, 8> default_bank();

enum class RegulatorMode {
  Frozen,   // exo-state frozen: plain equilibrium with e = 0
  Tracking  // corrected for the exo drift, f(chi, u) = d(chi)/dt
};

struct RegulatorContext {
  std::shared_ptr<const CompressorModel> model;
  ASCPolynomial asc;
  ExoParams exo;
  RegulatorMode mode = RegulatorMode::Tracking;
};

struct RegulatorSolution {
  PlantState chi;
  ControlInput u_bar;
  PlantState::Vector chi_dot = PlantState::Vector::Zero();
  double residual = 0.0;
  // warm-start data
  SmallVec y;
  SmallMat jacobian;
  int jacobian_age = 0;
  double t1_rate = 0.0;
};

/// Per-input tracking error e_kj = h_kj(x) - q_kj(w). Entry 1 is zero for SISO controllers.
Eigen::Vector2d tracking_error(const SubController& c, const PlantState& x, const ExoStateW& w,
                               const ASCPolynomial& asc);

/// Regulator solution chi_k and feedforward u_bar_k. `warm` is the previous solution of the same
/// controller, if any. Throws NoConvergence.
RegulatorSolution solve_regulator(const SubController& c, const ExoStateW& w, const ExoStateD& d,
                                  const RegulatorContext& ctx, const RegulatorSolution* warm = nullptr);

/// p_kj = clamp(u_bar_kj + G_kj (x - chi_k), 0, 1); j in {0, 1}. SISO BOV outputs are 0.
double control_output(const SubController& c, int j, const PlantState& x, const RegulatorSolution& sol);

struct Linearization {
  Eigen::Matrix<double, 5, 5> A;
  Eigen::Matrix<double, 5, 2> B;
};

/// Central-difference linearization of rhs_extended in state coordinates scaled by
/// S = diag(1/flow_ref, 1, 1, 1, 1).
Linearization linearize(const CompressorModel& model, const PlantState& x, const ControlInput& u,
                        DisturbanceInput z, double flow_ref);

/// Single-input pole placement (Ackermann). Throws InvalidParameter on unstable poles and
/// NumericalFailure when (A, b) is not controllable.
Eigen::RowVectorXd place_poles(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const std::vector<double>& poles);

using GainRow = Eigen::Matrix<double, 1, 5>;

/// Gains for one domain at a design point, in physical state units.
/// SISO: `poles` (3) placed on (x1, x2, x3) with the guide vane.
/// MIMO: the guide-vane row is `guide_vane_row` if given (otherwise a SISO design with the first
/// three poles); the BOV row places all of `poles` (4) on (x1, x2, x3, x5) against that row.
GainMatrix design_gains(Domain domain, const CompressorModel& model, const PlantState& point,
                        const ControlInput& u, DisturbanceInput z, double flow_ref, const std::vector<double>& poles,
                        const GainRow* guide_vane_row = nullptr);

/// Eigenvalues of the designed closed loop restricted to the controlled states.
Eigen::VectorXcd closed_loop_eigenvalues(Domain domain, const GainMatrix& gain, const CompressorModel& model,
                                         const PlantState& point, const ControlInput& u, DisturbanceInput z,
                                         double flow_ref);

struct StructureReport {
  struct Point {
    PlantState x;
    int siso_degree = 0;
    std::array<int, 2> mimo_degrees{0, 0};
    double decoupling_det = 0.0;
  };
  std::vector<Point> points;
  int siso_degree = 0;                // common value, or -1 if points disagree
  std::array<int, 2> mimo_degrees{0, 0};
  double zero_dynamics_eigenvalue = 0.0;
};

/// Finite-difference Lie-derivative test of the relative degrees at `n_points` random operating
/// points, plus the zero-dynamics eigenvalue d f4 / d x4.
StructureReport check_structure(const CompressorModel& model, const ASCPolynomial& asc, int n_points = 10,
                                std::uint64_t seed = 1);

}  // namespace ccomp
