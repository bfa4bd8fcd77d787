#pragma once

#include "ccomp/override.hpp"
#include "ccomp/plant.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ccomp {

struct StabilityBounds {
  double lambda = 0.02;
  double A = 0.2;
  double L = 0.15;
  double delta = 1e-3;

  /// Throws InvalidParameter unless 0 < lambda < A and L < A - lambda.
  void validate() const;
  /// "lambda,A,L,delta"
  static StabilityBounds parse(const std::string& text);
};

using ScaledError = Eigen::Matrix<double, 5, 1>;

/// S (x - chi) with S = diag(1/flow_ref, 1, 1, 1, 1).
ScaledError error_coordinates(const PlantState& x, const PlantState& chi, double flow_ref);

/// Jump of the steady state at a switch, S (chi_from - chi_to).
ScaledError state_reset(const PlantState& chi_from, const PlantState& chi_to, double flow_ref);

/// What the simulator captured at an override event.
struct EventSnapshot {
  OverrideEvent event;
  PlantState x;
  PlantState chi_from;
  PlantState chi_to;
};

/// One trace sample as seen by the monitor. e_norm[j] is the error norm of the controller
/// active on channel j, NaN when that controller regulates nothing through channel j.
struct MonitorSample {
  double t = 0.0;
  std::array<double, 2> e_norm{0.0, 0.0};
};

struct EventCheck {
  double t = 0.0;
  int j = 0;
  int k_from = 0;
  int k_to = 0;
  double xt_minus = 0.0;
  double xt_plus = 0.0;
  double reset = 0.0;
  double dwell = 0.0;
  double time_to_delta = 0.0;  // NaN if the error never settles before the next event
  bool inner_ok = false;       // ||x~(t-)|| < lambda
  bool outer_ok = false;       // ||x~(t+)|| < A
  bool reset_ok = false;       // ||dx||  < L
  bool regulation_ok = false;  // settles below delta before the next event on this channel
};

struct MonitorReport {
  StabilityBounds bounds;
  std::vector<EventCheck> events;
  std::array<bool, 2> initial_regulation_ok{true, true};  // interval before the first event
  bool chain_ok = true;
  bool regulation_ok = true;
  bool ok() const { return chain_ok && regulation_ok; }
};

MonitorReport monitor(const std::vector<MonitorSample>& trace, const std::vector<EventSnapshot>& events,
                      const StabilityBounds& bounds, double flow_ref);

std::string report_text(const MonitorReport& report);
std::string report_csv(const MonitorReport& report);
/// Inverse of report_csv. Throws ConfigError on malformed input.
MonitorReport parse_report_csv(const std::string& text);

}  // namespace ccomp
