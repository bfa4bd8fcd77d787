#pragma once

#include "ccomp/exo.hpp"
#include "ccomp/override.hpp"
#include "ccomp/plant.hpp"
#include "ccomp/regulator.hpp"
#include "ccomp/stability.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ccomp {

/// d(0) = (offset, amplitude sin(phase), amplitude cos(phase)).
struct DisturbanceSpec {
  double offset = 0.5;
  double amplitude = 0.0;
  double phase = 0.0;
  double omega = 0.0;
};

struct InitialCondition {
  enum class Kind { Manifold, Equilibrium, State };
  Kind kind = Kind::Manifold;
  int controller = 2;           // Manifold: start on chi_k(w(0), d(0))
  double pressure_ratio = 1.0;  // Equilibrium: guide vane only, BOV closed
  PlantState state;             // State
};

struct Scenario {
  std::string name = "scenario";
  double duration = 0.0;
  double dt = 1e-3;
  double record_interval = 0.1;  // seconds between trace rows

  PlantParams params;
  std::shared_ptr<const CompressorMap> map;

  InitialCondition initial;
  ExoStateW w0;
  ExoStateD d0;
  ExoParams exo;
  bool ramp_increasing = true;
  bool latches = true;

  // Gain design: pole lists and the pressure ratio of each domain's design point.
  std::vector<double> siso_poles{-3.0, -4.0, -12.0};
  std::vector<double> mimo_poles{-3.0, -4.0, -5.0, -12.0};
  std::optional<double> siso_design_x2;
  std::optional<double> mimo_design_x2;
  std::optional<GainMatrix> siso_gain;  // explicit gains override the design
  std::optional<GainMatrix> mimo_gain;

  std::optional<ASCPolynomial> asc;  // fitted to the SCL when absent
  double scl_margin = 1.1;
  double scl_x2_lo = 1.6;
  double scl_x2_hi = 2.2;

  std::array<SelectorTree, 2> trees{default_tree_gv(), default_tree_bov()};
  StabilityBounds bounds;
  RegulatorMode mode = RegulatorMode::Tracking;
  bool refine_events = true;

  std::filesystem::path output_dir;

  /// Throws ConfigError for inconsistent settings.
  void validate() const;
};

struct SimRecord {
  double t = 0.0;
  PlantState x;
  ExoStateW w;
  ExoStateD d;
  std::array<int, 2> sigma{0, 0};
  std::array<double, 2> u{0.0, 0.0};
  std::array<double, 2> e{0.0, 0.0};  // pressure error of sigma_1, ASC error of sigma_2
  double y_asc = 0.0;
};

/// Everything a run needs besides the time loop: model, ASC polynomial, controller bank.
struct ControlSetup {
  std::shared_ptr<const CompressorModel> model;
  RegulatorContext ctx;
  std::array<SubController, 8> bank;
  double flow_ref = 1.0;
  PlantState siso_design_point;
  PlantState mimo_design_point;
};

ControlSetup build_setup(const Scenario& s);

struct SimResult {
  std::vector<SimRecord> trace;
  std::vector<OverrideEvent> events;
  std::vector<EventSnapshot> snapshots;
  std::vector<MonitorSample> samples;
  MonitorReport report;
  double flow_ref = 1.0;
  GainMatrix siso_gain = GainMatrix::Zero();
  GainMatrix mimo_gain = GainMatrix::Zero();
  bool completed = true;
  std::string failure;           // set when the run aborted
  double failure_time = 0.0;
  std::size_t steps = 0;
};

using OdeFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Classic RK4 step. Throws NumericalFailure (with a state dump) on a non-finite derivative.
Eigen::VectorXd integrate_step(const Eigen::VectorXd& y, double t, double dt, const OdeFn& f);

/// Full closed-loop run. Module errors during the loop end the run early with
/// completed = false; setup errors propagate.
SimResult run_scenario(const Scenario& s);

std::string trace_csv(const std::vector<SimRecord>& trace);
std::string events_csv(const std::vector<OverrideEvent>& events);

/// Writes trace.csv, events.csv, stability_report.csv and stability_report.txt into dir.
void write_outputs(const SimResult& result, const std::filesystem::path& dir);

}  // namespace ccomp
