#include "ccomp/plant.hpp"

#include "ccomp/errors.hpp"
#include "ccomp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ccomp {

namespace {

constexpr double kPositionTol = 1e-9;

void require(bool ok, const char* what) {
  if (!ok) throw InvalidParameter(std::string("invalid plant parameter: ") + what);
}

void require_pressure(double x2) {
  if (!(x2 >= 1.0)) {
    std::ostringstream os;
    os << "pressure ratio " << x2 << " below ambient (x2 >= 1 required)";
    throw DomainError(os.str());
  }
}

// ln(r) / (r - 1), continuous through r = 1.
double log_ratio(double r) {
  const double d = r - 1.0;
  if (std::abs(d) < 1e-8) return 1.0 - 0.5 * d;
  return std::log(r) / d;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

void PlantParams::validate() const {
  require(R_S > 0.0, "R_S > 0");
  require(T1 > 0.0, "T1 > 0");
  require(kappa > 1.0, "kappa > 1");
  require(L12 > 0.0 && L23 > 0.0 && L34 > 0.0, "effective lengths > 0");
  require(A2 > 0.0 && A3 > 0.0 && A4 > 0.0, "cross sections > 0");
  require(A3 < A4, "A3 < A4 (diffuser must expand)");
  require(V > 0.0, "V > 0");
  require(K_PV > 0.0 && K_BOV > 0.0, "valve correction factors > 0");
  require(A_PV_max > 0.0 && A_BOV_max > 0.0, "valve cross sections > 0");
  require(kv0 > 0.0 && kv0 < 1.0, "0 < kv0 < 1");
  require(tau_GV > 0.0 && tau_PV > 0.0 && tau_BOV > 0.0, "time constants > 0");
}

DerivedParams derive_params(const PlantParams& p) {
  p.validate();
  return {p.R_S * p.T1, p.kappa * p.A2 / p.V, (p.kappa - 1.0) / p.kappa};
}

double passage_length(double pressure_ratio, const PlantParams& p) {
  require_pressure(pressure_ratio);
  const double r_imp = std::pow(pressure_ratio, 1.0 / p.kappa) * p.A3 / p.A2;
  const double r_dif = p.A4 / p.A3;
  const double impeller = p.L23 * log_ratio(r_imp);
  const double diffuser = p.L34 * std::log(r_dif) / (r_imp * (r_dif - 1.0));
  return p.L12 + impeller + diffuser;
}

double critical_pressure_ratio(double kappa) {
  const double r_k = (kappa - 1.0) / kappa;
  return std::pow(2.0 / (kappa + 1.0), -1.0 / r_k);
}

double valve_coefficient(double pressure_ratio, const PlantParams& p, Valve which) {
  require_pressure(pressure_ratio);
  const double gain = which == Valve::Process ? p.K_PV * p.A_PV_max / p.A2 : p.K_BOV * p.A_BOV_max / p.A2;
  const double kappa = p.kappa;
  const double r_k = (kappa - 1.0) / kappa;
  if (pressure_ratio <= critical_pressure_ratio(kappa)) return gain;
  const double pr = std::pow(pressure_ratio, r_k);
  return gain / std::sqrt(2.0) * std::pow(2.0 * pr / (kappa + 1.0), (kappa + 1.0) / (2.0 * kappa - 2.0)) *
         std::sqrt((kappa - 1.0) / (pr - 1.0));
}

double valve_stroke(double position, Valve which, const PlantParams& p) {
  if (!(position >= -kPositionTol && position <= 1.0 + kPositionTol)) {
    std::ostringstream os;
    os << "valve position " << position << " outside [0, 1]";
    throw DomainError(os.str());
  }
  const double r = clamp01(position);
  if (which == Valve::Process) return p.kv0 * std::pow(1.0 / p.kv0, r);
  return r;
}

CompressorModel::CompressorModel(PlantParams params, std::shared_ptr<const CompressorMap> map)
    : params_(params), derived_(derive_params(params)), map_(std::move(map)) {
  if (!map_) throw InvalidParameter("compressor model requires a map");
}

double CompressorModel::pressure_work(double pressure_ratio) const {
  return derived_.k1 * (std::pow(pressure_ratio, derived_.r_k) - 1.0);
}

double CompressorModel::valve_flow(double pressure_ratio, double stroke, Valve which) const {
  const double k = valve_coefficient(pressure_ratio, params_, which);
  return k * stroke * std::sqrt(2.0 * pressure_work(pressure_ratio) / derived_.r_k);
}

StateDerivative CompressorModel::evaluate(const PlantState& x, double u_gv, double u_bov, double z, double h_pv,
                                          double h_bov, bool extended) const {
  require_pressure(x.pi);
  const auto& p = params_;
  const auto& d = derived_;
  const double pr = std::pow(x.pi, d.r_k);
  const double work = d.k1 * (pr - 1.0);
  const double head = extended ? map_->evaluate_extended(x.c2, x.r_gv) : map_->evaluate(x.c2, x.r_gv);
  const double valve_term = valve_coefficient(x.pi, p, Valve::Process) * h_pv +
                            valve_coefficient(x.pi, p, Valve::BlowOff) * h_bov;

  StateDerivative dx;
  dx[0] = (head - work) / passage_length(x.pi, p);
  dx[1] = d.k2 * pr * (x.c2 - valve_term * std::sqrt(2.0 * work / d.r_k));
  dx[2] = (u_gv - x.r_gv) / p.tau_GV;
  dx[3] = (z - x.r_pv) / p.tau_PV;
  dx[4] = (u_bov - x.r_bov) / p.tau_BOV;
  return dx;
}

StateDerivative CompressorModel::rhs(const PlantState& x, const ControlInput& u, DisturbanceInput z) const {
  const double h_pv = valve_stroke(x.r_pv, Valve::Process, params_);
  const double h_bov = valve_stroke(x.r_bov, Valve::BlowOff, params_);
  return evaluate(x, clamp01(u.u_gv), clamp01(u.u_bov), clamp01(z.z_pv), h_pv, h_bov, false);
}

StateDerivative CompressorModel::rhs_extended(const PlantState& x, const ControlInput& u,
                                              DisturbanceInput z) const {
  const double h_pv = params_.kv0 * std::pow(1.0 / params_.kv0, x.r_pv);
  return evaluate(x, u.u_gv, u.u_bov, z.z_pv, h_pv, x.r_bov, true);
}

StateDerivative plant_rhs(const PlantState& x, const ControlInput& u, DisturbanceInput z,
                          const CompressorModel& model) {
  return model.rhs(x, u, z);
}

double scaled_residual(const StateDerivative& dx) { return dx.lpNorm<Eigen::Infinity>(); }

Equilibrium find_equilibrium(const EquilibriumTarget& target, FreeInputs free, DisturbanceInput z,
                             const CompressorModel& model, double fixed_bov, std::optional<PlantState> guess) {
  const bool with_bov = free == FreeInputs::GuideVaneAndBlowOff;
  if (with_bov && !target.flow_constraint) {
    throw InvalidParameter("find_equilibrium: freeing the BOV needs a flow constraint");
  }
  if (!with_bov && target.flow_constraint) {
    throw InvalidParameter("find_equilibrium: a flow constraint needs the BOV as free input");
  }
  const double x2 = target.pressure_ratio;
  require_pressure(x2);
  const auto& p = model.params();

  PlantState base;
  base.pi = x2;
  base.r_pv = z.z_pv;
  base.r_bov = fixed_bov;

  SmallVec y0(with_bov ? 3 : 2);
  if (guess) {
    y0[0] = guess->c2;
    y0[1] = guess->r_gv;
    if (with_bov) y0[2] = guess->r_bov;
  } else {
    const double flow = model.valve_flow(x2, p.kv0 * std::pow(1.0 / p.kv0, z.z_pv), Valve::Process) +
                        model.valve_flow(x2, fixed_bov, Valve::BlowOff);
    const auto [r_lo, r_hi] = model.map().r_gv_range();
    y0[0] = flow;
    y0[1] = 0.5 * (r_lo + r_hi);
    if (with_bov) y0[2] = 0.0;
    // Pick the guide-vane position whose stable range holds the flow, if any.
    for (int i = 0; i <= 20; ++i) {
      const double r = r_lo + (r_hi - r_lo) * i / 20.0;
      const double surge = model.map().surge_limit(r).c2;
      if (flow >= surge && flow <= model.map().choke_flow(r)) {
        const double w = model.map().evaluate(flow, r);
        if (w >= model.pressure_work(x2)) {
          y0[1] = r;
          break;
        }
      }
    }
  }

  auto residual = [&](const SmallVec& y) -> SmallVec {
    PlantState x = base;
    x.c2 = y[0];
    x.r_gv = y[1];
    if (with_bov) x.r_bov = y[2];
    SmallVec r(y.size());
    try {
      const StateDerivative dx = model.rhs_extended(x, {x.r_gv, x.r_bov}, z);
      r[0] = dx[0];
      r[1] = dx[1];
      if (with_bov) r[2] = target.flow_constraint(x.c2, x.pi);
    } catch (const MapRangeError&) {
      r.setConstant(std::numeric_limits<double>::quiet_NaN());
    }
    return r;
  };

  NewtonOptions opts;
  opts.tolerance = 1e-13;
  const auto res = damped_newton(residual, y0, opts);
  const double norm = res.residual_norm();
  if (!(norm < 1e-9)) throw NoConvergence("find_equilibrium did not converge", norm);
  // The solve runs on the continued map; the answer itself has to be a real operating point.
  model.map().evaluate(res.x[0], res.x[1]);

  Equilibrium eq;
  eq.state = base;
  eq.state.c2 = res.x[0];
  eq.state.r_gv = res.x[1];
  if (with_bov) eq.state.r_bov = res.x[2];
  eq.input = {eq.state.r_gv, eq.state.r_bov};
  eq.residual = norm;
  return eq;
}

}  // namespace ccomp
