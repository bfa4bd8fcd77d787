#include "ccomp/simkit.hpp"

#include "ccomp/csv.hpp"
#include "ccomp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ccomp {

void Scenario::validate() const {
  if (!map) throw ConfigError(name + ": no compressor map");
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw ConfigError(name + ": duration must be >= 0");
  if (!(dt > 0.0)) throw ConfigError(name + ": dt must be > 0");
  const double tau_min = std::min({params.tau_GV, params.tau_PV, params.tau_BOV});
  if (dt > tau_min / 10.0 * (1.0 + 1e-12)) throw ConfigError(name + ": dt exceeds a tenth of the fastest actuator lag");
  if (!(record_interval > 0.0)) throw ConfigError(name + ": record_interval must be > 0");
  if (initial.kind == InitialCondition::Kind::Manifold && (initial.controller < 1 || initial.controller > 8)) {
    throw ConfigError(name + ": initial controller must be 1..8");
  }
  try {
    params.validate();
    exo.validate();
    bounds.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

// ---- setup -----------------------------------------------------------------

namespace {

RegulatorSolution design_point(Domain domain, double x2, const Scenario& s, const RegulatorContext& ctx) {
  SubController c;
  c.k = domain == Domain::Siso ? 4 : 8;
  c.domain = domain;
  c.setpoint = SetpointKind::Constant;
  ExoStateW w = s.w0;
  w.w6 = x2;
  RegulatorContext frozen = ctx;
  frozen.mode = RegulatorMode::Frozen;
  return solve_regulator(c, w, s.d0, frozen);
}

}  // namespace

ControlSetup build_setup(const Scenario& s) {
  s.validate();
  ControlSetup setup;
  setup.model = std::make_shared<CompressorModel>(s.params, s.map);
  setup.flow_ref = s.map->reference_flow();

  ASCPolynomial asc;
  if (s.asc) {
    asc = *s.asc;
  } else {
    asc = fit_scl(*setup.model, s.scl_margin, s.scl_x2_lo, s.scl_x2_hi).poly;
  }
  asc.validate();
  setup.ctx = RegulatorContext{setup.model, asc, s.exo, s.mode};
  setup.bank = default_bank();

  const double mid = s.w0.w1;
  const auto siso = design_point(Domain::Siso, s.siso_design_x2.value_or(mid), s, setup.ctx);
  const auto mimo = design_point(Domain::Mimo, s.mimo_design_x2.value_or(mid), s, setup.ctx);
  setup.siso_design_point = siso.chi;
  setup.mimo_design_point = mimo.chi;

  const DisturbanceInput z{s.d0.signal()};
  const GainMatrix g_siso = s.siso_gain ? *s.siso_gain
                                        : design_gains(Domain::Siso, *setup.model, siso.chi, siso.u_bar, z,
                                                       setup.flow_ref, s.siso_poles);
  GainRow gv = g_siso.row(0);
  const GainMatrix g_mimo = s.mimo_gain ? *s.mimo_gain
                                        : design_gains(Domain::Mimo, *setup.model, mimo.chi, mimo.u_bar, z,
                                                       setup.flow_ref, s.mimo_poles, &gv);
  for (auto& c : setup.bank) c.gain = c.domain == Domain::Siso ? g_siso : g_mimo;
  return setup;
}

// ---- integration -----------------------------------------------------------

Eigen::VectorXd integrate_step(const Eigen::VectorXd& y, double t, double dt, const OdeFn& f) {
  if (!(dt > 0.0)) throw InvalidParameter("integrate_step: dt must be > 0");
  auto checked = [&](double tt, const Eigen::VectorXd& yy) {
    Eigen::VectorXd k = f(tt, yy);
    if (!k.allFinite()) {
      std::ostringstream os;
      os << "non-finite derivative at t=" << tt << ", state [";
      for (Eigen::Index i = 0; i < yy.size(); ++i) os << (i ? ", " : "") << yy[i];
      os << "]";
      throw NumericalFailure(os.str());
    }
    return k;
  };
  const Eigen::VectorXd k1 = checked(t, y);
  const Eigen::VectorXd k2 = checked(t + 0.5 * dt, y + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = checked(t + 0.5 * dt, y + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = checked(t + dt, y + dt * k3);
  return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

using Solutions = std::array<RegulatorSolution, 8>;
using Outputs = std::array<ChannelValues, 2>;

PlantState clamp_actuators(PlantState x) {
  x.r_gv = std::clamp(x.r_gv, 0.0, 1.0);
  x.r_pv = std::clamp(x.r_pv, 0.0, 1.0);
  x.r_bov = std::clamp(x.r_bov, 0.0, 1.0);
  return x;
}

class Runner {
 public:
  Runner(const Scenario& s) : s_(s), setup_(build_setup(s)), rules_(s.latches ? ramp_latches(s.ramp_increasing)
                                                                              : std::vector<LatchRule>{}) {}

  SimResult run();

 private:
  void exo_at(double t, ExoStateW& w, ExoStateD& d) const {
    w = s_.w0;
    d = s_.d0;
    exo_advance(w, d, s_.exo, t);
  }

  Solutions solve_all(double t, const Solutions* warm) const {
    ExoStateW w;
    ExoStateD d;
    exo_at(t, w, d);
    Solutions out;
    for (int k = 0; k < 8; ++k) {
      out[k] = solve_regulator(setup_.bank[k], w, d, setup_.ctx, warm ? &(*warm)[k] : nullptr);
    }
    return out;
  }

  Outputs outputs(const PlantState& x, const Solutions& sol) const {
    Outputs p;
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 8; ++k) p[j][k] = control_output(setup_.bank[k], j, x, sol[k]);
    return p;
  }

  StateDerivative deriv(const PlantState& x, const Solutions& sol, const ExoStateD& d) const {
    const PlantState xc = clamp_actuators(x);
    const auto sel = evaluate_switching(sw_, s_.trees, rules_, outputs(xc, sol));
    return setup_.model->rhs(xc, {sel.u[0], sel.u[1]}, {d.signal()});
  }

  double error_norm(int k, const PlantState& x, const ExoStateW& w) const {
    const auto& c = setup_.bank[k - 1];
    const Eigen::Vector2d e = tracking_error(c, x, w, setup_.ctx.asc);
    return c.domain == Domain::Siso ? std::abs(e[0]) : e.norm();
  }

  void sample(double t, const PlantState& x, const ExoStateW& w, const SwitchingStep& st, SimResult& res) const {
    MonitorSample m;
    m.t = t;
    m.e_norm[0] = error_norm(st.sigma[0], x, w);
    m.e_norm[1] = setup_.bank[st.sigma[1] - 1].domain == Domain::Mimo ? error_norm(st.sigma[1], x, w)
                                                                       : std::numeric_limits<double>::quiet_NaN();
    res.samples.push_back(m);
  }

  void record(double t, const PlantState& x, const SwitchingStep& st, SimResult& res) const {
    SimRecord r;
    r.t = t;
    r.x = x;
    exo_at(t, r.w, r.d);
    r.sigma = st.sigma;
    r.u = st.u;
    const auto& c1 = setup_.bank[st.sigma[0] - 1];
    const auto& c2 = setup_.bank[st.sigma[1] - 1];
    r.e[0] = tracking_error(c1, x, r.w, setup_.ctx.asc)[0];
    r.e[1] = c2.domain == Domain::Mimo ? tracking_error(c2, x, r.w, setup_.ctx.asc)[1] : 0.0;
    r.y_asc = setup_.ctx.asc.value(x.c2, x.pi);
    res.trace.push_back(r);
  }

  EventSnapshot refine(const OverrideEvent& ev, double t0, double dt, const PlantState& x0, const StateDerivative& f0,
                       const PlantState& x1, const StateDerivative& f1, const Solutions& warm) const;

  const Scenario& s_;
  ControlSetup setup_;
  std::vector<LatchRule> rules_;
  SwitchingState sw_;
};

EventSnapshot Runner::refine(const OverrideEvent& ev, double t0, double dt, const PlantState& x0,
                             const StateDerivative& f0, const PlantState& x1, const StateDerivative& f1,
                             const Solutions& warm) const {
  const int j = ev.j - 1;
  const auto& c_from = setup_.bank[ev.k_from - 1];
  const auto& c_to = setup_.bank[ev.k_to - 1];

  auto state_at = [&](double t) {
    const double th = (t - t0) / dt;
    const double h00 = (1 + 2 * th) * (1 - th) * (1 - th), h10 = th * (1 - th) * (1 - th);
    const double h01 = th * th * (3 - 2 * th), h11 = th * th * (th - 1);
    const PlantState::Vector v = h00 * x0.vec() + h10 * dt * f0 + h01 * x1.vec() + h11 * dt * f1;
    return clamp_actuators(PlantState::from(v));
  };
  struct At {
    PlantState x;
    RegulatorSolution from, to;
    double dp;
  };
  auto eval = [&](double t) {
    ExoStateW w;
    ExoStateD d;
    exo_at(t, w, d);
    At a;
    a.x = state_at(t);
    a.from = solve_regulator(c_from, w, d, setup_.ctx, &warm[ev.k_from - 1]);
    a.to = solve_regulator(c_to, w, d, setup_.ctx, &warm[ev.k_to - 1]);
    a.dp = control_output(c_from, j, a.x, a.from) - control_output(c_to, j, a.x, a.to);
    return a;
  };

  double t_i = t0 + dt;
  if (s_.refine_events) {
    try {
      t_i = locate_event(t0, t0 + dt, [&](double t) { return eval(t).dp; }, 1e-7);
    } catch (const DomainError&) {
      // the switch went through an intermediate leaf; keep the step time
    }
  }
  const At a = eval(t_i);
  EventSnapshot snap;
  snap.event = ev;
  snap.event.t = t_i;
  snap.event.delta_p = std::abs(a.dp);
  snap.x = a.x;
  snap.chi_from = a.from.chi;
  snap.chi_to = a.to.chi;
  return snap;
}

SimResult Runner::run() {
  SimResult res;
  res.flow_ref = setup_.flow_ref;
  res.siso_gain = setup_.bank[0].gain;
  res.mimo_gain = setup_.bank[4].gain;

  const double dt = s_.dt;
  const auto n_steps = static_cast<std::size_t>(std::llround(s_.duration / dt));
  const auto rec_every = static_cast<std::size_t>(std::max<long long>(1, std::llround(s_.record_interval / dt)));

  Solutions sol_now = solve_all(0.0, nullptr);
  PlantState x;
  switch (s_.initial.kind) {
    case InitialCondition::Kind::Manifold: x = sol_now[s_.initial.controller - 1].chi; break;
    case InitialCondition::Kind::Equilibrium:
      x = find_equilibrium({s_.initial.pressure_ratio, {}}, FreeInputs::GuideVane, {s_.d0.signal()}, *setup_.model)
              .state;
      break;
    case InitialCondition::Kind::State: x = s_.initial.state; break;
  }
  if (x.r_gv < 0.0 || x.r_gv > 1.0 || x.r_pv < 0.0 || x.r_pv > 1.0 || x.r_bov < 0.0 || x.r_bov > 1.0) {
    throw ConfigError(s_.name + ": initial actuator positions outside [0, 1]");
  }
  setup_.model->map().evaluate(x.c2, x.r_gv);

  ExoStateW w;
  ExoStateD d;
  exo_at(0.0, w, d);
  SwitchingStep st = step_switching(sw_, s_.trees, rules_, outputs(x, sol_now), 0.0);
  sample(0.0, x, w, st, res);
  record(0.0, x, st, res);
  std::array<double, 2> last_event{0.0, 0.0};

  for (std::size_t n = 0; n < n_steps; ++n) {
    const double t0 = static_cast<double>(n) * dt;
    const double t1 = static_cast<double>(n + 1) * dt;
    try {
      ExoStateW wh, w1;
      ExoStateD dh, d1, d0;
      exo_at(t0, w, d0);
      exo_at(t0 + 0.5 * dt, wh, dh);
      exo_at(t1, w1, d1);
      const Solutions sol_half = solve_all(t0 + 0.5 * dt, &sol_now);
      const Solutions sol_next = solve_all(t1, &sol_half);

      const PlantState::Vector xv = x.vec();
      const StateDerivative k1 = deriv(x, sol_now, d0);
      const StateDerivative k2 = deriv(PlantState::from(xv + 0.5 * dt * k1), sol_half, dh);
      const StateDerivative k3 = deriv(PlantState::from(xv + 0.5 * dt * k2), sol_half, dh);
      const StateDerivative k4 = deriv(PlantState::from(xv + dt * k3), sol_next, d1);
      const PlantState::Vector xn = xv + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!xn.allFinite()) throw NumericalFailure("non-finite state");
      const PlantState x_new = clamp_actuators(PlantState::from(xn));
      if (!(x_new.pi >= 1.0)) throw DomainError("pressure ratio fell below ambient");
      setup_.model->map().evaluate(x_new.c2, x_new.r_gv);

      const Outputs p_next = outputs(x_new, sol_next);
      st = step_switching(sw_, s_.trees, rules_, p_next, t1);
      if (!st.events.empty()) {
        const StateDerivative f1 = deriv(x_new, sol_next, d1);
        for (const auto& ev : st.events) {
          EventSnapshot snap = refine(ev, t0, dt, x, k1, x_new, f1, sol_now);
          snap.event.dwell = snap.event.t - last_event[ev.j - 1];
          last_event[ev.j - 1] = snap.event.t;
          res.events.push_back(snap.event);
          res.snapshots.push_back(snap);
        }
      }

      x = x_new;
      sol_now = sol_next;
      res.steps = n + 1;
      sample(t1, x, w1, st, res);
      if ((n + 1) % rec_every == 0 || n + 1 == n_steps) record(t1, x, st, res);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      res.completed = false;
      res.failure = e.what();
      res.failure_time = t0;
      break;
    }
  }

  res.report = monitor(res.samples, res.snapshots, s_.bounds, setup_.flow_ref);
  return res;
}

}  // namespace

SimResult run_scenario(const Scenario& s) {
  Runner runner(s);
  return runner.run();
}

// ---- output ------------------------------------------------------------------

std::string trace_csv(const std::vector<SimRecord>& trace) {
  std::string out =
      "t,x1,x2,x3,x4,x5,w1,w2,w3,w4,w5,w6,d1,d2,d3,sigma1,sigma2,u1,u2,e1,e2,y_asc\n";
  std::vector<std::string> f;
  for (const auto& r : trace) {
    f.clear();
    f.push_back(format_double(r.t));
    for (double v : r.x.vec()) f.push_back(format_double(v));
    for (double v : r.w.vec()) f.push_back(format_double(v));
    for (double v : r.d.vec()) f.push_back(format_double(v));
    f.push_back(std::to_string(r.sigma[0]));
    f.push_back(std::to_string(r.sigma[1]));
    f.push_back(format_double(r.u[0]));
    f.push_back(format_double(r.u[1]));
    f.push_back(format_double(r.e[0]));
    f.push_back(format_double(r.e[1]));
    f.push_back(format_double(r.y_asc));
    out += join_row(f);
  }
  return out;
}

std::string events_csv(const std::vector<OverrideEvent>& events) {
  std::string out = "t_i,j,k_from,k_to,delta_p,dwell\n";
  for (const auto& e : events) {
    out += join_row({format_double(e.t), std::to_string(e.j), std::to_string(e.k_from), std::to_string(e.k_to),
                     format_double(e.delta_p), format_double(e.dwell)});
  }
  return out;
}

void write_outputs(const SimResult& result, const std::filesystem::path& dir) {
  write_file(dir / "trace.csv", trace_csv(result.trace));
  write_file(dir / "events.csv", events_csv(result.events));
  write_file(dir / "stability_report.csv", report_csv(result.report));
  std::string text = report_text(result.report);
  if (!result.completed) {
    std::ostringstream os;
    os << "run aborted at t=" << result.failure_time << " after " << result.trace.size()
       << " records: " << result.failure << "\n";
    text = os.str() + text;
  }
  write_file(dir / "stability_report.txt", text);
}

}  // namespace ccomp
