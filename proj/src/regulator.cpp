#include "ccomp/regulator.hpp"

#include "ccomp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

namespace ccomp {

// ---- ASC polynomial -------------------------------------------------------

void ASCPolynomial::validate() const {
  if (!(flow_ref > 0.0)) throw InvalidParameter("ASC polynomial: flow_ref must be > 0");
  for (std::size_t n1 = 1; n1 < b.size(); ++n1) {
    for (double v : b[n1]) {
      if (v != 0.0) return;
    }
  }
  throw InvalidParameter("ASC polynomial needs a nonzero coefficient with n1 >= 1");
}

double ASCPolynomial::value(double x1, double x2) const {
  const double s = x1 / flow_ref;
  double out = 0.0;
  double p1 = 1.0;
  for (const auto& row : b) {
    double inner = 0.0;
    for (auto it = row.rbegin(); it != row.rend(); ++it) inner = inner * x2 + *it;
    out += p1 * inner;
    p1 *= s;
  }
  return out;
}

double ASCPolynomial::d_dx1(double x1, double x2) const {
  const double s = x1 / flow_ref;
  double out = 0.0;
  double p1 = 1.0;
  for (std::size_t n1 = 1; n1 < b.size(); ++n1) {
    double inner = 0.0;
    for (auto it = b[n1].rbegin(); it != b[n1].rend(); ++it) inner = inner * x2 + *it;
    out += static_cast<double>(n1) * p1 * inner;
    p1 *= s;
  }
  return out / flow_ref;
}

double y_asc(double x1, double x2, const ASCPolynomial& poly) { return poly.value(x1, x2); }

double surge_flow_at(const CompressorModel& model, double x2) {
  const auto& map = model.map();
  const double work = model.pressure_work(x2);
  auto [lo, hi] = map.r_gv_range();
  const double w_lo = map.surge_limit(lo).work;
  const double w_hi = map.surge_limit(hi).work;
  if (work < std::min(w_lo, w_hi) || work > std::max(w_lo, w_hi)) {
    std::ostringstream os;
    os << "pressure ratio " << x2 << " not on the map's surge line";
    throw UnreachableTarget(os.str());
  }
  const bool rising = w_hi > w_lo;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    const bool below = map.surge_limit(mid).work < work;
    if (below == rising) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return map.surge_limit(0.5 * (lo + hi)).c2;
}

SclFit fit_scl(const CompressorModel& model, double margin, double x2_lo, double x2_hi, int samples) {
  if (!(margin > 1.0)) throw InvalidParameter("SCL margin must be > 1");
  if (!(x2_hi > x2_lo) || samples < 3) throw InvalidParameter("SCL fit needs a range and >= 3 samples");
  const double c_ref = model.map().reference_flow();
  SclFit fit;
  Eigen::MatrixXd V(samples, 3);
  Eigen::VectorXd rhs(samples);
  for (int i = 0; i < samples; ++i) {
    const double x2 = x2_lo + (x2_hi - x2_lo) * i / (samples - 1);
    const double c = margin * surge_flow_at(model, x2);
    fit.anchors.emplace_back(x2, c);
    V(i, 0) = 1.0;
    V(i, 1) = x2;
    V(i, 2) = x2 * x2;
    rhs[i] = c / c_ref;
  }
  const Eigen::Vector3d q = V.colPivHouseholderQr().solve(rhs);
  fit.poly.flow_ref = c_ref;
  fit.poly.b = {{-q[0], -q[1], -q[2]}, {1.0}};
  for (const auto& [x2, c] : fit.anchors) {
    fit.max_residual = std::max(fit.max_residual, std::abs(fit.poly.value(c, x2)));
  }
  return fit;
}

// ---- setpoints and bank ----------------------------------------------------

double setpoint_value(SetpointKind kind, const ExoStateW& w) {
  switch (kind) {
    case SetpointKind::Sine: return w.w1 + w.w2;
    case SetpointKind::Lower: return w.w4;
    case SetpointKind::Upper: return w.w5;
    case SetpointKind::Constant: return w.w6;
  }
  return 0.0;
}

double setpoint_rate(SetpointKind kind, const ExoStateW& w, const ExoParams& p) {
  return kind == SetpointKind::Sine ? p.omega_w * w.w3 : 0.0;
}

std::array<SubController, 8> default_bank() {
  std::array<SubController, 8> bank;
  const SetpointKind kinds[4] = {SetpointKind::Sine, SetpointKind::Lower, SetpointKind::Upper,
                                 SetpointKind::Constant};
  for (int i = 0; i < 8; ++i) {
    bank[i].k = i + 1;
    bank[i].domain = i < 4 ? Domain::Siso : Domain::Mimo;
    bank[i].setpoint = kinds[i % 4];
  }
  return bank;
}

Eigen::Vector2d tracking_error(const SubController& c, const PlantState& x, const ExoStateW& w,
                               const ASCPolynomial& asc) {
  Eigen::Vector2d e(x.pi - setpoint_value(c.setpoint, w), 0.0);
  // ASC setpoint is the surge control line itself.
  if (c.domain == Domain::Mimo) e[1] = asc.value(x.c2, x.pi);
  return e;
}

// ---- regulator solution ----------------------------------------------------

namespace {

struct RegulatorProblem {
  const SubController& c;
  const RegulatorContext& ctx;
  bool mimo() const { return c.domain == Domain::Mimo; }

  double pv_position(const ExoStateD& d) const {
    if (ctx.mode == RegulatorMode::Frozen) return d.signal();
    return pv_manifold(d, ctx.exo.omega_d, ctx.model->params().tau_PV);
  }

  PlantState state(const SmallVec& y, const ExoStateW& w, const ExoStateD& d) const {
    PlantState x;
    x.c2 = y[0];
    x.pi = setpoint_value(c.setpoint, w);
    x.r_gv = y[1];
    x.r_pv = pv_position(d);
    x.r_bov = mimo() ? y[2] : 0.0;
    return x;
  }

  // f1, f2 against their targets, plus the SCL condition on the MIMO domain.
  SmallVec residual(const SmallVec& y, const ExoStateW& w, const ExoStateD& d, double t1, double t2) const {
    const PlantState x = state(y, w, d);
    SmallVec r(y.size());
    if (!(x.pi >= 1.0)) {
      r.setConstant(std::numeric_limits<double>::quiet_NaN());
      return r;
    }
    const StateDerivative dx = ctx.model->rhs_extended(x, {x.r_gv, x.r_bov}, {d.signal()});
    r[0] = dx[0] - t1;
    r[1] = dx[1] - t2;
    if (mimo()) r[2] = ctx.asc.value(x.c2, x.pi);
    return r;
  }

  SmallVec guess(const ExoStateW& w, const ExoStateD& d) const {
    const auto& model = *ctx.model;
    const auto& p = model.params();
    const double x2 = std::max(1.0, setpoint_value(c.setpoint, w));
    const double x4 = pv_position(d);
    const double pv_flow = model.valve_flow(x2, p.kv0 * std::pow(1.0 / p.kv0, x4), Valve::Process);
    SmallVec y(mimo() ? 3 : 2);
    double flow = pv_flow;
    if (mimo()) {
      // On the SCL; only the n1 <= 1 terms are used for the guess.
      const auto& b = ctx.asc.b;
      double c0 = 0.0, c1 = 0.0;
      for (std::size_t n2 = 0; n2 < b[0].size(); ++n2) c0 += b[0][n2] * std::pow(x2, double(n2));
      for (std::size_t n2 = 0; b.size() > 1 && n2 < b[1].size(); ++n2) c1 += b[1][n2] * std::pow(x2, double(n2));
      if (c1 != 0.0) flow = -c0 / c1 * ctx.asc.flow_ref;
      y[2] = (flow - pv_flow) / model.valve_flow(x2, 1.0, Valve::BlowOff);
    }
    y[0] = flow;
    const double work = model.pressure_work(x2);
    auto [lo, hi] = model.map().r_gv_range();
    double best = 0.5 * (lo + hi), best_err = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 40; ++i) {
      const double r = lo + (hi - lo) * i / 40.0;
      const double err = std::abs(model.map().evaluate_extended(flow, r) - work);
      if (err < best_err) {
        best_err = err;
        best = r;
      }
    }
    y[1] = best;
    return y;
  }
};

constexpr double kRegTol = 1e-11;
constexpr int kJacobianMaxAge = 500;

NewtonResult newton(const RegulatorProblem& prob, const ExoStateW& w, const ExoStateD& d, double t1, double t2,
                    const SmallVec& y0, const SmallMat* jac) {
  NewtonOptions opts;
  opts.tolerance = kRegTol;
  opts.max_iterations = 60;
  opts.chord = jac != nullptr;
  auto f = [&](const SmallVec& y) { return prob.residual(y, w, d, t1, t2); };
  return damped_newton(f, y0, opts, jac);
}

}  // namespace

RegulatorSolution solve_regulator(const SubController& c, const ExoStateW& w, const ExoStateD& d,
                                  const RegulatorContext& ctx, const RegulatorSolution* warm) {
  if (!ctx.model) throw InvalidParameter("regulator context without plant model");
  const RegulatorProblem prob{c, ctx};
  const auto& p = ctx.model->params();
  const bool tracking = ctx.mode == RegulatorMode::Tracking;

  const bool use_warm = warm != nullptr && warm->y.size() == (prob.mimo() ? 3 : 2);
  SmallVec y = use_warm ? warm->y : prob.guess(w, d);
  const SmallMat* jac = use_warm && warm->jacobian.size() > 0 && warm->jacobian_age < kJacobianMaxAge
                            ? &warm->jacobian
                            : nullptr;
  double t1 = tracking && use_warm ? warm->chi_dot[0] : 0.0;
  double t2 = tracking ? setpoint_rate(c.setpoint, w, ctx.exo) : 0.0;

  RegulatorSolution sol;
  sol.jacobian_age = jac ? warm->jacobian_age + 1 : 0;
  NewtonResult res = newton(prob, w, d, t1, t2, y, jac);

  Eigen::Matrix<double, 5, 1> chi_dot = Eigen::Matrix<double, 5, 1>::Zero();
  const double omega = std::max(ctx.exo.omega_w, ctx.exo.omega_d);
  if (tracking && omega > 0.0) {
    // Drift of the solution along the exo flow, by implicit differentiation.
    const double h = 1e-3 / omega;
    auto shift = [&](const ExoStateW& w0, const ExoStateD& d0, double s) {
      return std::pair{ExoStateW::from(w0.vec() + s * exo_w_rhs(w0, ctx.exo)),
                       ExoStateD::from(d0.vec() + s * exo_d_rhs(d0, ctx.exo))};
    };
    // t1r is the rate of the f1 target; the f2 target moves with w as well
    auto drift = [&](const SmallVec& y0, const ExoStateW& w0, const ExoStateD& d0, const SmallMat& jac, double t1r) {
      const auto [wp, dp] = shift(w0, d0, h);
      const auto [wm, dm] = shift(w0, d0, -h);
      const double t2p = setpoint_rate(c.setpoint, wp, ctx.exo), t2m = setpoint_rate(c.setpoint, wm, ctx.exo);
      const SmallVec dv =
          (prob.residual(y0, wp, dp, t1 + h * t1r, t2p) - prob.residual(y0, wm, dm, t1 - h * t1r, t2m)) / (2.0 * h);
      return SmallVec(jac.colPivHouseholderQr().solve(-dv));
    };
    // c2 drift comes from the f2 (and SCL) rows alone, so its own rate is found
    // by re-solving the drift a short way along the flow
    auto chi1_accel = [&](const SmallVec& dy) {
      // rows f2 (and SCL) against columns c2 (and r_bov); r_gv does not enter them
      const std::vector<int> idx = prob.mimo() ? std::vector<int>{0, 2} : std::vector<int>{0};
      const int m = static_cast<int>(idx.size());
      double v[2];
      for (int i = 0; i < 2; ++i) {
        const double s = i == 0 ? h : -h;
        const auto [ws, ds] = shift(w, d, s);
        const SmallVec ys = res.x + s * dy;
        const double t2s = setpoint_rate(c.setpoint, ws, ctx.exo);
        SmallMat js(m, m);
        for (int a = 0; a < m; ++a) {
          const double step = 1e-6 * std::max(1.0, std::abs(ys[idx[a]]));
          SmallVec yp = ys, ym = ys;
          yp[idx[a]] += step;
          ym[idx[a]] -= step;
          const SmallVec col = (prob.residual(yp, ws, ds, t1, t2s) - prob.residual(ym, ws, ds, t1, t2s)) / (2.0 * step);
          for (int b = 0; b < m; ++b) js(b, a) = col[b + 1];
        }
        const auto [wp, dp] = shift(ws, ds, h);
        const auto [wm, dm] = shift(ws, ds, -h);
        const SmallVec dv = (prob.residual(ys, wp, dp, t1, setpoint_rate(c.setpoint, wp, ctx.exo)) -
                             prob.residual(ys, wm, dm, t1, setpoint_rate(c.setpoint, wm, ctx.exo))) /
                            (2.0 * h);
        v[i] = js.colPivHouseholderQr().solve(-dv.tail(m))[0];
      }
      return (v[0] - v[1]) / (2.0 * h);
    };

    const int rounds = use_warm ? 1 : 3;
    double t1_rate = 0.0;
    for (int round = 0; round < rounds; ++round) {
      const SmallMat j0 = numeric_jacobian([&](const SmallVec& q) { return prob.residual(q, w, d, t1, t2); }, res.x);
      SmallVec dy = drift(res.x, w, d, j0, 0.0);
      t1_rate = chi1_accel(dy);
      dy = drift(res.x, w, d, j0, t1_rate);
      chi_dot[0] = dy[0];
      chi_dot[1] = t2;
      chi_dot[2] = dy[1];
      chi_dot[3] = pv_manifold(ExoStateD::from(exo_d_rhs(d, ctx.exo)), ctx.exo.omega_d, p.tau_PV);
      chi_dot[4] = prob.mimo() ? dy[2] : 0.0;
      t1 = chi_dot[0];
      res = newton(prob, w, d, t1, t2, res.x, &j0);
    }
    sol.t1_rate = t1_rate;
  }

  const double norm = res.residual_norm();
  if (!(norm <= 1e-9)) {
    std::ostringstream os;
    os << "regulator of C" << c.k << " did not converge";
    throw NoConvergence(os.str(), norm);
  }

  sol.chi = prob.state(res.x, w, d);
  sol.chi_dot = chi_dot;
  sol.u_bar.u_gv = sol.chi.r_gv + p.tau_GV * chi_dot[2];
  sol.u_bar.u_bov = sol.chi.r_bov + p.tau_BOV * chi_dot[4];
  sol.residual = norm;
  sol.y = res.x;
  sol.jacobian = res.jacobian;
  return sol;
}

double control_output(const SubController& c, int j, const PlantState& x, const RegulatorSolution& sol) {
  if (j == 1 && c.domain == Domain::Siso) return 0.0;
  const double ff = j == 0 ? sol.u_bar.u_gv : sol.u_bar.u_bov;
  const double p = ff - c.gain.row(j).dot(x.vec() - sol.chi.vec());
  return std::clamp(p, 0.0, 1.0);
}

// ---- gain design -----------------------------------------------------------

Linearization linearize(const CompressorModel& model, const PlantState& x, const ControlInput& u,
                        DisturbanceInput z, double flow_ref) {
  Linearization lin;
  const PlantState::Vector x0 = x.vec();
  for (int i = 0; i < 5; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x0[i]));
    PlantState::Vector xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    lin.A.col(i) = (model.rhs_extended(PlantState::from(xp), u, z) - model.rhs_extended(PlantState::from(xm), u, z)) /
                   (2.0 * h);
  }
  for (int j = 0; j < 2; ++j) {
    const double h = 1e-6;
    ControlInput up = u, um = u;
    (j == 0 ? up.u_gv : up.u_bov) += h;
    (j == 0 ? um.u_gv : um.u_bov) -= h;
    lin.B.col(j) = (model.rhs_extended(x, up, z) - model.rhs_extended(x, um, z)) / (2.0 * h);
  }
  // x1 in units of flow_ref
  lin.A.row(0) /= flow_ref;
  lin.A.col(0) *= flow_ref;
  lin.B.row(0) /= flow_ref;
  return lin;
}

Eigen::RowVectorXd place_poles(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const std::vector<double>& poles) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || b.size() != n) throw InvalidParameter("place_poles: dimension mismatch");
  if (static_cast<Eigen::Index>(poles.size()) != n) {
    throw InvalidParameter("place_poles: need " + std::to_string(n) + " poles");
  }
  for (double p : poles) {
    if (!(p < 0.0)) throw InvalidParameter("place_poles: poles must have negative real part");
  }
  Eigen::MatrixXd ctrb(n, n);
  ctrb.col(0) = b;
  for (Eigen::Index i = 1; i < n; ++i) ctrb.col(i) = A * ctrb.col(i - 1);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ctrb);
  const auto sv = svd.singularValues();
  if (!(sv[n - 1] > 1e-12 * sv[0])) throw NumericalFailure("place_poles: pair is not controllable");

  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  for (double p : poles) phi = phi * (A - p * Eigen::MatrixXd::Identity(n, n));
  Eigen::RowVectorXd en = Eigen::RowVectorXd::Zero(n);
  en[n - 1] = 1.0;
  // e_n^T C^-1 phi(A), via a solve on C^T
  const Eigen::VectorXd row = ctrb.transpose().colPivHouseholderQr().solve(en.transpose());
  return row.transpose() * phi;
}

namespace {

const int kSisoIdx[3] = {0, 1, 2};
const int kMimoIdx[4] = {0, 1, 2, 4};

template <int N>
Eigen::MatrixXd sub(const Eigen::Matrix<double, 5, 5>& A, const int (&idx)[N]) {
  Eigen::MatrixXd out(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) out(i, j) = A(idx[i], idx[j]);
  return out;
}

template <int N>
Eigen::VectorXd subv(const Eigen::Matrix<double, 5, 1>& b, const int (&idx)[N]) {
  Eigen::VectorXd out(N);
  for (int i = 0; i < N; ++i) out[i] = b[idx[i]];
  return out;
}

// physical <-> scaled gain rows (x1 scaled by 1/flow_ref)
GainRow to_physical(GainRow g, double flow_ref) {
  g[0] /= flow_ref;
  return g;
}
GainRow to_scaled(GainRow g, double flow_ref) {
  g[0] *= flow_ref;
  return g;
}

}  // namespace

GainMatrix design_gains(Domain domain, const CompressorModel& model, const PlantState& point, const ControlInput& u,
                        DisturbanceInput z, double flow_ref, const std::vector<double>& poles,
                        const GainRow* guide_vane_row) {
  const Linearization lin = linearize(model, point, u, z, flow_ref);
  GainMatrix G = GainMatrix::Zero();

  GainRow gv = GainRow::Zero();
  if (domain == Domain::Mimo && guide_vane_row != nullptr) {
    gv = to_scaled(*guide_vane_row, flow_ref);
  } else {
    if (domain == Domain::Mimo && poles.size() < 3) throw InvalidParameter("design_gains: MIMO needs 4 poles");
    const std::vector<double> p3(poles.begin(), poles.begin() + std::min<std::size_t>(3, poles.size()));
    const Eigen::RowVectorXd k = place_poles(sub(lin.A, kSisoIdx), subv(Eigen::Matrix<double, 5, 1>(lin.B.col(0)), kSisoIdx), p3);
    for (int i = 0; i < 3; ++i) gv[kSisoIdx[i]] = k[i];
    if (domain == Domain::Siso && poles.size() != 3) throw InvalidParameter("design_gains: SISO needs 3 poles");
  }
  G.row(0) = to_physical(gv, flow_ref);
  if (domain == Domain::Siso) return G;

  const Eigen::Matrix<double, 5, 5> acl = lin.A - lin.B.col(0) * gv;
  const Eigen::RowVectorXd k = place_poles(sub(acl, kMimoIdx), subv(Eigen::Matrix<double, 5, 1>(lin.B.col(1)), kMimoIdx), poles);
  GainRow bov = GainRow::Zero();
  for (int i = 0; i < 4; ++i) bov[kMimoIdx[i]] = k[i];
  G.row(1) = to_physical(bov, flow_ref);
  return G;
}

Eigen::VectorXcd closed_loop_eigenvalues(Domain domain, const GainMatrix& gain, const CompressorModel& model,
                                         const PlantState& point, const ControlInput& u, DisturbanceInput z,
                                         double flow_ref) {
  const Linearization lin = linearize(model, point, u, z, flow_ref);
  Eigen::Matrix<double, 5, 5> acl = lin.A - lin.B.col(0) * to_scaled(gain.row(0), flow_ref);
  if (domain == Domain::Siso) return sub(acl, kSisoIdx).eigenvalues();
  acl -= lin.B.col(1) * to_scaled(gain.row(1), flow_ref);
  return sub(acl, kMimoIdx).eigenvalues();
}

// ---- structural analysis ---------------------------------------------------

namespace {

using StateVec = PlantState::Vector;
using Output = std::function<double(const StateVec&)>;

// i-th output derivative with constant inputs, by nested central differences along f.
double lie(const Output& h, int order, const StateVec& x, const ControlInput& u, DisturbanceInput z,
           const CompressorModel& model, double eps) {
  if (order == 0) return h(x);
  const StateVec f = model.rhs_extended(PlantState::from(x), u, z);
  return (lie(h, order - 1, x + eps * f, u, z, model, eps) - lie(h, order - 1, x - eps * f, u, z, model, eps)) /
         (2.0 * eps);
}

// d/du_j of the order-th derivative; exactly zero when u_j has not appeared yet.
double input_influence(const Output& h, int order, int j, const StateVec& x, const ControlInput& u,
                       DisturbanceInput z, const CompressorModel& model) {
  constexpr double du = 0.1;
  constexpr double eps = 1e-3;
  ControlInput up = u, um = u;
  (j == 0 ? up.u_gv : up.u_bov) += du;
  (j == 0 ? um.u_gv : um.u_bov) -= du;
  return (lie(h, order, x, up, z, model, eps) - lie(h, order, x, um, z, model, eps)) / (2.0 * du);
}

bool appears(const Output& h, int order, int j, const StateVec& x, const ControlInput& u, DisturbanceInput z,
             const CompressorModel& model) {
  const double g = input_influence(h, order, j, x, u, z, model);
  const double scale = std::abs(lie(h, order, x, u, z, model, 1e-3));
  return std::abs(g) > 1e-6 * std::max(scale, 1e-12);
}

int relative_degree(const Output& h, std::initializer_list<int> inputs, const StateVec& x, const ControlInput& u,
                    DisturbanceInput z, const CompressorModel& model) {
  for (int r = 1; r <= 5; ++r) {
    for (int j : inputs) {
      if (appears(h, r, j, x, u, z, model)) return r;
    }
  }
  return -1;
}

}  // namespace

StructureReport check_structure(const CompressorModel& model, const ASCPolynomial& asc, int n_points,
                                std::uint64_t seed) {
  StructureReport report;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const auto [r_lo, r_hi] = model.map().r_gv_range();
  const auto& p = model.params();

  const Output h_pi = [](const StateVec& x) { return x[1]; };
  const Output h_asc = [&asc](const StateVec& x) { return asc.value(x[0], x[1]); };

  double zd_sum = 0.0;
  bool agree = true;
  for (int i = 0; i < n_points; ++i) {
    PlantState x;
    x.r_gv = r_lo + (0.1 + 0.8 * uni(rng)) * (r_hi - r_lo);
    const double surge = model.map().surge_limit(x.r_gv).c2;
    const double choke = model.map().choke_flow(x.r_gv);
    x.c2 = surge + (0.05 + 0.9 * uni(rng)) * (choke - surge);
    x.pi = 1.4 + 0.8 * uni(rng);
    x.r_pv = 0.1 + 0.8 * uni(rng);
    x.r_bov = 0.05 + 0.45 * uni(rng);
    const ControlInput u{0.1 + 0.8 * uni(rng), 0.1 + 0.8 * uni(rng)};
    const DisturbanceInput z{0.1 + 0.8 * uni(rng)};
    const StateVec xv = x.vec();

    StructureReport::Point pt;
    pt.x = x;
    pt.siso_degree = relative_degree(h_pi, {0}, xv, u, z, model);
    pt.mimo_degrees[0] = relative_degree(h_pi, {0, 1}, xv, u, z, model);
    pt.mimo_degrees[1] = relative_degree(h_asc, {0, 1}, xv, u, z, model);
    if (pt.mimo_degrees[0] > 0 && pt.mimo_degrees[1] > 0) {
      Eigen::Matrix2d dec;
      for (int j = 0; j < 2; ++j) {
        dec(0, j) = input_influence(h_pi, pt.mimo_degrees[0], j, xv, u, z, model);
        dec(1, j) = input_influence(h_asc, pt.mimo_degrees[1], j, xv, u, z, model);
      }
      pt.decoupling_det = dec.determinant();
    }

    // PV lag is what remains with both outputs pinned.
    const double h = 1e-4;
    StateVec xp = xv, xm = xv;
    xp[3] += h;
    xm[3] -= h;
    const double f4p = model.rhs_extended(PlantState::from(xp), u, z)[3];
    const double f4m = model.rhs_extended(PlantState::from(xm), u, z)[3];
    zd_sum += (f4p - f4m) / (2.0 * h);

    if (i == 0) {
      report.siso_degree = pt.siso_degree;
      report.mimo_degrees = pt.mimo_degrees;
    } else if (pt.siso_degree != report.siso_degree || pt.mimo_degrees != report.mimo_degrees) {
      agree = false;
    }
    report.points.push_back(pt);
  }
  if (!agree) {
    report.siso_degree = -1;
    report.mimo_degrees = {-1, -1};
  }
  report.zero_dynamics_eigenvalue = n_points > 0 ? zd_sum / n_points : -1.0 / p.tau_PV;
  return report;
}

}  // namespace ccomp
