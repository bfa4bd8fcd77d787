#include <catch_amalgamated.hpp>

#include "ccomp/config.hpp"
#include "ccomp/errors.hpp"
#include "ccomp/plant.hpp"
#include "ccomp/regulator.hpp"
#include "test_support.hpp"

#include <cmath>
#include <random>

using namespace ccomp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// composite Simpson on [0, 1]
template <class F>
double simpson(F f, int n = 2000) {
  const double h = 1.0 / n;
  double s = f(0.0) + f(1.0);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

// Flow path integral: L = L12 + int (A2 rho2)/(A rho) ds with A*rho linear along each section.
double passage_length_quadrature(double x2, const PlantParams& p) {
  const double rho_ratio = std::pow(x2, 1.0 / p.kappa);
  const double r_imp = rho_ratio * p.A3 / p.A2;
  const double r_dif = p.A4 / p.A3;
  const double imp = p.L23 * simpson([&](double s) { return 1.0 / (1.0 + (r_imp - 1.0) * s); });
  const double dif = p.L34 / r_imp * simpson([&](double s) { return 1.0 / (1.0 + (r_dif - 1.0) * s); });
  return p.L12 + imp + dif;
}

}  // namespace

TEST_CASE("derived parameters", "[plant]") {
  const PlantParams p;
  const auto d = derive_params(p);
  CHECK_THAT(d.k1, WithinAbs(84779.8, 1e-9));
  CHECK_THAT(d.k2, WithinAbs(0.01925, 1e-15));
  CHECK_THAT(d.r_k, WithinAbs(2.0 / 7.0, 1e-15));

  PlantParams bad = p;
  bad.kappa = 1.0;
  CHECK_THROWS_AS(derive_params(bad), InvalidParameter);
  bad = p;
  bad.A4 = 0.1;  // diffuser must expand
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad = p;
  bad.kv0 = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
}

TEST_CASE("passage length", "[plant]") {
  const PlantParams p;
  CHECK_THAT(passage_length(1.0, p), WithinAbs(20.39357, 1e-5));
  for (double x2 : {1.0, 1.3, 1.9, 2.5, 3.0}) {
    CHECK_THAT(passage_length(x2, p), WithinRel(passage_length_quadrature(x2, p), 1e-10));
  }

  double prev = passage_length(1.0, p);
  for (int i = 1; i < 100; ++i) {
    const double x = 1.0 + 2.0 * i / 99.0;
    const double cur = passage_length(x, p);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS_AS(passage_length(0.99, p), DomainError);
}

TEST_CASE("passage length removable singularity", "[plant]") {
  const PlantParams p;
  // x2^(1/kappa) A3/A2 = 1
  const double x_sing = std::pow(p.A2 / p.A3, p.kappa);
  const double at = passage_length(x_sing, p);
  const double near_lo = passage_length(x_sing * (1.0 - 1e-6), p);
  const double near_hi = passage_length(x_sing * (1.0 + 1e-6), p);
  CHECK(std::isfinite(at));
  CHECK_THAT(at, WithinRel(0.5 * (near_lo + near_hi), 1e-9));
  CHECK_THAT(at, WithinAbs(p.L12 + p.L23 + p.L34 * std::log(2.0), 1e-12));
}

TEST_CASE("valve coefficient branches", "[plant]") {
  CHECK_THAT(critical_pressure_ratio(1.4), WithinAbs(1.8929, 1e-4));
  const PlantParams base;
  CHECK_THAT(valve_coefficient(1.5, base, Valve::Process), WithinAbs(0.196 / 0.44, 1e-12));

  for (double kappa : {1.2, 1.3, 1.4, 1.67}) {
    PlantParams p = base;
    p.kappa = kappa;
    const double pc = critical_pressure_ratio(kappa);
    const double below = valve_coefficient(std::nextafter(pc, 0.0), p, Valve::Process);
    const double above = valve_coefficient(std::nextafter(pc, 10.0), p, Valve::Process);
    const double mid = valve_coefficient(pc, p, Valve::Process);
    CHECK(std::abs(below - above) / mid < 1e-10);
  }
  // upper branch at x2 = 2.5, evaluated by hand in double precision
  CHECK_THAT(valve_coefficient(2.5, base, Valve::BlowOff), WithinRel(0.46221008420415316, 1e-13));
  CHECK_THROWS_AS(valve_coefficient(0.5, base, Valve::Process), DomainError);
}

TEST_CASE("valve stroke", "[plant]") {
  const PlantParams p;
  CHECK_THAT(valve_stroke(0.0, Valve::Process, p), WithinAbs(0.03, 1e-15));
  CHECK_THAT(valve_stroke(1.0, Valve::Process, p), WithinAbs(1.0, 1e-15));
  CHECK_THAT(valve_stroke(0.5, Valve::Process, p), WithinAbs(std::sqrt(0.03), 1e-15));
  CHECK_THAT(valve_stroke(0.3, Valve::BlowOff, p), WithinAbs(0.3, 0.0));
  CHECK_THROWS_AS(valve_stroke(1.1, Valve::BlowOff, p), DomainError);
}

TEST_CASE("rhs structure", "[plant]") {
  const auto model = test::model();
  PlantState x{45.0, 1.8, 0.4, 0.6, 0.0};
  const auto dx = model->rhs(x, {0.4, 0.0}, {0.6});
  CHECK(dx[2] == 0.0);
  CHECK(dx[3] == 0.0);
  CHECK(dx[4] == 0.0);

  // closed BOV: only the PV flows out of the plenum
  const auto& p = model->params();
  const auto d = model->derived();
  const double pr = std::pow(1.8, d.r_k);
  const double outflow = model->valve_flow(1.8, valve_stroke(0.6, Valve::Process, p), Valve::Process);
  CHECK_THAT(dx[1], WithinRel(d.k2 * pr * (45.0 - outflow), 1e-13));

  // map work against plenum work over the passage length
  const double work = model->map().evaluate(45.0, 0.4);
  CHECK_THAT(dx[0], WithinRel((work - model->pressure_work(1.8)) / passage_length(1.8, p), 1e-13));

  // actuator lag
  const auto lag = model->rhs(x, {1.0, 0.5}, {0.0});
  CHECK_THAT(lag[2], WithinRel(0.6 / p.tau_GV, 1e-14));
  CHECK_THAT(lag[3], WithinRel(-0.6 / p.tau_PV, 1e-14));
  CHECK_THAT(lag[4], WithinRel(0.5 / p.tau_BOV, 1e-14));

  // commands are clamped, positions are not
  CHECK(model->rhs(x, {1.7, 0.0}, {0.6})[2] == lag[2]);
  x.r_bov = 1.2;
  CHECK_THROWS_AS(model->rhs(x, {0.4, 0.0}, {0.6}), DomainError);
  x.r_bov = 0.0;
  x.pi = 0.9;
  CHECK_THROWS_AS(model->rhs(x, {0.4, 0.0}, {0.6}), DomainError);
}

TEST_CASE("units", "[plant]") {
  // Doubling every length halves dx1 (J/kg over m); V and A2 enter dx2 only through k2 (1/m).
  auto map = test::map();
  PlantParams p;
  PlantParams q = p;
  q.L12 *= 2;
  q.L23 *= 2;
  q.L34 *= 2;
  const PlantState x{45.0, 1.8, 0.4, 0.6, 0.1};
  const auto a = CompressorModel(p, map).rhs(x, {0.4, 0.1}, {0.6});
  const auto b = CompressorModel(q, map).rhs(x, {0.4, 0.1}, {0.6});
  CHECK_THAT(b[0], WithinRel(0.5 * a[0], 1e-13));
  CHECK_THAT(b[1], WithinRel(a[1], 1e-13));
  q = p;
  q.V *= 3;
  const auto c = CompressorModel(q, map).rhs(x, {0.4, 0.1}, {0.6});
  CHECK_THAT(c[1], WithinRel(a[1] / 3.0, 1e-13));
  CHECK_THAT(c[0], WithinRel(a[0], 1e-13));
}

TEST_CASE("equilibrium", "[plant]") {
  const auto model = test::model();
  const auto eq = find_equilibrium({1.7, {}}, FreeInputs::GuideVane, {0.65}, *model);
  CHECK(eq.state.pi == 1.7);
  CHECK(eq.state.r_gv == eq.input.u_gv);
  CHECK(eq.state.r_pv == 0.65);
  CHECK(eq.state.r_bov == 0.0);
  CHECK(scaled_residual(plant_rhs(eq.state, eq.input, {0.65}, *model)) < 1e-9);

  // on the SCL with the BOV free
  const auto scl = fit_scl(*model);
  EquilibriumTarget on_scl{1.9, [&](double c2, double x2) { return scl.poly.value(c2, x2); }};
  const auto e2 = find_equilibrium(on_scl, FreeInputs::GuideVaneAndBlowOff, {0.5}, *model);
  CHECK(std::abs(scl.poly.value(e2.state.c2, 1.9)) < 1e-9);
  CHECK(e2.state.r_bov > 0.0);
  CHECK(scaled_residual(plant_rhs(e2.state, e2.input, {0.5}, *model)) < 1e-9);

  // mismatched constraint / free inputs
  CHECK_THROWS_AS(find_equilibrium(on_scl, FreeInputs::GuideVane, {0.5}, *model), InvalidParameter);
  // below surge with the PV nearly shut
  CHECK_THROWS_AS(find_equilibrium({2.0, {}}, FreeInputs::GuideVane, {0.3}, *model), Error);
}

TEST_CASE("equilibrium randomized", "[plant]") {
  const auto model = test::model();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> x2d(1.7, 2.0), zd(0.65, 0.8);
  for (int i = 0; i < 20; ++i) {
    const double x2 = x2d(rng), z = zd(rng);
    const auto eq = find_equilibrium({x2, {}}, FreeInputs::GuideVane, {z}, *model);
    CHECK(scaled_residual(plant_rhs(eq.state, eq.input, {z}, *model)) < 1e-9);
  }
}
