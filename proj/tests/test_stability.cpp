#include <catch_amalgamated.hpp>

#include "ccomp/errors.hpp"
#include "ccomp/stability.hpp"

#include <cmath>

using namespace ccomp;
using Catch::Matchers::WithinAbs;

namespace {

EventSnapshot snapshot(double t, int j, int from, int to, PlantState x, PlantState a, PlantState b) {
  EventSnapshot s;
  s.event = {t, j, from, to, 0.0, t};
  s.x = x;
  s.chi_from = a;
  s.chi_to = b;
  return s;
}

// e decays like 0.01 exp(-(t - t0)) after t0, zero before
std::vector<MonitorSample> decaying(double t0, double t1, double dt) {
  std::vector<MonitorSample> out;
  for (double t = 0.0; t <= t1 + 1e-12; t += dt) {
    const double e = t < t0 ? 0.0 : 0.01 * std::exp(-(t - t0));
    out.push_back({t, {e, std::nan("")}});
  }
  return out;
}

}  // namespace

TEST_CASE("bounds", "[stability]") {
  const auto b = StabilityBounds::parse("0.02,0.2,0.15,1e-3");
  CHECK(b.lambda == 0.02);
  CHECK(b.delta == 1e-3);
  CHECK_NOTHROW(StabilityBounds{}.validate());
  CHECK_THROWS_AS(StabilityBounds::parse("0.3,0.2,0.1,1e-3"), InvalidParameter);
  CHECK_THROWS_AS(StabilityBounds::parse("0.02,0.2,0.19,1e-3"), InvalidParameter);
  CHECK_THROWS_AS(StabilityBounds::parse("0.02,0.2"), ConfigError);
  CHECK_THROWS_AS(StabilityBounds::parse("a,b,c,d"), ConfigError);
}

TEST_CASE("error coordinates are scaled", "[stability]") {
  const PlantState x{50.0, 1.9, 0.5, 0.6, 0.1};
  const PlantState chi{40.0, 1.8, 0.4, 0.6, 0.0};
  const auto e = error_coordinates(x, chi, 100.0);
  CHECK_THAT(e[0], WithinAbs(0.1, 1e-15));
  CHECK_THAT(e[1], WithinAbs(0.1, 1e-15));
  CHECK_THAT(e[4], WithinAbs(0.1, 1e-15));
  CHECK(state_reset(x, chi, 100.0) == e);
}

TEST_CASE("monitor verdicts", "[stability]") {
  const StabilityBounds b;
  const PlantState chi1{40.0, 1.80, 0.40, 0.6, 0.0};
  const PlantState chi2{40.5, 1.81, 0.41, 0.6, 0.0};
  const PlantState x{40.1, 1.801, 0.401, 0.6, 0.0};
  const auto trace = decaying(10.0, 30.0, 0.01);

  const auto good = monitor(trace, {snapshot(10.0, 1, 1, 4, x, chi1, chi2)}, b, 100.0);
  REQUIRE(good.events.size() == 1);
  const auto& c = good.events[0];
  CHECK(c.inner_ok);
  CHECK(c.outer_ok);
  CHECK(c.reset_ok);
  CHECK(c.regulation_ok);
  // 0.01 exp(-s) < 1e-3 after ln(10) s
  CHECK_THAT(c.time_to_delta, WithinAbs(std::log(10.0), 0.011));
  CHECK(good.ok());

  // state far from the outgoing steady state
  const PlantState far{45.0, 1.85, 0.40, 0.6, 0.0};
  const auto bad = monitor(trace, {snapshot(10.0, 1, 1, 4, far, chi1, chi2)}, b, 100.0);
  CHECK(!bad.events[0].inner_ok);
  CHECK(!bad.chain_ok);
  CHECK(bad.regulation_ok);

  // big reset
  const PlantState chi3{60.0, 2.0, 0.6, 0.6, 0.0};
  const auto jump = monitor(trace, {snapshot(10.0, 1, 1, 4, x, chi1, chi3)}, b, 100.0);
  CHECK(!jump.events[0].reset_ok);
  CHECK(!jump.events[0].outer_ok);

  // next event before the error settles
  const auto early = monitor(trace, {snapshot(10.0, 1, 1, 4, x, chi1, chi2), snapshot(11.0, 1, 4, 1, x, chi2, chi1)},
                             b, 100.0);
  CHECK(!early.events[0].regulation_ok);
  CHECK(std::isnan(early.events[0].time_to_delta));
  CHECK(!early.regulation_ok);
}

TEST_CASE("perfect regulation is checked per channel", "[stability]") {
  std::vector<MonitorSample> trace;
  for (int i = 0; i <= 1000; ++i) {
    const double t = i * 0.01;
    // channel 2 unregulated (NaN) throughout; channel 1 always small
    trace.push_back({t, {1e-5, std::nan("")}});
  }
  const auto r = monitor(trace, {}, StabilityBounds{}, 100.0);
  CHECK(r.initial_regulation_ok[0]);
  CHECK(r.initial_regulation_ok[1]);
  CHECK(r.ok());

  trace.back().e_norm[0] = 0.5;
  const auto r2 = monitor(trace, {}, StabilityBounds{}, 100.0);
  CHECK(!r2.initial_regulation_ok[0]);
  CHECK(!r2.ok());
}

TEST_CASE("report round trip", "[stability]") {
  const PlantState chi1{40.0, 1.80, 0.40, 0.6, 0.0};
  const PlantState chi2{40.5, 1.81, 0.41, 0.6, 0.0};
  const PlantState x{40.1, 1.801, 0.401, 0.6, 0.0};
  const auto trace = decaying(10.0, 30.0, 0.01);
  const auto rep = monitor(trace, {snapshot(10.0, 1, 2, 1, x, chi1, chi2), snapshot(20.0, 2, 1, 5, x, chi1, chi2)},
                           StabilityBounds{}, 100.0);
  const auto csv = report_csv(rep);
  const auto back = parse_report_csv(csv);
  CHECK(report_csv(back) == csv);
  CHECK(back.events.size() == 2);
  CHECK(back.events[1].k_to == 5);
  CHECK(back.ok() == rep.ok());
  CHECK(report_text(rep).find("stability monitor") == 0);
  CHECK_THROWS_AS(parse_report_csv("nonsense"), ConfigError);
}
