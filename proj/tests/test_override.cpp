#include <catch_amalgamated.hpp>

#include "ccomp/errors.hpp"
#include "ccomp/override.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace ccomp;

namespace {

double gv_formula(const ChannelValues& p) {
  return std::max(std::min({std::max(p[0], p[1]), p[2], p[3]}), std::min({std::max(p[4], p[5]), p[6], p[7]}));
}

double bov_formula(const ChannelValues& p) {
  return std::max({p[0], p[1], p[2], p[3], std::min({std::max(p[4], p[5]), p[6], p[7]})});
}

const double inf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("hand-evaluated switching law", "[override]") {
  const ChannelValues p{1, 2, 3, 4, 5, 6, 7, 8};
  const auto gv = select(default_tree_gv(), p);
  CHECK(gv.sigma == 6);
  CHECK(gv.value == 6.0);
  const auto bov = select(default_tree_bov(), p);
  CHECK(bov.sigma == 6);

  // SISO branch wins when the MIMO outputs are low
  const ChannelValues q{0.3, 0.4, 0.6, 0.35, 0.1, 0.1, 0.2, 0.2};
  CHECK(select(default_tree_gv(), q).sigma == 4);
}

TEST_CASE("tree parsing", "[override]") {
  const auto t = SelectorTree::parse(" MAX( min(max(C1, 2), 3,4) , min(max(5,6),7,8))");
  CHECK(t.to_string() == default_tree_gv().to_string());
  CHECK(t.leaves() == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(SelectorTree::parse("3").leaves() == std::vector<int>{3});
  CHECK_THROWS_AS(SelectorTree::parse("max(1,1)"), InvalidParameter);
  CHECK_THROWS_AS(SelectorTree::parse("max(1,9)"), InvalidParameter);
  CHECK_THROWS_AS(SelectorTree::parse("max(1,2"), InvalidParameter);
  CHECK_THROWS_AS(SelectorTree::parse("avg(1,2)"), InvalidParameter);
  CHECK_THROWS_AS(SelectorTree::parse("max()"), InvalidParameter);

  ChannelValues p{};
  p[1] = std::nan("");
  CHECK_THROWS_AS(select(default_tree_gv(), p), InvalidParameter);
}

TEST_CASE("randomized selector properties", "[override]") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> val(-1.0, 2.0);
  std::uniform_int_distribution<int> coarse(0, 2), pick(0, 7);
  const auto gv = default_tree_gv();
  const auto bov = default_tree_bov();
  int checks = 0;
  for (int i = 0; i < 10000; ++i) {
    ChannelValues p;
    // every fourth draw from a coarse grid so ties are common
    for (auto& v : p) v = i % 4 == 0 ? coarse(rng) : val(rng);
    const auto a = select(gv, p);
    const auto b = select(bov, p);
    CHECK(a.value == gv_formula(p));
    CHECK(b.value == bov_formula(p));
    CHECK(p[a.sigma - 1] == a.value);
    CHECK(p[b.sigma - 1] == b.value);

    // monotone in every argument
    ChannelValues up = p;
    up[pick(rng)] += 0.25;
    CHECK(select(gv, up).value >= a.value);
    CHECK(select(bov, up).value >= b.value);

    // deterministic
    CHECK(select(gv, p).sigma == a.sigma);
    ++checks;
  }
  CHECK(checks == 10000);
}

TEST_CASE("ties go to the lowest index", "[override]") {
  ChannelValues p;
  p.fill(0.5);
  CHECK(select(default_tree_gv(), p).sigma == 1);
  CHECK(select(default_tree_bov(), p).sigma == 1);
  // tie inside min(max(5,6),7,8)
  const ChannelValues q{0, 0, 0, 0, 0.4, 0.2, 0.4, 0.9};
  CHECK(select(default_tree_gv(), q).sigma == 5);
  const ChannelValues r{0, 0.1, 0, 0, 0.1, 0.1, 0.4, 0.9};
  CHECK(select(default_tree_bov(), r).sigma == 2);
}

TEST_CASE("switching events and dwell", "[override]") {
  const std::array<SelectorTree, 2> trees{default_tree_gv(), default_tree_bov()};
  const auto rules = ramp_latches(true);
  SwitchingState st;
  std::array<ChannelValues, 2> p{};
  p[0] = {0.40, 0.45, 0.60, 0.70, 0.1, 0.1, 0.2, 0.2};
  p[1] = {0, 0, 0, 0, -0.2, -0.2, -0.1, -0.1};

  auto s0 = step_switching(st, trees, rules, p, 0.0);
  CHECK(s0.events.empty());
  CHECK(s0.sigma == std::array<int, 2>{2, 1});

  p[0][0] = 0.50;  // sine overtakes the lower bound
  auto s1 = step_switching(st, trees, rules, p, 2.0);
  REQUIRE(s1.events.size() == 1);
  CHECK(s1.events[0].j == 1);
  CHECK(s1.events[0].k_from == 2);
  CHECK(s1.events[0].k_to == 1);
  CHECK(s1.events[0].dwell == 2.0);
  CHECK(std::abs(s1.events[0].delta_p - 0.05) < 1e-15);

  p[0][0] = 0.65;  // upper bound engages: latch C1
  auto s2 = step_switching(st, trees, rules, p, 5.0);
  REQUIRE(s2.events.size() == 1);
  CHECK(s2.events[0].k_to == 3);
  CHECK(s2.events[0].dwell == 3.0);
  CHECK(st.latched[0]);
  CHECK(!st.latched[1]);

  // sine falls back: C1 stays off, C3 holds
  p[0][0] = 0.30;
  auto s3 = step_switching(st, trees, rules, p, 6.0);
  CHECK(s3.events.empty());
  CHECK(s3.sigma[0] == 3);

  // the SISO latch leaves the BOV channel alone
  const auto q = apply_latches(st, rules, p);
  CHECK(q[0][0] == inf);
  CHECK(q[1][0] == 0.0);
  CHECK(s3.u[1] == 0.0);

  // evaluate_switching never mutates
  SwitchingState copy = st;
  p[0][4] = p[0][5] = 6.0;
  p[0][6] = 5.0;
  p[0][7] = 5.5;
  const auto probe = evaluate_switching(st, trees, rules, p);
  CHECK(probe.sigma[0] == 7);
  CHECK(st.sigma == copy.sigma);
  CHECK(st.latched == copy.latched);
}

TEST_CASE("mimo latch", "[override]") {
  const std::array<SelectorTree, 2> trees{default_tree_gv(), default_tree_bov()};
  const auto rules = ramp_latches(true);
  SwitchingState st;
  std::array<ChannelValues, 2> p{};
  p[0] = {0.4, 0.3, 0.6, 0.7, 0.5, 0.45, 0.6, 0.8};
  p[1] = {0, 0, 0, 0, 0.05, 0.04, 0.07, 0.2};
  step_switching(st, trees, rules, p, 0.0);
  CHECK(st.sigma == std::array<int, 2>{5, 5});
  p[0][4] = 0.65;
  p[1][4] = 0.09;
  step_switching(st, trees, rules, p, 1.0);
  CHECK(st.sigma == std::array<int, 2>{7, 7});
  CHECK(st.latched[1]);
  p[0][4] = 0.55;
  p[1][4] = 0.06;
  const auto s = step_switching(st, trees, rules, p, 2.0);
  CHECK(s.events.empty());
  CHECK(s.sigma == std::array<int, 2>{7, 7});

  const auto down = ramp_latches(false);
  CHECK(down[0].trigger == 2);
  CHECK(down[0].replacement == -inf);
  CHECK(down[1].disabled == 5);
}

TEST_CASE("event location", "[override]") {
  const double t = locate_event(1.0, 2.0, [](double s) { return s * s - 2.0; }, 1e-10);
  CHECK(std::abs(t - std::sqrt(2.0)) < 1e-10);
  CHECK(locate_event(0.0, 1.0, [](double s) { return s; }) == 0.0);
  CHECK_THROWS_AS(locate_event(0.0, 1.0, [](double s) { return s + 1.0; }), DomainError);
}
