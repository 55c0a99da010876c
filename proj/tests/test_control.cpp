#include <doctest.h>

#include <cmath>
#include <string>

#include "rclab/control.hpp"
#include "rclab/error.hpp"
#include "support.hpp"

using namespace rclab;
using rclab::test::tp;
using rclab::test::vec;

namespace {

LagrangianSystem plane() {
  const ConfigSpace s({"x", "y"}, {false, false}, {{-1, 1}, {-1, 1}}, {{-1, 1}, {-1, 1}});
  return LagrangianSystem(s, "(x_dot^2 + y_dot^2)/2 - y^2/2", {{"k", 2.0}});
}

}  // namespace

TEST_CASE("vertical lift has no horizontal part") {
  const auto w = vertical_lift(tp({1, 2}, {3, 4}), vec({5, 6}));
  CHECK(w.dq.isZero(0));
  CHECK(w.dqdot == vec({5, 6}));
}

TEST_CASE("control subset membership") {
  const auto sys = plane();
  const ControlSubset c(sys, {1}, std::vector<std::string>{"x_dot", "0"}, {{-1, 1}});
  const auto v = tp({0.2, 0.1}, {0.7, -0.3});
  CHECK(c.offset(v) == vec({0.7, 0.0}));
  CHECK(c.membership_defect(v, vec({0.7, 0.5})) == 0.0);
  CHECK(c.membership_defect(v, vec({1.7, 0.0})) == doctest::Approx(1.0));  // off-support
  CHECK(c.membership_defect(v, vec({0.7, 2.0})) == doctest::Approx(1.0));  // outside the bound
  CHECK(std::isnan(c.membership_defect(v, vec({NAN, 0.0}))));
  CHECK_FALSE(c.contains(v, vec({NAN, 0.0}), 1e-9));
  Sampler s(3);
  for (int i = 0; i < 20; ++i) CHECK(c.contains(v, c.sample_member(v, s), 1e-15));
}

TEST_CASE("control subset validation") {
  const auto sys = plane();
  CHECK_THROWS_AS(ControlSubset(sys, {}, std::nullopt), ValidationError);
  CHECK_THROWS_AS(ControlSubset(sys, {2}, std::nullopt), ValidationError);
  CHECK_THROWS_AS(ControlSubset(sys, {1, 1}, std::nullopt), ValidationError);
  CHECK_THROWS_AS(ControlSubset(sys, {1}, std::nullopt, {{1, -1}}), ValidationError);
}

TEST_CASE("a law outside the control subset is rejected") {
  const auto sys = plane();
  const ControlSubset c(sys, {1}, std::nullopt);
  CHECK_THROWS_AS(RCLSystem(sys, std::nullopt, c, FiberMap(sys, {"x", "-k*y"})), ValidationError);
  CHECK_THROWS_AS(RCLSystem(sys, std::nullopt, std::nullopt, FiberMap(sys, {"0", "-k*y"})), ValidationError);
  const RCLSystem ok(sys, std::nullopt, c, FiberMap(sys, {"0", "-k*y"}));
  CHECK(ok.law_certificate()->pass);
}

TEST_CASE("controlled oscillator field") {
  // xi_L(1, 0) = (0, -1); vlift(-c q_dot) xi_L = (0, c); vlift(-k q) xi_L = (0, -k * 0).
  const auto pair = test::load_pair("ho_scaling_pair.json");
  const auto& rcl = pair.a.rcl;
  const auto xi = euler_lagrange_vector(rcl.lagrangian(), tp({1.0}, {0.0}));
  CHECK(vlift_of_fiber_map(*rcl.force(), xi).dqdot[0] == doctest::Approx(0.1));
  CHECK(vlift_of_fiber_map(*rcl.law(), xi).dqdot[0] == 0.0);
  const auto c = controlled_vector(rcl, tp({1.0}, {0.0}));
  CHECK(c.dq[0] == 0.0);
  CHECK(c.dqdot[0] == doctest::Approx(-0.9));
  // With velocity 0.5: xi_L = (0.5, -1), force lift c, law lift -k * 0.5.
  const auto d = controlled_vector(rcl, tp({1.0}, {0.5}));
  CHECK(d.dq[0] == 0.5);
  CHECK(d.dqdot[0] == doctest::Approx(-1.0 + 0.1 - 0.5));
}

TEST_CASE("controlled fields are second order") {
  for (const char* f : {"central_force_drag.json", "pendulum_cart_drag.json", "pendulum_cart_controlled.json"}) {
    CAPTURE(f);
    const auto m = test::load(f);
    CHECK(check_second_order(controlled_field(m.rcl), m.rcl.space(), 200, 0).max_residual == 0.0);
  }
}

TEST_CASE("pushforward reproduces the shipped pair targets") {
  for (const char* f : {"ho_scaling_pair.json", "translation_pair.json"}) {
    CAPTURE(f);
    const auto pair = test::load_pair(f);
    const RCLSystem pushed = pushforward(pair.a.rcl, pair.map);
    const auto& b = pair.b.rcl;
    Sampler s(11);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const auto v = s.tangent(b.space());
      worst = std::max(worst, std::fabs(pushed.lagrangian().value(v) - b.lagrangian().value(v)));
      worst = std::max(worst, test::max_abs(pushed.force()->apply(v) - b.force()->apply(v)));
      worst = std::max(worst, test::max_abs(pushed.law()->apply(v) - b.law()->apply(v)));
      worst = std::max(worst, test::max_abs(pushed.control()->offset(v) - b.control()->offset(v)));
    }
    CHECK(worst <= 1e-14);
    CHECK(pushed.control()->actuated() == b.control()->actuated());
  }
}

TEST_CASE("pushforward refuses non-affine maps") {
  const auto pair = test::load_pair("ho_scaling_pair.json");
  const ConfigSpace target({"Q"}, {false}, {{0.3, 3}}, {{-3, 3}});
  const PointMap expo(pair.a.rcl.space(), target, {"exp(q)"}, std::vector<std::string>{"log(Q)"});
  CHECK_THROWS_AS(pushforward(pair.a.rcl, expo), UnsupportedError);
}

TEST_CASE("matching conditions on shipped pairs") {
  const auto good = test::load_pair("ho_scaling_pair.json");
  const auto rep = check_rcl_equivalence(good.a.rcl, good.b.rcl, good.map, 200, 0);
  CHECK(rep.pass());
  const auto match = check_force_law_matching(good.a.rcl, good.b.rcl, good.map, 200, 0);
  CHECK(match.premise.pass);
  CHECK(match.condition.pass);

  const auto bad = test::load_pair("ho_scaling_bad.json");
  const auto brep = check_rcl_equivalence(bad.a.rcl, bad.b.rcl, bad.map, 200, 0);
  CHECK(brep.condition1.pass);
  CHECK_FALSE(brep.condition2.pass);
  CHECK(brep.condition2.max_residual > 1e-3);
  CHECK(brep.condition2.witness.has_value());
}

TEST_CASE("without a law on b the field condition is solved for a control") {
  const auto pair = test::load_pair("translation_pair.json");
  const RCLSystem b_free = pair.b.rcl.with_law(std::nullopt);
  const auto rep = check_rcl_equivalence(pair.a.rcl, b_free, pair.map, 100, 0);
  CHECK(rep.condition2.pass);
  const auto sol = control_match_solve(pair.a.rcl, b_free, pair.map, tp({0.2, 0.3}, {0.5, -0.4}));
  CHECK(sol.realizable);
  CHECK(sol.horizontal_part <= 1e-12);
}
