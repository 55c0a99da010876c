#include <doctest.h>

#include <cmath>
#include <string>

#include "rclab/error.hpp"
#include "rclab/reduction.hpp"
#include "support.hpp"

using namespace rclab;
using rclab::test::tp;
using rclab::test::vec;

namespace {

ReducedSystem reduce_file(const char* name, std::optional<Vec> mu = std::nullopt) {
  const auto m = test::load(name);
  return point_reduce(m.rcl, *m.symmetry, mu ? *mu : *m.mu);
}

std::string irreducible_message(const RCLSystem& rcl, const SymmetrySpec& g, const Vec& mu) {
  try {
    (void)point_reduce(rcl, g, mu);
  } catch (const IrreducibleError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("central force at mu = 1: reduced Lagrangian, energy and form") {
  // On the level set theta_dot = mu / r^2, so at (r, r_dot) = (1, 0):
  // l_mu = theta_dot^2/2 + k/r = 1.5 and E_mu = theta_dot^2/2 - k/r = -0.5.
  const auto red = reduce_file("central_force.json");
  REQUIRE(red.dim() == 1);
  const auto x = tp({1.0}, {0.0});
  CHECK(red.lagrangian(x) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(red.energy(x) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(red.cyclic_velocities(x)[0] == doctest::Approx(1.0).epsilon(1e-15));
  Mat expected(2, 2);
  expected << 0, 1, -1, 0;
  CHECK(test::max_abs(red.two_form(x).matrix - expected) <= 1e-15);
}

TEST_CASE("central force reduced field: r_ddot = mu^2/r^3 - k/r^2") {
  const auto red = reduce_file("central_force.json");
  const auto fixed = red.field_vector(tp({1.0}, {0.0}));
  CHECK(std::fabs(fixed.dq[0]) <= 1e-15);
  CHECK(std::fabs(fixed.dqdot[0]) <= 1e-12);
  const auto far = red.field_vector(tp({2.0}, {0.0}));
  CHECK(far.dqdot[0] == doctest::Approx(-0.125).epsilon(1e-12));

  Sampler s(1);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto x = s.tangent(red.space());
    const double r = x.q[0];
    const auto xi = red.field_vector(x);
    worst = std::max(worst, std::fabs(xi.dq[0] - x.qdot[0]));
    worst = std::max(worst, std::fabs(xi.dqdot[0] - (1.0 / (r * r * r) - 1.0 / (r * r))));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("pendulum on a cart reduced by cart translations") {
  // Eliminating s_ddot from the two Euler-Lagrange equations (M = m = l = g = 1):
  // phi_ddot = (sin(phi) - sin(phi) cos(phi) phi_dot^2 / 2) / (1 - cos(phi)^2 / 2).
  const auto red = reduce_file("pendulum_cart.json");
  REQUIRE(red.dim() == 1);
  CHECK(red.space().names() == std::vector<std::string>{"phi"});
  Sampler s(2);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto x = s.tangent(red.space());
    const double phi = x.q[0], w = x.qdot[0], c = std::cos(phi), sn = std::sin(phi);
    const double expected = (sn - sn * c * w * w / 2) / (1 - c * c / 2);
    worst = std::max(worst, std::fabs(red.field_vector(x).dqdot[0] - expected));
  }
  CHECK(worst <= 1e-9);
  // The cart is the only actuated direction and it is cyclic, so it is dropped.
  REQUIRE(red.notes().size() == 1);
  CHECK(red.notes()[0].find("dropped") != std::string::npos);
}

TEST_CASE("the level-set-preserving drag acts as phi damping downstairs") {
  // vlift(F) xi_L has phi-component -c phi_dot, so the reduced field gains -c phi_dot.
  const auto plain = reduce_file("pendulum_cart.json");
  const auto drag = reduce_file("pendulum_cart_drag.json");
  Sampler s(4);
  for (int i = 0; i < 50; ++i) {
    const auto x = s.tangent(plain.space());
    CHECK(drag.field_vector(x).dqdot[0] - plain.field_vector(x).dqdot[0] ==
          doctest::Approx(-0.3 * x.qdot[0]).epsilon(1e-10));
  }
}

TEST_CASE("certificates are recorded on successful reductions") {
  const auto red = reduce_file("central_force_drag.json");
  std::vector<std::string> ids;
  for (const auto& c : red.certificates()) {
    ids.push_back(c.id);
    CHECK(c.pass);
  }
  CHECK(ids == std::vector<std::string>{"reduction.invariance", "reduction.regular_value", "reduction.force_level_set",
                                        "reduction.law_level_set", "reduction.control_level_set"});
}

TEST_CASE("irreducible systems name the violated condition") {
  const auto spin = test::load("central_force_spin_drag.json");
  CHECK(irreducible_message(spin.rcl, *spin.symmetry, vec({1.0})).find("F^L does not preserve J_L^{-1}(mu)") == 0);

  const auto ho = test::load("harmonic_oscillator_cyclic.json");
  CHECK(irreducible_message(ho.rcl, *ho.symmetry, vec({0.0})).find("not invariant") != std::string::npos);

  // A feedback on the cyclic cart direction changes the cart momentum.
  const auto cart = test::load("pendulum_cart.json");
  const auto& L = cart.lagrangian();
  const RCLSystem pushed(L, std::nullopt, cart.rcl.control(), FiberMap(L, {"-s_dot", "0"}));
  CHECK(irreducible_message(pushed, *cart.symmetry, vec({0.0})).find("u^L does not preserve") == 0);
}

TEST_CASE("reduction identities on reducible systems") {
  for (const char* f : {"free_particle.json", "central_force.json", "central_force_drag.json", "pendulum_cart.json",
                        "pendulum_cart_drag.json"}) {
    CAPTURE(f);
    const auto red = reduce_file(f);
    CHECK(check_commutation(red, 200, 0).pass);
    CHECK(check_flow_commutation(red, anchor_points(red.space()).front()).pass);
    CHECK(check_section_independence(red, 100, 0).pass);
    CHECK(check_reduced_energy(red, 200, 0).pass);
    for (const auto& c : check_reduced_legendre(red, 100, 0)) CHECK(c.pass);
    CHECK(check_reduced_round_trip(red, 200, 0).pass);
    CHECK(check_reduced_second_order(red, 200, 0).max_residual == 0.0);
    CHECK(check_reduced_dual_derivation(red, 200, 0).pass);
    CHECK(check_reduced_fl_related(red, 100, 0).pass);
  }
}

TEST_CASE("section choice does not change reduced objects") {
  const auto red = reduce_file("pendulum_cart.json");
  const auto alt = red.with_section({vec({-1.3}), Mat::Constant(1, 1, 2.0)});
  const auto x = tp({0.4}, {-0.7});
  CHECK(test::max_abs(red.two_form(x).matrix - alt.two_form(x).matrix) <= 1e-12);
  CHECK(red.field_vector(x).dqdot[0] == doctest::Approx(alt.field_vector(x).dqdot[0]).epsilon(1e-12));
  CHECK(alt.section(x).q[0] == doctest::Approx(-1.3 + 2.0 * 0.4));
}

TEST_CASE("orbit reduction: zero correction for abelian groups, refused otherwise") {
  const auto m = test::load("central_force.json");
  const auto orbit = orbit_reduce(m.rcl, *m.symmetry, *m.mu);
  CHECK(orbit.correction.max_residual == 0.0);
  CHECK(orbit.correction.pass);
  CHECK_THROWS_AS(orbit_reduce(m.rcl, SymmetrySpec::so3(), vec({1, 0, 0})), UnsupportedError);
}

TEST_CASE("control member on the level set") {
  const auto pair = test::load_pair("translation_pair.json");
  const auto& a = pair.a;
  const auto z = tp({0.1, 0.2}, {1.0, 0.3});  // J_L = x_dot = 1 = mu
  const auto w = control_level_member(a.rcl, *a.symmetry, *a.mu, z);
  REQUIRE(w.has_value());
  CHECK(a.rcl.control()->contains(z, *w, 1e-10));
}

TEST_CASE("reducible pair equivalence and theorem harness") {
  const auto good = test::load_pair("translation_pair.json");
  const auto ra = point_reduce(good.a.rcl, *good.a.symmetry, *good.mu_a);
  const auto rb = point_reduce(good.b.rcl, *good.b.symmetry, *good.mu_b);
  CHECK(check_rpcl_equivalence(ra, rb, good.map, 200, 0).pass());
  const auto orbit = check_rpcl_equivalence(ra, rb, good.map, 200, 0, 1e-8, true);
  REQUIRE(orbit.orbit_form.has_value());
  CHECK(orbit.pass());
  // The reduced map is the restriction of phi to y: (y, y_dot) -> (3y, 3y_dot).
  const auto xb = reduced_map(ra, rb, good.map, tp({0.2}, {-0.1}));
  CHECK(xb.q[0] == doctest::Approx(0.6));
  CHECK(xb.qdot[0] == doctest::Approx(-0.3));

  const auto bad = test::load_pair("translation_bad.json");
  const auto rbad = point_reduce(bad.b.rcl, *bad.b.symmetry, *bad.mu_b);
  const auto brep = check_rpcl_equivalence(ra, rbad, bad.map, 200, 0);
  CHECK_FALSE(brep.condition2.pass);
  CHECK(brep.condition2.max_residual > 1e-3);

  for (auto kind : {TheoremKind::PointControlled, TheoremKind::PointLagrangian, TheoremKind::OrbitControlled,
                    TheoremKind::OrbitLagrangian}) {
    const auto pos = theorem_harness(kind, ra, rb, good.map, 100, 0);
    CHECK(pos.agreement.pass);
    CHECK(pos.upstairs_pass());
    const auto neg = theorem_harness(kind, ra, rbad, bad.map, 100, 0);
    CHECK(neg.agreement.pass);
    CHECK_FALSE(neg.upstairs_pass());
    CHECK_FALSE(neg.downstairs_pass());
  }
}
