#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rclab/dynamics.hpp"
#include "rclab/error.hpp"
#include "rclab/symmetry.hpp"
#include "support.hpp"

using namespace rclab;
using rclab::test::tp;
using rclab::test::vec;

TEST_CASE("harmonic oscillator field: (q, qdot) -> (qdot, -q)") {
  const auto m = test::load("harmonic_oscillator.json");
  const auto xi = euler_lagrange_vector(m.lagrangian(), tp({1.0}, {0.25}));
  CHECK(xi.dq[0] == 0.25);
  CHECK(xi.dqdot[0] == -1.0);
  CHECK(euler_lagrange_ode(m.lagrangian(), tp({1.0}, {0.25}))[0] == -1.0);
}

TEST_CASE("central force accelerations") {
  // r_ddot = r theta_dot^2 - k/r^2, theta_ddot = -2 r_dot theta_dot / r.
  const auto m = test::load("central_force.json");
  const double r = 1.6, rd = 0.3, thd = 0.9;
  const auto xi = euler_lagrange_vector(m.lagrangian(), tp({r, 2.0}, {rd, thd}));
  CHECK(xi.dqdot[0] == doctest::Approx(r * thd * thd - 1.0 / (r * r)).epsilon(1e-14));
  CHECK(xi.dqdot[1] == doctest::Approx(-2 * rd * thd / r).epsilon(1e-14));
  // Circular orbit at r = 1 with theta_dot = 1 is a relative equilibrium.
  const auto eq = euler_lagrange_vector(m.lagrangian(), tp({1.0, 0.0}, {0.0, 1.0}));
  CHECK(std::fabs(eq.dqdot[0]) <= 1e-15);
}

TEST_CASE("Hamiltonian of the oscillator") {
  const auto m = test::load("harmonic_oscillator.json");
  const Hamiltonian H = hamiltonian_from_lagrangian(m.lagrangian());
  const CotangentPoint a{vec({1.0}), vec({0.5})};
  CHECK(H.value(a) == doctest::Approx(0.625).epsilon(1e-15));
  const Vec X = H.field(a);
  CHECK(X[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(X[1] == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("singular symplectic solve is reported") {
  CHECK_THROWS_AS(solve_symplectic(Mat::Zero(2, 2), vec({1, 0})), SingularError);
}

TEST_CASE("oscillator returns after one period") {
  const auto m = test::load("harmonic_oscillator.json");
  const auto v0 = tp({1.0}, {0.0});
  const auto traj = integrate(euler_lagrange_field(m.lagrangian()), v0, 2 * std::numbers::pi, 1e-3);
  CHECK_FALSE(traj.blew_up);
  CHECK(traj.times.back() == 2 * std::numbers::pi);
  CHECK((traj.states.back().stacked() - v0.stacked()).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("free particle moves on straight lines") {
  const auto m = test::load("free_particle.json");
  const auto traj = integrate(euler_lagrange_field(m.lagrangian()), tp({0, 0}, {1, -0.5}), 1.0, 0.125);
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    CHECK(traj.states[i].q[0] == doctest::Approx(traj.times[i]).epsilon(1e-15));
    CHECK(traj.states[i].q[1] == doctest::Approx(-0.5 * traj.times[i]).epsilon(1e-15));
  }
}

TEST_CASE("circular orbit keeps a constant radius") {
  const auto m = test::load("central_force.json");
  const auto traj = integrate(euler_lagrange_field(m.lagrangian()), tp({1.0, 0.0}, {0.0, 1.0}), 10.0, 1e-3, {},
                              &m.lagrangian().space());
  double worst = 0.0;
  for (const auto& s : traj.states) {
    worst = std::max(worst, std::fabs(s.q[0] - 1.0));
    CHECK(s.q[1] >= 0.0);
    CHECK(s.q[1] < 2 * std::numbers::pi);
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("integration stops on blow-up with a partial trajectory") {
  const ConfigSpace s({"q"}, {false}, {{-1, 1}}, {{-1, 1}});
  const LagrangianSystem sys(s, "q_dot^2/2 + q^4", {});
  const auto traj = integrate(euler_lagrange_field(sys), tp({1.0}, {0.0}), 10.0, 1e-3);
  CHECK(traj.blew_up);
  CHECK(traj.times.back() < 10.0);
  CHECK(traj.states.size() > 1);
}

TEST_CASE("dynamics identities hold on the shipped systems") {
  for (const char* f : {"free_particle.json", "harmonic_oscillator.json", "central_force.json", "pendulum_cart.json"}) {
    CAPTURE(f);
    const auto m = test::load(f);
    const auto& sys = m.lagrangian();
    CHECK(check_dual_derivation(sys, 200, 0).pass);
    CHECK(check_second_order(euler_lagrange_field(sys), sys.space(), 200, 0).max_residual == 0.0);
    CHECK(check_fl_related(sys, 100, 0).pass);
    CHECK(check_energy_conservation(sys, 200, 0).pass);
  }
}

TEST_CASE("energy drift over ten time units") {
  const auto m = test::load("pendulum_cart.json");
  const auto drift = check_drift(m.lagrangian(), &*m.symmetry, m.initial_state(), 10.0, 1e-3, 1e-6);
  CHECK(drift.energy.pass);
  CHECK(drift.momentum.pass);
  CHECK(drift.energy.samples == 10001);
}
