#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "rclab/error.hpp"
#include "rclab/symmetry.hpp"
#include "support.hpp"

using namespace rclab;
using rclab::test::tp;
using rclab::test::vec;

namespace {

// Sum over k of nu_k C^k_ij xi_i eta_j in the storage order.
double contraction(const SymmetrySpec& g, const Vec& nu, const Vec& xi, const Vec& eta) {
  const std::size_t d = g.dim();
  double total = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double b = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        b += g.structure_constant(k, i, j) * xi[static_cast<Eigen::Index>(i)] * eta[static_cast<Eigen::Index>(j)];
    total += nu[static_cast<Eigen::Index>(k)] * b;
  }
  return total;
}

}  // namespace

TEST_CASE("so(3) coadjoint form") {
  const auto g = SymmetrySpec::so3();
  CHECK(coadjoint_plus_form(g, vec({0, 0, 1}), vec({1, 0, 0}), vec({0, 1, 0})) == 1.0);
  CHECK(coadjoint_plus_form(g, vec({0, 0, 1}), vec({0, 1, 0}), vec({1, 0, 0})) == -1.0);
  CHECK(g.antisymmetry_defect() == 0.0);
  CHECK(g.jacobi_defect() == 0.0);
  CHECK_FALSE(g.is_abelian());
  Sampler s(5);
  for (int i = 0; i < 100; ++i) {
    const Vec nu = s.uniform_vector(3, -2, 2), xi = s.uniform_vector(3, -2, 2), eta = s.uniform_vector(3, -2, 2);
    const double f = coadjoint_plus_form(g, nu, xi, eta);
    CHECK(f == contraction(g, nu, xi, eta));
    CHECK(f == doctest::Approx(nu.dot(Eigen::Vector3d(xi).cross(Eigen::Vector3d(eta)))).epsilon(1e-14));
  }
}

TEST_CASE("abelian algebras have a vanishing form") {
  const auto g = SymmetrySpec::algebra(2, std::vector<double>(8, 0.0));
  CHECK(g.is_abelian());
  Sampler s(9);
  for (int i = 0; i < 50; ++i) {
    CHECK(coadjoint_plus_form(g, s.uniform_vector(2, -5, 5), s.uniform_vector(2, -5, 5), s.uniform_vector(2, -5, 5)) == 0.0);
  }
}

TEST_CASE("structure constants are validated") {
  std::vector<double> not_antisymmetric(8, 0.0);
  not_antisymmetric[1] = 1.0;  // C^0_01 = 1 without C^0_10 = -1
  CHECK_THROWS_AS(SymmetrySpec::algebra(2, not_antisymmetric), ValidationError);
  // [e0, e1] = e0, [e1, e2] = e0, [e0, e2] = e1 is antisymmetric but violates Jacobi.
  std::vector<double> c(27, 0.0);
  auto set = [&](int k, int i, int j, double v) {
    c[(k * 3 + i) * 3 + j] = v;
    c[(k * 3 + j) * 3 + i] = -v;
  };
  set(0, 0, 1, 1);
  set(0, 1, 2, 1);
  set(1, 0, 2, 1);
  CHECK_THROWS_AS(SymmetrySpec::algebra(3, c), ValidationError);
  CHECK_THROWS_AS(SymmetrySpec::algebra(2, std::vector<double>(7, 0.0)), ValidationError);
}

TEST_CASE("translation action wraps periodic coordinates") {
  const auto m = test::load("central_force.json");
  const auto& g = *m.symmetry;
  CHECK(g.cyclic() == std::vector<std::size_t>{1});
  CHECK(g.shape() == std::vector<std::size_t>{0});
  const auto v = tangent_lifted_action(g, vec({1.0}), tp({1.2, 6.0}, {0.1, 0.9}));
  CHECK(v.q[0] == 1.2);
  CHECK(v.q[1] == doctest::Approx(7.0 - 2 * std::numbers::pi));
  CHECK(v.qdot == vec({0.1, 0.9}));
}

TEST_CASE("central force angular momentum") {
  // J_L = r^2 theta_dot
  const auto m = test::load("central_force.json");
  const auto v = tp({1.5, 0.3}, {0.2, 2.0});
  CHECK(momentum_map_lagrangian(*m.symmetry, m.lagrangian(), v)[0] == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(momentum_map_cotangent(*m.symmetry, legendre_transform(m.lagrangian(), v))[0] ==
        momentum_map_lagrangian(*m.symmetry, m.lagrangian(), v)[0]);
}

TEST_CASE("Noether suite on invariant systems") {
  for (const char* f : {"free_particle.json", "central_force.json", "pendulum_cart.json"}) {
    CAPTURE(f);
    const auto m = test::load(f);
    const auto& g = *m.symmetry;
    CHECK(check_invariance(g, m.rcl, 200, 0).pass);
    CHECK(check_equivariance(g, m.lagrangian(), 200, 0).pass);
    CHECK(check_momentum_paths(g, m.lagrangian(), 200, 0).pass);
    CHECK(check_noether(g, m.lagrangian(), 200, 0).pass);
    CHECK(check_regular_value(g, m.lagrangian(), 200, 0).pass);
    const auto drift = check_drift(m.lagrangian(), &g, m.initial_state());
    CHECK(drift.energy.pass);
    CHECK(drift.momentum.pass);
  }
}

TEST_CASE("declaring a non-cyclic coordinate cyclic fails invariance") {
  const auto m = test::load("harmonic_oscillator_cyclic.json");
  const auto r = check_invariance(*m.symmetry, m.rcl, 200, 0);
  CHECK_FALSE(r.pass);
  CHECK(r.witness.has_value());
  CHECK_FALSE(check_noether(*m.symmetry, m.lagrangian(), 200, 0).pass);
}

TEST_CASE("a force that breaks the symmetry fails invariance") {
  const auto m = test::load("central_force.json");
  const RCLSystem forced(m.lagrangian(), FiberMap(m.lagrangian(), {"0", "-sin(theta)"}));
  CHECK_FALSE(check_invariance(*m.symmetry, forced, 200, 0).pass);
}

TEST_CASE("trivial group") {
  const auto m = test::load("harmonic_oscillator.json");
  const auto g = SymmetrySpec::translation(m.rcl.space(), {});
  CHECK(g.dim() == 0);
  CHECK(check_invariance(g, m.rcl, 20, 0).pass);
  const auto drift = check_drift(m.lagrangian(), &g, m.initial_state());
  CHECK_FALSE(drift.momentum.applicable);
}
