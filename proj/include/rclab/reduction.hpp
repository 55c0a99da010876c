#pragma once

// Reduction of (controlled) Lagrangian systems by abelian translations of
// cyclic coordinates. The quotient J_L^{-1}(mu)/G is charted by the shape
// coordinates x = (q_s, qdot_s); a section sigma pins the cyclic positions
// and solves dL/dqdot_c = mu for the cyclic velocities.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rclab/control.hpp"
#include "rclab/dynamics.hpp"
#include "rclab/geometry.hpp"
#include "rclab/lagrangian.hpp"
#include "rclab/report.hpp"
#include "rclab/symmetry.hpp"

namespace rclab {

/// Cyclic positions used by the section: q_c = offsets + shear * q_s.
struct SectionChoice {
  Vec offsets;  // k entries; empty means zero
  Mat shear;    // k x s; empty means zero
};

struct ReductionOptions {
  std::size_t samples = 200;  // level-set samples for the preconditions
  std::uint64_t seed = 0;
  double tol = 1e-8;
};

/// Control subset of the reduced system: the actuated shape directions.
struct ReducedControl {
  std::vector<std::size_t> actuated;  // indices into the shape coordinates
  std::vector<Interval> bounds;
  bool has_offset = false;
};

class ReducedSystem {
 public:
  /// No precondition checks; use point_reduce for a certified reduction.
  ReducedSystem(RCLSystem parent, SymmetrySpec spec, Vec mu, SectionChoice section = {});

  const RCLSystem& parent() const noexcept { return parent_; }
  const LagrangianSystem& parent_lagrangian() const noexcept { return parent_.lagrangian(); }
  const SymmetrySpec& spec() const noexcept { return spec_; }
  const Vec& mu() const noexcept { return mu_; }
  const SectionChoice& section_choice() const noexcept { return section_; }
  const ConfigSpace& space() const noexcept { return space_; }
  std::size_t dim() const noexcept { return space_.dim(); }
  const std::optional<ReducedControl>& control() const noexcept { return control_; }
  const std::vector<std::string>& notes() const noexcept { return notes_; }
  std::vector<CheckResult>& certificates() noexcept { return certificates_; }
  const std::vector<CheckResult>& certificates() const noexcept { return certificates_; }

  ReducedSystem with_section(SectionChoice section) const;

  // Maps between the reduced chart and the level set.
  Vec cyclic_velocities(const TangentPoint& x) const;
  TangentPoint section(const TangentPoint& x) const;
  Mat section_jacobian(const TangentPoint& x) const;  // 2n x 2s
  TangentPoint project(const TangentPoint& z) const;
  Mat projection_matrix() const;                       // 2s x 2n
  /// The level-set point g . sigma(x).
  TangentPoint level_set_point(const TangentPoint& x, const Vec& g) const;

  // Reduced Lagrangian data.
  double lagrangian(const TangentPoint& x) const;
  double action(const TangentPoint& x) const;
  double energy(const TangentPoint& x) const;
  Vec energy_gradient(const TangentPoint& x) const;
  TwoFormAtPoint two_form(const TangentPoint& x) const;

  // Reduced forces and controls: shape components of the parent maps on sigma(x).
  std::optional<Vec> force(const TangentPoint& x) const;
  std::optional<Vec> law(const TangentPoint& x) const;
  std::optional<Vec> control_offset(const TangentPoint& x) const;
  /// Jacobian over x of the reduced force / law / offset (s x 2s).
  Mat force_jacobian(const TangentPoint& x) const;
  Mat law_jacobian(const TangentPoint& x) const;
  Mat offset_jacobian(const TangentPoint& x) const;

  /// i_xi omega_mu = dE_mu, using that the vertical-vertical block of omega_mu vanishes.
  DoubleTangentVector euler_lagrange_vector(const TangentPoint& x) const;
  /// Same equation through a dense LU of omega_mu.
  DoubleTangentVector euler_lagrange_vector_dense(const TangentPoint& x) const;
  /// xi_{l_mu} + vlift(f_mu) xi_{l_mu} + vlift(u_mu) xi_{l_mu}.
  DoubleTangentVector field_vector(const TangentPoint& x) const;
  VectorFieldOnTQ field() const;

  /// Reduced Legendre map x -> (q_s, dL/dqdot_s(sigma(x))) and its inverse.
  CotangentPoint legendre(const TangentPoint& x) const;
  Mat legendre_jacobian(const TangentPoint& x) const;
  TangentPoint inverse_legendre(const CotangentPoint& alpha, const std::optional<Vec>& guess = std::nullopt) const;

 private:
  Mat fiber_jacobian(const FiberMap& map, const TangentPoint& x) const;
  Vec shape_part(const Vec& full) const;

  RCLSystem parent_;
  SymmetrySpec spec_;
  Vec mu_;
  SectionChoice section_;
  ConfigSpace space_;
  std::optional<ReducedControl> control_;
  std::vector<std::string> notes_;
  std::vector<CheckResult> certificates_;
};

/// Certified point reduction. Throws IrreducibleError naming the violated
/// condition: non-invariant parent, mu not a regular value, F or u pushing
/// the flow off the level set, or an empty intersection of C with it.
ReducedSystem point_reduce(const RCLSystem& parent, const SymmetrySpec& spec, const Vec& mu,
                           const ReductionOptions& options = {}, SectionChoice section = {});
ReducedSystem point_reduce(const LagrangianSystem& parent, const SymmetrySpec& spec, const Vec& mu,
                           const ReductionOptions& options = {}, SectionChoice section = {});

struct OrbitReduction {
  ReducedSystem reduced;
  CheckResult correction;  // the coadjoint-orbit correction term, identically zero here
};

/// Orbit reduction; for abelian groups the orbit of mu is {mu}. Throws
/// UnsupportedError for non-abelian specs.
OrbitReduction orbit_reduce(const RCLSystem& parent, const SymmetrySpec& spec, const Vec& mu,
                            const ReductionOptions& options = {});

/// Some w in C(z) with J_L(q, w) = mu, by Gauss-Newton over the actuated
/// coefficients starting from `start` (defaults to the offset).
std::optional<Vec> control_level_member(const RCLSystem& rcl, const SymmetrySpec& spec, const Vec& mu,
                                        const TangentPoint& z, const std::optional<Vec>& start = std::nullopt,
                                        double tol = 1e-10);

// Certification ------------------------------------------------------------

/// xi_red(tau z) = T tau (xi(z)) at seeded level-set points.
CheckResult check_commutation(const ReducedSystem& red, std::size_t samples, std::uint64_t seed,
                              double tol = 1e-8);

/// Flow version: upstairs from sigma(x0) projected vs downstairs from x0.
CheckResult check_flow_commutation(const ReducedSystem& red, const TangentPoint& x0, double t1 = 5.0,
                                   double h = 1e-3, double tol = 1e-5);

/// Reduced form, l_mu, E_mu and the reduced field under a shifted, sheared section.
CheckResult check_section_independence(const ReducedSystem& red, std::size_t samples, std::uint64_t seed,
                                       double tol = 1e-9);

/// dE_mu(xi_{l_mu}) = 0.
CheckResult check_reduced_energy(const ReducedSystem& red, std::size_t samples, std::uint64_t seed,
                                 double tol = 1e-9);

/// The reduced Legendre map pulls the canonical form on (q_s, p_s) back to
/// omega_mu; the second entry certifies the orbit variant (zero correction).
std::vector<CheckResult> check_reduced_legendre(const ReducedSystem& red, std::size_t samples,
                                                std::uint64_t seed, double tol = 1e-8);

/// Reduced analogues of the dynamics checks.
CheckResult check_reduced_round_trip(const ReducedSystem& red, std::size_t samples, std::uint64_t seed,
                                     double tol = 1e-10);
CheckResult check_reduced_second_order(const ReducedSystem& red, std::size_t samples, std::uint64_t seed);
CheckResult check_reduced_dual_derivation(const ReducedSystem& red, std::size_t samples, std::uint64_t seed,
                                          double tol = 1e-9);
CheckResult check_reduced_fl_related(const ReducedSystem& red, std::size_t samples, std::uint64_t seed,
                                     double tol = 1e-8);

// Equivalence of reducible systems -------------------------------------------

struct ReducedEquivalenceReport {
  std::vector<CheckResult> condition1;  // level sets, group actions, control subsets
  CheckResult condition2;               // dynamical fields
  std::optional<CheckResult> orbit_form;  // orbit variant only
  bool pass() const;
};

/// Matching conditions for reducible controlled systems under phi. With
/// `orbit` set, also compares the coadjoint +-forms carried by the momenta.
ReducedEquivalenceReport check_rpcl_equivalence(const ReducedSystem& a, const ReducedSystem& b,
                                                const PointMap& map, std::size_t samples, std::uint64_t seed,
                                                double tol = 1e-8, bool orbit = false);

/// The induced map of reduced charts, x -> tau_2(T phi(sigma_1(x))), and its Jacobian.
TangentPoint reduced_map(const ReducedSystem& a, const ReducedSystem& b, const PointMap& map,
                         const TangentPoint& x);
Mat reduced_map_jacobian(const ReducedSystem& a, const ReducedSystem& b, const PointMap& map,
                         const TangentPoint& x);

enum class TheoremKind { PointControlled, PointLagrangian, OrbitControlled, OrbitLagrangian };

struct HarnessReport {
  std::vector<CheckResult> upstairs;
  std::vector<CheckResult> downstairs;
  CheckResult agreement;
  bool upstairs_pass() const;
  bool downstairs_pass() const;
};

/// Evaluates both sides of a reduction-equivalence biconditional on one pair
/// and asserts that the verdicts coincide.
HarnessReport theorem_harness(TheoremKind kind, const ReducedSystem& a, const ReducedSystem& b,
                              const PointMap& map, std::size_t samples, std::uint64_t seed, double tol = 1e-8);

}  // namespace rclab
