#pragma once

// External forces, control subsets and laws, vertical lifts along fibers of
// TQ, the controlled dynamical vector field and the matching conditions that
// define equivalence of controlled systems under a configuration map.
//
// The vertical/horizontal split of T(TQ) is the chart-flat one: the vertical
// lift of a fiber vector w at v is (dq, dqdot) = (0, w), and parallel
// transport along the straight fiber line is the identity on components.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rclab/dynamics.hpp"
#include "rclab/geometry.hpp"
#include "rclab/lagrangian.hpp"
#include "rclab/report.hpp"

namespace rclab {

/// Fiber-preserving map (q, qdot) -> (q, f(q, qdot)); only f is stored.
class FiberMap {
 public:
  struct Jet {
    Vec value;
    Mat dq;     // df/dq
    Mat dqdot;  // df/dqdot
  };

  FiberMap() = default;
  FiberMap(const LagrangianSystem& sys, const std::vector<std::string>& components);

  std::size_t dim() const noexcept { return components_.size(); }
  Vec apply(const TangentPoint& v) const;
  Jet jet(const TangentPoint& v) const;
  std::vector<std::string> text(const expr::SymbolTable& table) const;
  const std::vector<expr::Expression>& components() const noexcept { return components_; }

 private:
  std::vector<expr::Expression> components_;
  std::vector<double> params_;
};

/// Affine slice C(v) = { c0(v) + sum_{d in D} a_d e_d : a_d in bounds_d }.
class ControlSubset {
 public:
  static constexpr double kUnbounded = std::numeric_limits<double>::infinity();

  ControlSubset() = default;
  /// `bounds` is empty (unbounded) or one interval per actuated direction.
  ControlSubset(const LagrangianSystem& sys, std::vector<std::size_t> actuated,
                const std::optional<std::vector<std::string>>& offset, std::vector<Interval> bounds = {});

  const std::vector<std::size_t>& actuated() const noexcept { return actuated_; }
  const std::vector<Interval>& bounds() const noexcept { return bounds_; }
  const std::optional<FiberMap>& offset_map() const noexcept { return offset_; }
  bool is_actuated(std::size_t i) const;

  Vec offset(const TangentPoint& v) const;
  /// Largest violation of the membership conditions (off-support components
  /// of w - c0(v) and out-of-bounds actuated coefficients); 0 for members.
  double membership_defect(const TangentPoint& v, const Vec& w) const;
  bool contains(const TangentPoint& v, const Vec& w, double tol) const {
    return membership_defect(v, w) <= tol;
  }
  /// A member of C(v) with actuated coefficients drawn inside the bounds
  /// (intersected with [-1, 1] for unbounded directions).
  Vec sample_member(const TangentPoint& v, Sampler& sampler) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> actuated_;
  std::optional<FiberMap> offset_;
  std::vector<Interval> bounds_;
};

struct LawCertificate {
  bool pass = false;
  double max_defect = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::optional<TangentPoint> witness;
};

/// (TQ, omega^L, L, F^L, C^L) with an optional feedback law u^L: TQ -> C^L.
class RCLSystem {
 public:
  RCLSystem(LagrangianSystem sys, std::optional<FiberMap> force = std::nullopt,
            std::optional<ControlSubset> control = std::nullopt,
            std::optional<FiberMap> law = std::nullopt, std::size_t law_samples = 512,
            std::uint64_t seed = 0);

  const LagrangianSystem& lagrangian() const noexcept { return sys_; }
  const ConfigSpace& space() const noexcept { return sys_.space(); }
  std::size_t dim() const noexcept { return sys_.dim(); }
  const std::optional<FiberMap>& force() const noexcept { return force_; }
  const std::optional<ControlSubset>& control() const noexcept { return control_; }
  const std::optional<FiberMap>& law() const noexcept { return law_; }
  const std::optional<LawCertificate>& law_certificate() const noexcept { return certificate_; }

  /// Same system with the law replaced (or removed).
  RCLSystem with_law(std::optional<FiberMap> law) const;

 private:
  LagrangianSystem sys_;
  std::optional<FiberMap> force_;
  std::optional<ControlSubset> control_;
  std::optional<FiberMap> law_;
  std::optional<LawCertificate> certificate_;
};

/// Samples u(v) in C(v).
LawCertificate certify_law(const ControlSubset& control, const FiberMap& law, const ConfigSpace& space,
                           std::size_t samples, std::uint64_t seed, double tol = 1e-12);

/// (base = at, dq = 0, dqdot = w).
DoubleTangentVector vertical_lift(const TangentPoint& at, const Vec& w);

/// vlift(F) xi at v: the vertical part of TF . xi(v), transported back to v.
DoubleTangentVector vlift_of_fiber_map(const FiberMap& map, const DoubleTangentVector& xi);
DoubleTangentVector vlift_of_fiber_map(const FiberMap& map, const VectorFieldOnTQ& field,
                                       const TangentPoint& at);

/// xi = xi_L + vlift(F^L) xi_L + vlift(u^L) xi_L; absent maps drop their term.
DoubleTangentVector controlled_vector(const RCLSystem& rcl, const TangentPoint& v);
VectorFieldOnTQ controlled_field(const RCLSystem& rcl);

struct EquivalenceReport {
  CheckResult condition1;  // control subsets correspond under T phi
  CheckResult condition2;  // dynamical fields are T phi-related
  bool pass() const { return condition1.pass && condition2.pass; }
};

/// Sample certificate of the controlled-Lagrangian matching conditions for
/// (a, b, phi). When b carries no law, the field condition is checked in the
/// solvable sense through control_match_solve.
EquivalenceReport check_rcl_equivalence(const RCLSystem& a, const RCLSystem& b, const PointMap& map,
                                        std::size_t samples, std::uint64_t seed, double tol = 1e-8);

struct MatchSolution {
  DoubleTangentVector required;  // vlift(u_2) demanded at T phi(v)
  double horizontal_part = 0.0;  // |dq| of the requirement
  double off_support = 0.0;      // size of the dqdot part outside C_2's actuated directions
  bool realizable = false;
};

/// The vertical correction vlift(u_2) needed at T phi(v) so that the second
/// system's field matches the pushed first one:
///   required = T(T phi) xi_1(v) - xi_L2(T phi v) - vlift(F_2) xi_L2(T phi v),
/// with xi_1 the full controlled field of `a`. Realizable when the dq part
/// vanishes and, after removing the lift of C_2's offset, the dqdot part is
/// supported on C_2's actuated directions.
MatchSolution control_match_solve(const RCLSystem& a, const RCLSystem& b, const PointMap& map,
                                  const TangentPoint& at, double tol = 1e-8);

struct MatchingConditionReport {
  CheckResult premise;    // xi_L2 o T phi = T(T phi) xi_L1
  CheckResult condition;  // vlift(u_2) - vlift(T phi u_1 T phi^-1) = -vlift(F_2) + vlift(T phi F_1 T phi^-1)
};

MatchingConditionReport check_force_law_matching(const RCLSystem& a, const RCLSystem& b,
                                                 const PointMap& map, std::size_t samples,
                                                 std::uint64_t seed, double tol = 1e-8);

/// The system transported along an affine diffeomorphism: L_2 = L_1 o T phi^-1,
/// with forces, offset and law conjugated by T phi. Control directions must
/// map onto coordinate axes. Throws UnsupportedError for non-affine maps.
RCLSystem pushforward(const RCLSystem& rcl, const PointMap& map);

}  // namespace rclab
