#pragma once

// Abelian translation symmetries on cyclic coordinates, Lie-algebra data given
// by structure constants, momentum maps, and the checks built on them.

#include <cstdint>
#include <vector>

#include "rclab/control.hpp"
#include "rclab/dynamics.hpp"
#include "rclab/geometry.hpp"
#include "rclab/lagrangian.hpp"
#include "rclab/report.hpp"

namespace rclab {

class SymmetrySpec {
 public:
  enum class Kind { AbelianTranslation, AlgebraOnly };

  SymmetrySpec() = default;

  /// Translations of the listed coordinates; an empty list is the trivial group.
  static SymmetrySpec translation(const ConfigSpace& space, std::vector<std::size_t> cyclic);
  /// Structure constants laid out as c[(k * d + i) * d + j] = C^k_ij. Validates
  /// antisymmetry and the Jacobi identity to 1e-12.
  static SymmetrySpec algebra(std::size_t dim, std::vector<double> structure_constants);
  static SymmetrySpec so3();

  Kind kind() const noexcept { return kind_; }
  bool is_translation() const noexcept { return kind_ == Kind::AbelianTranslation; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::size_t>& cyclic() const noexcept { return cyclic_; }
  /// Non-cyclic coordinate indices in increasing order (translation kind).
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t config_dim() const noexcept { return n_; }
  bool periodic(std::size_t k) const { return periodic_.at(k); }

  double structure_constant(std::size_t k, std::size_t i, std::size_t j) const;
  bool is_abelian() const;
  double antisymmetry_defect() const;
  double jacobi_defect() const;

 private:
  Kind kind_ = Kind::AbelianTranslation;
  std::size_t dim_ = 0;
  std::size_t n_ = 0;
  std::vector<std::size_t> cyclic_;
  std::vector<std::size_t> shape_;
  std::vector<bool> periodic_;
  std::vector<double> constants_;  // empty means all zero
};

/// Shift cyclic coordinate c_i by g_i (wrapped when periodic).
TangentPoint tangent_lifted_action(const SymmetrySpec& spec, const Vec& g, const TangentPoint& v);

/// J(alpha) = p at the cyclic indices.
Vec momentum_map_cotangent(const SymmetrySpec& spec, const CotangentPoint& alpha);

/// J_L(v) = dL/dqdot at the cyclic indices.
Vec momentum_map_lagrangian(const SymmetrySpec& spec, const LagrangianSystem& sys, const TangentPoint& v);

/// Time derivative of J_L along a vector in T_v(TQ).
Vec momentum_rate(const SymmetrySpec& spec, const LagrangianSystem& sys, const DoubleTangentVector& xi);

/// L, and for controlled systems F, the control offset and the law, are
/// unchanged by seeded group shifts.
CheckResult check_invariance(const SymmetrySpec& spec, const LagrangianSystem& sys, std::size_t samples,
                             std::uint64_t seed, double tol = 1e-10);
CheckResult check_invariance(const SymmetrySpec& spec, const RCLSystem& rcl, std::size_t samples,
                             std::uint64_t seed, double tol = 1e-10);

/// J_L(Phi^T_g v) = J_L(v).
CheckResult check_equivariance(const SymmetrySpec& spec, const LagrangianSystem& sys, std::size_t samples,
                               std::uint64_t seed, double tol = 1e-10);

/// J_L = J o FL along two independent code paths.
CheckResult check_momentum_paths(const SymmetrySpec& spec, const LagrangianSystem& sys, std::size_t samples,
                                 std::uint64_t seed, double tol = 1e-14);

/// dJ_L(xi_L) = 0.
CheckResult check_noether(const SymmetrySpec& spec, const LagrangianSystem& sys, std::size_t samples,
                          std::uint64_t seed, double tol = 1e-9);

struct DriftReport {
  CheckResult energy;
  CheckResult momentum;  // not applicable without cyclic coordinates
  bool blew_up = false;
};

/// Integrates xi_L from v0 over [0, t1] with step h and measures the drift
/// of E_L and J_L. `spec` may be null.
DriftReport check_drift(const LagrangianSystem& sys, const SymmetrySpec* spec, const TangentPoint& v0,
                        double t1 = 10.0, double h = 1e-3, double tol = 1e-6);

struct RegularValueCertificate {
  bool pass = false;
  double min_singular_value = 0.0;  // of the cyclic rows of M
  TangentPoint witness;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

/// Full rank of dJ_L/dqdot (the cyclic rows of M) on box samples.
RegularValueCertificate check_regular_value(const SymmetrySpec& spec, const LagrangianSystem& sys,
                                            std::size_t samples, std::uint64_t seed);

/// <nu, [xi, eta]> = sum_k nu_k C^k_ij xi_i eta_j.
double coadjoint_plus_form(const SymmetrySpec& algebra, const Vec& nu, const Vec& xi, const Vec& eta);

}  // namespace rclab
