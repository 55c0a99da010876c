#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rclab/expr.hpp"
#include "rclab/geometry.hpp"
#include "rclab/report.hpp"

namespace rclab {

struct Tolerances {
  double hyperreg_min = 1e-8;         // smallest admissible singular value of M
  std::size_t hyperreg_samples = 512;
  std::uint64_t hyperreg_seed = 0;
  double newton_tol = 1e-12;          // infinity-norm residual for Newton solves
  int newton_max_iter = 50;
};

/// A Lagrangian L(q, qdot) on a chart together with its parameters.
class LagrangianSystem {
 public:
  /// Value, first and second derivatives of L at a point. `mixed(i, j)` is
  /// d^2 L / d qdot^i d q^j; `mass` is the velocity Hessian M.
  struct Jet {
    double value = 0.0;
    Vec dq;
    Vec dqdot;
    Mat hqq;
    Mat mixed;
    Mat mass;
  };

  /// Parses L and, when `certify` is set, samples the box to certify
  /// hyperregularity (throws ValidationError with a witness on failure).
  LagrangianSystem(ConfigSpace space, const std::string& lagrangian,
                   std::vector<std::pair<std::string, double>> params, Tolerances tol = {},
                   bool certify = true);

  const ConfigSpace& space() const noexcept { return space_; }
  const expr::SymbolTable& table() const noexcept { return table_; }
  const expr::Expression& lagrangian() const noexcept { return lagrangian_; }
  std::span<const double> params() const noexcept { return table_.param_values(); }
  std::vector<std::pair<std::string, double>> named_params() const;
  const Tolerances& tolerances() const noexcept { return tol_; }
  std::size_t dim() const noexcept { return space_.dim(); }
  std::string lagrangian_text() const { return expr::to_string(lagrangian_, table_); }

  double value(const TangentPoint& v) const;
  Jet jet(const TangentPoint& v) const;

  /// Parse another expression over the same symbols (forces, laws, offsets).
  expr::Expression parse(const std::string& text) const { return expr::parse(text, table_); }

 private:
  ConfigSpace space_;
  expr::SymbolTable table_;
  expr::Expression lagrangian_;
  Tolerances tol_;
};

struct HyperregularityCertificate {
  bool pass = false;
  double min_abs_det = 0.0;
  double min_singular_value = 0.0;
  double min_condition_margin = 0.0;  // smallest sigma_min / sigma_max
  TangentPoint witness;               // point of minimal singular value
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

/// Samples the box center, the box point nearest the origin and `samples`
/// seeded uniform points; passes iff sigma_min(M) >= hyperreg_min everywhere.
HyperregularityCertificate check_hyperregular(const LagrangianSystem& sys, std::size_t samples,
                                              std::uint64_t seed);

CotangentPoint legendre_transform(const LagrangianSystem& sys, const TangentPoint& v);

/// Jacobian of FL in the (q, qdot) -> (q, p) bases: [[I, 0], [mixed, M]].
Mat legendre_jacobian(const LagrangianSystem::Jet& jet);
Mat legendre_jacobian(const LagrangianSystem& sys, const TangentPoint& v);

/// Newton solve of dL/dqdot(q, qdot) = p. Without a guess the start is the
/// linear solve M(q, 0) qdot = p - dL/dqdot(q, 0).
TangentPoint inverse_legendre(const LagrangianSystem& sys, const CotangentPoint& alpha,
                              const std::optional<Vec>& guess = std::nullopt);

struct ActionEnergy {
  double action = 0.0;
  double energy = 0.0;
};

/// A(v) = FL(v) v and E_L = A - L.
ActionEnergy action_energy(const LagrangianSystem& sys, const TangentPoint& v);

/// Chart gradient of E_L over (q, qdot): (mixed^T qdot - dL/dq, M qdot).
Vec energy_gradient(const LagrangianSystem::Jet& jet, const TangentPoint& v);

/// theta^L as a row over (dq, dqdot): (dL/dqdot, 0).
Vec lagrangian_one_form(const LagrangianSystem& sys, const TangentPoint& v);

/// omega^L = FL^* omega_0, computed as J_FL^T Omega_0 J_FL. Throws SingularError
/// when the smallest singular value falls below the hyperregularity threshold.
TwoFormAtPoint lagrangian_two_form(const LagrangianSystem& sys, const TangentPoint& v);

/// The coordinate expression mixed_ij dq^i ^ dq^j + M_ij dq^i ^ dqdot^j,
/// assembled term by term with (a ^ b)(u, v) = a(u) b(v) - a(v) b(u).
Mat lagrangian_two_form_coordinates(const LagrangianSystem& sys, const TangentPoint& v);

/// FL^{-1}(FL(v)) = v at seeded box points.
CheckResult check_legendre_round_trip(const LagrangianSystem& sys, std::size_t samples, std::uint64_t seed,
                                      double tol = 1e-10);

/// Pullback matrix of omega_0 against the coordinate expression of omega^L.
CheckResult check_two_form_consistency(const LagrangianSystem& sys, std::size_t samples, std::uint64_t seed,
                                       double tol = 1e-10);

}  // namespace rclab
