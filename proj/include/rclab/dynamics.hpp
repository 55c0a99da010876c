#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rclab/geometry.hpp"
#include "rclab/lagrangian.hpp"
#include "rclab/report.hpp"

namespace rclab {

enum class FieldKind { EulerLagrange, Controlled, ReducedLift };

/// A vector field on TQ: v -> element of T_v(TQ).
struct VectorFieldOnTQ {
  std::function<DoubleTangentVector(const TangentPoint&)> eval;
  FieldKind kind = FieldKind::EulerLagrange;

  DoubleTangentVector operator()(const TangentPoint& v) const { return eval(v); }
};

/// Solve i_X omega = dE for X, i.e. -Omega X = grad E, with a dense LU.
/// Throws SingularError when Omega is not invertible.
Vec solve_symplectic(const Mat& omega, const Vec& energy_gradient);

/// The Euler-Lagrange vector field at v, from i_xi omega^L = dE_L.
DoubleTangentVector euler_lagrange_vector(const LagrangianSystem& sys, const TangentPoint& v);
VectorFieldOnTQ euler_lagrange_field(const LagrangianSystem& sys);

/// Accelerations from the chain-rule expansion of d/dt dL/dqdot = dL/dq.
Vec euler_lagrange_ode(const LagrangianSystem& sys, const TangentPoint& v);

/// H = E_L o FL^{-1} on T*Q and its Hamiltonian vector field.
class Hamiltonian {
 public:
  explicit Hamiltonian(LagrangianSystem sys, double fd_step = 1e-6)
      : sys_(std::move(sys)), step_(fd_step) {}

  /// H(alpha) = <p, qdot> - L(q, qdot) with qdot = FL^{-1}(alpha).
  double value(const CotangentPoint& alpha) const;
  /// Central differences over (q, p); every perturbed point is re-solved by
  /// Newton warm-started at the unperturbed velocity.
  Vec gradient(const CotangentPoint& alpha) const;
  /// X_H stacked as (dq, dp), solving i_X omega_0 = dH.
  Vec field(const CotangentPoint& alpha) const;

  const LagrangianSystem& system() const noexcept { return sys_; }

 private:
  double value_with_guess(const CotangentPoint& alpha, const Vec& guess) const;

  LagrangianSystem sys_;
  double step_;
};

Hamiltonian hamiltonian_from_lagrangian(const LagrangianSystem& sys);

/// max over samples of |J_FL(v) xi_L(v) - X_H(FL(v))|_inf.
CheckResult check_fl_related(const LagrangianSystem& sys, std::size_t samples, std::uint64_t seed,
                             double tol = 1e-8);

/// Symplectic solve vs explicit ODE accelerations.
CheckResult check_dual_derivation(const LagrangianSystem& sys, std::size_t samples,
                                  std::uint64_t seed, double tol = 1e-9);

/// dq-components of xi_L equal qdot.
CheckResult check_second_order(const VectorFieldOnTQ& field, const ConfigSpace& space,
                               std::size_t samples, std::uint64_t seed, double tol = 0.0);

/// dE_L(xi_L) = 0.
CheckResult check_energy_conservation(const LagrangianSystem& sys, std::size_t samples,
                                      std::uint64_t seed, double tol = 1e-9);

struct Monitors {
  std::function<double(const TangentPoint&)> energy;
  std::function<Vec(const TangentPoint&)> momentum;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<TangentPoint> states;
  std::vector<double> energy;
  std::vector<Vec> momentum;
  bool blew_up = false;
};

/// Classical fixed-step RK4 from t = 0 to t1. Periodic coordinates of `space`
/// are wrapped after each step. Aborts with the partial trajectory when any
/// component exceeds 1e12 in magnitude.
Trajectory integrate(const VectorFieldOnTQ& field, const TangentPoint& v0, double t1, double h,
                     const Monitors& monitors = {}, const ConfigSpace* space = nullptr);

}  // namespace rclab
