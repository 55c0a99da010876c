#include "rclab/dynamics.hpp"

#include <cmath>

#include "rclab/error.hpp"

namespace rclab {

Vec solve_symplectic(const Mat& omega, const Vec& energy_gradient) {
  Eigen::FullPivLU<Mat> lu(-omega);
  if (!lu.isInvertible()) throw SingularError("two-form is degenerate; cannot solve for the vector field");
  return lu.solve(energy_gradient);
}

DoubleTangentVector euler_lagrange_vector(const LagrangianSystem& sys, const TangentPoint& v) {
  const auto jet = sys.jet(v);
  const auto n = static_cast<Eigen::Index>(sys.dim());
  const Mat J = legendre_jacobian(jet);
  const Mat omega = J.transpose() * canonical_matrix(sys.dim()) * J;
  const Vec grad = energy_gradient(jet, v);

  // -Omega^L xi = grad E_L with Omega^L = [[A, M], [-M, 0]]. The lower block
  // row reads M xi_q = dE/dqdot = M qdot, so xi_q = qdot; the upper row then
  // gives M xi_qdot = -dE/dq - A qdot.
  const Mat A = 0.5 * (omega.topLeftCorner(n, n) - omega.topLeftCorner(n, n).transpose());
  const Mat M = omega.topRightCorner(n, n);
  Eigen::FullPivLU<Mat> lu(M);
  if (!lu.isInvertible() || smallest_singular_value(M) < sys.tolerances().hyperreg_min) {
    throw SingularError("Lagrangian two-form is degenerate; no Euler-Lagrange field");
  }
  const Vec accel = lu.solve(-grad.head(n) - A * v.qdot);
  return DoubleTangentVector{v, v.qdot, accel};
}

VectorFieldOnTQ euler_lagrange_field(const LagrangianSystem& sys) {
  return VectorFieldOnTQ{[sys](const TangentPoint& v) { return euler_lagrange_vector(sys, v); },
                         FieldKind::EulerLagrange};
}

Vec euler_lagrange_ode(const LagrangianSystem& sys, const TangentPoint& v) {
  const auto jet = sys.jet(v);
  Eigen::ColPivHouseholderQR<Mat> qr(jet.mass);
  if (!qr.isInvertible()) throw SingularError("velocity Hessian is singular");
  return qr.solve(jet.dq - jet.mixed * v.qdot);
}

// ---------------------------------------------------------------------------
// Hamiltonian side

double Hamiltonian::value_with_guess(const CotangentPoint& alpha, const Vec& guess) const {
  const TangentPoint v = inverse_legendre(sys_, alpha, guess);
  // Using the target p keeps H stationary in the Newton error of qdot.
  return alpha.p.dot(v.qdot) - sys_.value(v);
}

double Hamiltonian::value(const CotangentPoint& alpha) const {
  const TangentPoint v = inverse_legendre(sys_, alpha);
  return alpha.p.dot(v.qdot) - sys_.value(v);
}

Vec Hamiltonian::gradient(const CotangentPoint& alpha) const {
  const Vec warm = inverse_legendre(sys_, alpha).qdot;
  const Vec z = alpha.stacked();
  Vec g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Vec zp = z, zm = z;
    zp[i] += step_;
    zm[i] -= step_;
    const double hp = value_with_guess(CotangentPoint::from_stacked(zp), warm);
    const double hm = value_with_guess(CotangentPoint::from_stacked(zm), warm);
    g[i] = (hp - hm) / (2.0 * step_);
  }
  return g;
}

Vec Hamiltonian::field(const CotangentPoint& alpha) const {
  return solve_symplectic(canonical_matrix(static_cast<std::size_t>(alpha.q.size())), gradient(alpha));
}

Hamiltonian hamiltonian_from_lagrangian(const LagrangianSystem& sys) { return Hamiltonian(sys); }

// ---------------------------------------------------------------------------
// Checks

CheckResult check_fl_related(const LagrangianSystem& sys, std::size_t samples, std::uint64_t seed,
                             double tol) {
  const Hamiltonian ham(sys);
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint v = sampler.tangent(sys.space());
    const Vec lhs = legendre_jacobian(sys, v) * euler_lagrange_vector(sys, v).stacked();
    const Vec rhs = ham.field(legendre_transform(sys, v));
    track.observe((lhs - rhs).cwiseAbs().maxCoeff(), v.stacked());
  }
  return track.finish("dynamics.fl_related", "T(FL) xi_L = X_H o FL", tol, samples, seed);
}

CheckResult check_dual_derivation(const LagrangianSystem& sys, std::size_t samples,
                                  std::uint64_t seed, double tol) {
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint v = sampler.tangent(sys.space());
    const Vec a = euler_lagrange_vector(sys, v).dqdot;
    const Vec b = euler_lagrange_ode(sys, v);
    track.observe((a - b).cwiseAbs().maxCoeff(), v.stacked());
  }
  return track.finish("dynamics.dual_derivation",
                      "i_xi omega^L = dE_L agrees with d/dt dL/dqdot = dL/dq", tol, samples, seed);
}

CheckResult check_second_order(const VectorFieldOnTQ& field, const ConfigSpace& space,
                               std::size_t samples, std::uint64_t seed, double tol) {
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint v = sampler.tangent(space);
    const DoubleTangentVector w = field(v);
    track.observe((w.dq - v.qdot).cwiseAbs().maxCoeff(), v.stacked());
  }
  return track.finish("dynamics.second_order", "T tau_Q o xi = id", tol, samples, seed);
}

CheckResult check_energy_conservation(const LagrangianSystem& sys, std::size_t samples,
                                      std::uint64_t seed, double tol) {
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint v = sampler.tangent(sys.space());
    const Vec grad = energy_gradient(sys.jet(v), v);
    const Vec xi = euler_lagrange_vector(sys, v).stacked();
    track.observe(std::fabs(grad.dot(xi)), v.stacked());
  }
  return track.finish("dynamics.energy_conservation", "dE_L(xi_L) = 0", tol, samples, seed);
}

// ---------------------------------------------------------------------------
// Integration

Trajectory integrate(const VectorFieldOnTQ& field, const TangentPoint& v0, double t1, double h,
                     const Monitors& monitors, const ConfigSpace* space) {
  if (!(h > 0.0) || !(t1 > 0.0)) throw ValidationError("integrate needs h > 0 and t1 > 0");
  constexpr double kBlowUp = 1e12;
  auto rhs = [&](const Vec& z) { return field(TangentPoint::from_stacked(z)).stacked(); };

  Trajectory traj;
  auto record = [&](double t, const TangentPoint& v) {
    traj.times.push_back(t);
    traj.states.push_back(v);
    if (monitors.energy) traj.energy.push_back(monitors.energy(v));
    if (monitors.momentum) traj.momentum.push_back(monitors.momentum(v));
  };

  const auto steps = static_cast<std::size_t>(std::ceil(t1 / h - 1e-9));
  Vec z = v0.stacked();
  if (space) z.head(z.size() / 2) = space->wrap(Vec(z.head(z.size() / 2)));
  record(0.0, TangentPoint::from_stacked(z));
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * h;
    const double t_next = (k == steps) ? t1 : static_cast<double>(k) * h;
    const double dt = t_next - t_prev;
    const Vec k1 = rhs(z);
    const Vec k2 = rhs(z + 0.5 * dt * k1);
    const Vec k3 = rhs(z + 0.5 * dt * k2);
    const Vec k4 = rhs(z + dt * k3);
    z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > kBlowUp) {
      traj.blew_up = true;
      return traj;
    }
    if (space) z.head(z.size() / 2) = space->wrap(Vec(z.head(z.size() / 2)));
    record(t_next, TangentPoint::from_stacked(z));
  }
  return traj;
}

}  // namespace rclab
