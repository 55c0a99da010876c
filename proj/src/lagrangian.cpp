#include "rclab/lagrangian.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rclab/error.hpp"

namespace rclab {

namespace {

std::string describe(const TangentPoint& v) {
  std::ostringstream os;
  os.precision(6);
  os << "q=(";
  for (Eigen::Index i = 0; i < v.q.size(); ++i) os << (i ? ", " : "") << v.q[i];
  os << "), qdot=(";
  for (Eigen::Index i = 0; i < v.qdot.size(); ++i) os << (i ? ", " : "") << v.qdot[i];
  os << ")";
  return os.str();
}

}  // namespace

LagrangianSystem::LagrangianSystem(ConfigSpace space, const std::string& lagrangian,
                                   std::vector<std::pair<std::string, double>> params,
                                   Tolerances tol, bool certify)
    : space_(std::move(space)), table_(space_.names(), std::move(params), true), tol_(tol) {
  lagrangian_ = expr::parse(lagrangian, table_);
  if (certify) {
    const auto cert = check_hyperregular(*this, tol_.hyperreg_samples, tol_.hyperreg_seed);
    if (!cert.pass) {
      std::ostringstream os;
      os << "hyperregularity failed: smallest singular value of the velocity Hessian "
         << cert.min_singular_value << " at " << describe(cert.witness);
      throw ValidationError(os.str());
    }
  }
}

std::vector<std::pair<std::string, double>> LagrangianSystem::named_params() const {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < table_.num_params(); ++i) {
    out.emplace_back(table_.param_names()[i], table_.param_values()[i]);
  }
  return out;
}

double LagrangianSystem::value(const TangentPoint& v) const {
  const Vec z = v.stacked();
  return expr::evaluate(lagrangian_, {z.data(), static_cast<std::size_t>(z.size())}, params());
}

LagrangianSystem::Jet LagrangianSystem::jet(const TangentPoint& v) const {
  const Vec z = v.stacked();
  const auto d = expr::eval2(lagrangian_, {z.data(), static_cast<std::size_t>(z.size())}, params());
  const auto n = static_cast<Eigen::Index>(dim());
  Jet j;
  j.value = d.value;
  j.dq = d.gradient.head(n);
  j.dqdot = d.gradient.tail(n);
  j.hqq = d.hessian.topLeftCorner(n, n);
  j.mixed = d.hessian.bottomLeftCorner(n, n);
  j.mass = d.hessian.bottomRightCorner(n, n);
  return j;
}

HyperregularityCertificate check_hyperregular(const LagrangianSystem& sys, std::size_t samples,
                                              std::uint64_t seed) {
  if (samples == 0) throw ValidationError("check_hyperregular needs at least one sample");
  HyperregularityCertificate cert;
  cert.samples = samples;
  cert.seed = seed;
  cert.min_abs_det = std::numeric_limits<double>::infinity();
  cert.min_singular_value = std::numeric_limits<double>::infinity();
  cert.min_condition_margin = std::numeric_limits<double>::infinity();

  auto visit = [&](const TangentPoint& v) {
    const Mat m = sys.jet(v).mass;
    Eigen::JacobiSVD<Mat> svd(m);
    const Vec& s = svd.singularValues();
    const double smin = s.minCoeff();
    const double smax = s.maxCoeff();
    cert.min_abs_det = std::min(cert.min_abs_det, std::fabs(m.determinant()));
    cert.min_condition_margin = std::min(cert.min_condition_margin, smax > 0.0 ? smin / smax : 0.0);
    if (smin < cert.min_singular_value) {
      cert.min_singular_value = smin;
      cert.witness = v;
    }
  };

  for (const auto& a : anchor_points(sys.space())) visit(a);
  Sampler sampler(seed);
  for (std::size_t s = 0; s < samples; ++s) visit(sampler.tangent(sys.space()));
  cert.pass = cert.min_singular_value >= sys.tolerances().hyperreg_min;
  return cert;
}

CotangentPoint legendre_transform(const LagrangianSystem& sys, const TangentPoint& v) {
  return CotangentPoint{v.q, sys.jet(v).dqdot};
}

Mat legendre_jacobian(const LagrangianSystem::Jet& jet) {
  const Eigen::Index n = jet.mass.rows();
  Mat J = Mat::Zero(2 * n, 2 * n);
  J.topLeftCorner(n, n) = Mat::Identity(n, n);
  J.bottomLeftCorner(n, n) = jet.mixed;
  J.bottomRightCorner(n, n) = jet.mass;
  return J;
}

Mat legendre_jacobian(const LagrangianSystem& sys, const TangentPoint& v) {
  return legendre_jacobian(sys.jet(v));
}

TangentPoint inverse_legendre(const LagrangianSystem& sys, const CotangentPoint& alpha,
                              const std::optional<Vec>& guess) {
  const auto n = static_cast<Eigen::Index>(sys.dim());
  const Tolerances& tol = sys.tolerances();
  TangentPoint v{alpha.q, Vec::Zero(n)};
  if (guess) {
    v.qdot = *guess;
  } else {
    const auto j0 = sys.jet(v);
    Eigen::FullPivLU<Mat> lu(j0.mass);
    if (!lu.isInvertible()) throw SingularError("inverse Legendre: singular velocity Hessian at warm start");
    v.qdot = lu.solve(alpha.p - j0.dqdot);
  }
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= tol.newton_max_iter; ++it) {
    const auto j = sys.jet(v);
    const Vec r = j.dqdot - alpha.p;
    residual = r.cwiseAbs().maxCoeff();
    if (residual <= tol.newton_tol) return v;
    if (it == tol.newton_max_iter) break;
    Eigen::FullPivLU<Mat> lu(j.mass);
    if (!lu.isInvertible()) throw SingularError("inverse Legendre: singular Newton Jacobian");
    v.qdot -= lu.solve(r);
  }
  throw ConvergenceError("inverse Legendre did not converge", residual);
}

ActionEnergy action_energy(const LagrangianSystem& sys, const TangentPoint& v) {
  const auto j = sys.jet(v);
  const double a = j.dqdot.dot(v.qdot);
  return ActionEnergy{a, a - j.value};
}

Vec energy_gradient(const LagrangianSystem::Jet& jet, const TangentPoint& v) {
  const Eigen::Index n = jet.mass.rows();
  Vec g(2 * n);
  g.head(n) = jet.mixed.transpose() * v.qdot - jet.dq;
  g.tail(n) = jet.mass * v.qdot;
  return g;
}

Vec lagrangian_one_form(const LagrangianSystem& sys, const TangentPoint& v) {
  const auto n = static_cast<Eigen::Index>(sys.dim());
  Vec theta = Vec::Zero(2 * n);
  theta.head(n) = sys.jet(v).dqdot;
  return theta;
}

TwoFormAtPoint lagrangian_two_form(const LagrangianSystem& sys, const TangentPoint& v) {
  const auto j = sys.jet(v);
  const Mat J = legendre_jacobian(j);
  const TwoFormAtPoint omega0{legendre_transform(sys, v).stacked(), canonical_matrix(sys.dim()), true};
  TwoFormAtPoint form = pullback_form(J, omega0, v.stacked());
  if (smallest_singular_value(j.mass) < sys.tolerances().hyperreg_min) {
    throw SingularError("Lagrangian two-form is degenerate at " + describe(v));
  }
  return form;
}

Mat lagrangian_two_form_coordinates(const LagrangianSystem& sys, const TangentPoint& v) {
  const auto j = sys.jet(v);
  const auto n = static_cast<Eigen::Index>(sys.dim());
  Mat omega = Mat::Zero(2 * n, 2 * n);
  auto wedge = [&](double c, Eigen::Index a, Eigen::Index b) {
    omega(a, b) += c;
    omega(b, a) -= c;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      wedge(j.mixed(i, k), i, k);
      wedge(j.mass(i, k), i, n + k);
    }
  }
  return omega;
}

CheckResult check_legendre_round_trip(const LagrangianSystem& sys, std::size_t samples, std::uint64_t seed,
                                      double tol) {
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint v = sampler.tangent(sys.space());
    const TangentPoint back = inverse_legendre(sys, legendre_transform(sys, v));
    track.observe((back.stacked() - v.stacked()).cwiseAbs().maxCoeff(), v.stacked());
  }
  return track.finish("legendre.round_trip", "FL^-1 o FL = id", tol, samples, seed);
}

CheckResult check_two_form_consistency(const LagrangianSystem& sys, std::size_t samples, std::uint64_t seed,
                                       double tol) {
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint v = sampler.tangent(sys.space());
    const Mat a = lagrangian_two_form(sys, v).matrix;
    const Mat b = lagrangian_two_form_coordinates(sys, v);
    track.observe((a - b).cwiseAbs().maxCoeff(), v.stacked());
  }
  return track.finish("legendre.two_form", "FL^* omega_0 equals the coordinate expression of omega^L", tol, samples,
                      seed);
}

}  // namespace rclab
