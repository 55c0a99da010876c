#include "rclab/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "rclab/error.hpp"

namespace rclab {

namespace {

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

void require_translation(const SymmetrySpec& spec, const char* what) {
  if (!spec.is_translation()) {
    throw UnsupportedError(std::string(what) + " needs an abelian translation symmetry");
  }
}

Vec random_shift(const SymmetrySpec& spec, Sampler& sampler) {
  return sampler.uniform_vector(spec.cyclic().size(), -2.0, 2.0);
}

}  // namespace

SymmetrySpec SymmetrySpec::translation(const ConfigSpace& space, std::vector<std::size_t> cyclic) {
  SymmetrySpec s;
  s.kind_ = Kind::AbelianTranslation;
  s.n_ = space.dim();
  std::set<std::size_t> seen;
  for (auto c : cyclic) {
    if (c >= s.n_) throw ValidationError("symmetry: cyclic index out of range");
    if (!seen.insert(c).second) throw ValidationError("symmetry: duplicate cyclic coordinate");
    s.periodic_.push_back(space.periodic(c));
  }
  for (std::size_t i = 0; i < s.n_; ++i) {
    if (!seen.count(i)) s.shape_.push_back(i);
  }
  s.cyclic_ = std::move(cyclic);
  s.dim_ = s.cyclic_.size();
  return s;
}

SymmetrySpec SymmetrySpec::algebra(std::size_t dim, std::vector<double> structure_constants) {
  if (dim == 0) throw ValidationError("algebra: dimension must be positive");
  if (structure_constants.size() != dim * dim * dim) {
    throw ValidationError("algebra: expected dim^3 structure constants");
  }
  SymmetrySpec s;
  s.kind_ = Kind::AlgebraOnly;
  s.dim_ = dim;
  s.constants_ = std::move(structure_constants);
  if (s.antisymmetry_defect() > 1e-12) throw ValidationError("algebra: structure constants are not antisymmetric");
  if (s.jacobi_defect() > 1e-12) throw ValidationError("algebra: Jacobi identity fails");
  return s;
}

SymmetrySpec SymmetrySpec::so3() {
  // [e_i, e_j] = eps_ijk e_k.
  std::vector<double> c(27, 0.0);
  auto set = [&](std::size_t k, std::size_t i, std::size_t j, double v) { c[(k * 3 + i) * 3 + j] = v; };
  set(2, 0, 1, 1.0);
  set(2, 1, 0, -1.0);
  set(0, 1, 2, 1.0);
  set(0, 2, 1, -1.0);
  set(1, 2, 0, 1.0);
  set(1, 0, 2, -1.0);
  return algebra(3, std::move(c));
}

double SymmetrySpec::structure_constant(std::size_t k, std::size_t i, std::size_t j) const {
  if (k >= dim_ || i >= dim_ || j >= dim_) throw ValidationError("structure constant index out of range");
  return constants_.empty() ? 0.0 : constants_[(k * dim_ + i) * dim_ + j];
}

bool SymmetrySpec::is_abelian() const {
  return std::all_of(constants_.begin(), constants_.end(), [](double c) { return c == 0.0; });
}

double SymmetrySpec::antisymmetry_defect() const {
  double d = 0.0;
  for (std::size_t k = 0; k < dim_; ++k)
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j)
        d = std::max(d, std::fabs(structure_constant(k, i, j) + structure_constant(k, j, i)));
  return d;
}

double SymmetrySpec::jacobi_defect() const {
  // [[e_i, e_j], e_l] + [[e_j, e_l], e_i] + [[e_l, e_i], e_j] = 0, component r.
  double d = 0.0;
  const std::size_t n = dim_;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < n; ++l)
        for (std::size_t r = 0; r < n; ++r) {
          double sum = 0.0;
          for (std::size_t m = 0; m < n; ++m) {
            sum += structure_constant(m, i, j) * structure_constant(r, m, l) +
                   structure_constant(m, j, l) * structure_constant(r, m, i) +
                   structure_constant(m, l, i) * structure_constant(r, m, j);
          }
          d = std::max(d, std::fabs(sum));
        }
  return d;
}

TangentPoint tangent_lifted_action(const SymmetrySpec& spec, const Vec& g, const TangentPoint& v) {
  require_translation(spec, "group action");
  if (static_cast<std::size_t>(g.size()) != spec.cyclic().size()) {
    throw ValidationError("group element has the wrong dimension");
  }
  TangentPoint out = v;
  for (std::size_t k = 0; k < spec.cyclic().size(); ++k) {
    double& x = out.q[static_cast<Eigen::Index>(spec.cyclic()[k])];
    x += g[static_cast<Eigen::Index>(k)];
    if (spec.periodic(k)) {
      x = std::fmod(x, 2.0 * std::numbers::pi);
      if (x < 0.0) x += 2.0 * std::numbers::pi;
    }
  }
  return out;
}

Vec momentum_map_cotangent(const SymmetrySpec& spec, const CotangentPoint& alpha) {
  require_translation(spec, "momentum map");
  Vec mu(static_cast<Eigen::Index>(spec.cyclic().size()));
  for (std::size_t k = 0; k < spec.cyclic().size(); ++k) {
    mu[static_cast<Eigen::Index>(k)] = alpha.p[static_cast<Eigen::Index>(spec.cyclic()[k])];
  }
  return mu;
}

Vec momentum_map_lagrangian(const SymmetrySpec& spec, const LagrangianSystem& sys, const TangentPoint& v) {
  require_translation(spec, "momentum map");
  const Vec p = sys.jet(v).dqdot;
  Vec mu(static_cast<Eigen::Index>(spec.cyclic().size()));
  for (std::size_t k = 0; k < spec.cyclic().size(); ++k) {
    mu[static_cast<Eigen::Index>(k)] = p[static_cast<Eigen::Index>(spec.cyclic()[k])];
  }
  return mu;
}

Vec momentum_rate(const SymmetrySpec& spec, const LagrangianSystem& sys, const DoubleTangentVector& xi) {
  require_translation(spec, "momentum rate");
  const auto j = sys.jet(xi.base);
  Vec rate(static_cast<Eigen::Index>(spec.cyclic().size()));
  for (std::size_t k = 0; k < spec.cyclic().size(); ++k) {
    const auto c = static_cast<Eigen::Index>(spec.cyclic()[k]);
    rate[static_cast<Eigen::Index>(k)] = j.mixed.row(c).dot(xi.dq) + j.mass.row(c).dot(xi.dqdot);
  }
  return rate;
}

// ---------------------------------------------------------------------------
// Checks

namespace {

CheckResult invariance_impl(const SymmetrySpec& spec, const LagrangianSystem& sys, const RCLSystem* rcl,
                            std::size_t samples, std::uint64_t seed, double tol) {
  require_translation(spec, "invariance check");
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint v = sampler.tangent(sys.space());
    const TangentPoint gv = tangent_lifted_action(spec, random_shift(spec, sampler), v);
    double r = std::fabs(sys.value(gv) - sys.value(v));
    if (rcl) {
      if (rcl->force()) r = std::max(r, inf_norm(rcl->force()->apply(gv) - rcl->force()->apply(v)));
      if (rcl->control()) r = std::max(r, inf_norm(rcl->control()->offset(gv) - rcl->control()->offset(v)));
      if (rcl->law()) r = std::max(r, inf_norm(rcl->law()->apply(gv) - rcl->law()->apply(v)));
    }
    track.observe(r, v.stacked());
  }
  return track.finish("symmetry.invariance",
                      rcl ? "L, F, C and u are G-invariant" : "L is G-invariant", tol, samples, seed);
}

}  // namespace

CheckResult check_invariance(const SymmetrySpec& spec, const LagrangianSystem& sys, std::size_t samples,
                             std::uint64_t seed, double tol) {
  return invariance_impl(spec, sys, nullptr, samples, seed, tol);
}

CheckResult check_invariance(const SymmetrySpec& spec, const RCLSystem& rcl, std::size_t samples,
                             std::uint64_t seed, double tol) {
  return invariance_impl(spec, rcl.lagrangian(), &rcl, samples, seed, tol);
}

CheckResult check_equivariance(const SymmetrySpec& spec, const LagrangianSystem& sys, std::size_t samples,
                               std::uint64_t seed, double tol) {
  require_translation(spec, "equivariance check");
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint v = sampler.tangent(sys.space());
    const TangentPoint gv = tangent_lifted_action(spec, random_shift(spec, sampler), v);
    track.observe(inf_norm(momentum_map_lagrangian(spec, sys, gv) - momentum_map_lagrangian(spec, sys, v)),
                  v.stacked());
  }
  return track.finish("symmetry.equivariance", "J_L(Phi_g v) = J_L(v)", tol, samples, seed);
}

CheckResult check_momentum_paths(const SymmetrySpec& spec, const LagrangianSystem& sys, std::size_t samples,
                                 std::uint64_t seed, double tol) {
  require_translation(spec, "momentum check");
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint v = sampler.tangent(sys.space());
    const Vec a = momentum_map_lagrangian(spec, sys, v);
    const Vec b = momentum_map_cotangent(spec, legendre_transform(sys, v));
    track.observe(inf_norm(a - b), v.stacked());
  }
  return track.finish("symmetry.momentum_paths", "J_L = J o FL", tol, samples, seed);
}

CheckResult check_noether(const SymmetrySpec& spec, const LagrangianSystem& sys, std::size_t samples,
                          std::uint64_t seed, double tol) {
  require_translation(spec, "Noether check");
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint v = sampler.tangent(sys.space());
    track.observe(inf_norm(momentum_rate(spec, sys, euler_lagrange_vector(sys, v))), v.stacked());
  }
  return track.finish("symmetry.noether", "dJ_L(xi_L) = 0", tol, samples, seed);
}

DriftReport check_drift(const LagrangianSystem& sys, const SymmetrySpec* spec, const TangentPoint& v0,
                        double t1, double h, double tol) {
  Monitors mon;
  mon.energy = [&sys](const TangentPoint& v) { return action_energy(sys, v).energy; };
  const bool has_momentum = spec && spec->is_translation() && !spec->cyclic().empty();
  if (has_momentum) mon.momentum = [&sys, spec](const TangentPoint& v) { return momentum_map_lagrangian(*spec, sys, v); };
  const Trajectory traj = integrate(euler_lagrange_field(sys), v0, t1, h, mon, &sys.space());

  DriftReport out;
  out.blew_up = traj.blew_up;
  ResidualTracker e, m;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const Vec state = traj.states[i].stacked();
    e.observe(std::fabs(traj.energy[i] - traj.energy.front()), state);
    if (has_momentum) m.observe(inf_norm(traj.momentum[i] - traj.momentum.front()), state);
  }
  if (traj.blew_up) {
    e.observe(std::numeric_limits<double>::infinity(), v0.stacked());
    m.observe(std::numeric_limits<double>::infinity(), v0.stacked());
  }
  const auto steps = traj.states.size();
  out.energy = e.finish("dynamics.energy_drift", "E_L constant along the flow", tol, steps, 0);
  out.momentum = m.finish("symmetry.momentum_drift", "J_L constant along the flow", tol, steps, 0);
  if (!has_momentum) {
    out.momentum.applicable = false;
    out.momentum.note = "no cyclic coordinates";
  }
  return out;
}

RegularValueCertificate check_regular_value(const SymmetrySpec& spec, const LagrangianSystem& sys,
                                            std::size_t samples, std::uint64_t seed) {
  require_translation(spec, "regular value check");
  RegularValueCertificate cert;
  cert.samples = samples;
  cert.seed = seed;
  cert.min_singular_value = std::numeric_limits<double>::infinity();
  const auto k = static_cast<Eigen::Index>(spec.cyclic().size());
  auto visit = [&](const TangentPoint& v) {
    if (k == 0) return;
    const Mat mass = sys.jet(v).mass;
    Mat rows(k, mass.cols());
    for (Eigen::Index r = 0; r < k; ++r) rows.row(r) = mass.row(static_cast<Eigen::Index>(spec.cyclic()[static_cast<std::size_t>(r)]));
    const double smin = Eigen::JacobiSVD<Mat>(rows).singularValues().minCoeff();
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

double coadjoint_plus_form(const SymmetrySpec& algebra, const Vec& nu, const Vec& xi, const Vec& eta) {
  const std::size_t d = algebra.dim();
  if (static_cast<std::size_t>(nu.size()) != d || static_cast<std::size_t>(xi.size()) != d ||
      static_cast<std::size_t>(eta.size()) != d) {
    throw ValidationError("coadjoint form: vectors must match the algebra dimension");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double bracket_k = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        bracket_k += algebra.structure_constant(k, i, j) * xi[static_cast<Eigen::Index>(i)] *
                     eta[static_cast<Eigen::Index>(j)];
    total += nu[static_cast<Eigen::Index>(k)] * bracket_k;
  }
  return total;
}

}  // namespace rclab
