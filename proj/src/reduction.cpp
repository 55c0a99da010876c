#include "rclab/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rclab/error.hpp"

namespace rclab {

namespace {

template <typename D>
double inf_norm(const Eigen::MatrixBase<D>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

Vec random_shift(const SymmetrySpec& spec, Sampler& sampler) {
  return sampler.uniform_vector(spec.cyclic().size(), -2.0, 2.0);
}

// Difference that ignores whole turns on periodic coordinates.
Vec chart_difference(const ConfigSpace& space, const Vec& a, const Vec& b) {
  Vec d = a - b;
  for (std::size_t i = 0; i < space.dim(); ++i) {
    if (space.periodic(i)) d[idx(i)] = std::remainder(d[idx(i)], 2.0 * std::numbers::pi);
  }
  return d;
}

std::string describe(const Vec& v) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// ReducedSystem

ReducedSystem::ReducedSystem(RCLSystem parent, SymmetrySpec spec, Vec mu, SectionChoice section)
    : parent_(std::move(parent)), spec_(std::move(spec)), mu_(std::move(mu)), section_(std::move(section)) {
  if (!spec_.is_translation()) throw UnsupportedError("reduction needs an abelian translation symmetry");
  if (spec_.config_dim() != parent_.dim()) throw ValidationError("symmetry does not match the system dimension");
  const std::size_t k = spec_.cyclic().size();
  const std::size_t s = spec_.shape().size();
  if (static_cast<std::size_t>(mu_.size()) != k) {
    throw ValidationError("momentum value needs " + std::to_string(k) + " components");
  }
  if (!mu_.allFinite()) throw ValidationError("momentum value must be finite");
  if (s == 0) throw ValidationError("reduction leaves no shape coordinates");
  if (section_.offsets.size() == 0) section_.offsets = Vec::Zero(idx(k));
  if (section_.shear.size() == 0) section_.shear = Mat::Zero(idx(k), idx(s));
  if (static_cast<std::size_t>(section_.offsets.size()) != k ||
      static_cast<std::size_t>(section_.shear.rows()) != k || static_cast<std::size_t>(section_.shear.cols()) != s) {
    throw ValidationError("section offsets or shear have the wrong shape");
  }

  const ConfigSpace& full = parent_.space();
  std::vector<std::string> names;
  std::vector<bool> periodic;
  std::vector<Interval> qb, vb;
  for (auto i : spec_.shape()) {
    names.push_back(full.names()[i]);
    periodic.push_back(full.periodic(i));
    qb.push_back(full.q_box()[i]);
    vb.push_back(full.qdot_box()[i]);
  }
  space_ = ConfigSpace(std::move(names), std::move(periodic), std::move(qb), std::move(vb));

  if (parent_.control()) {
    ReducedControl rc;
    const ControlSubset& c = *parent_.control();
    rc.has_offset = c.offset_map().has_value();
    for (std::size_t a = 0; a < c.actuated().size(); ++a) {
      const std::size_t d = c.actuated()[a];
      const auto it = std::find(spec_.shape().begin(), spec_.shape().end(), d);
      if (it == spec_.shape().end()) {
        notes_.push_back("actuated cyclic direction " + full.names()[d] + " dropped from the reduced control subset");
        continue;
      }
      rc.actuated.push_back(static_cast<std::size_t>(it - spec_.shape().begin()));
      rc.bounds.push_back(c.bounds()[a]);
    }
    control_ = std::move(rc);
  }
}

ReducedSystem ReducedSystem::with_section(SectionChoice section) const {
  ReducedSystem copy(parent_, spec_, mu_, std::move(section));
  copy.certificates_ = certificates_;
  return copy;
}

Vec ReducedSystem::shape_part(const Vec& full) const {
  Vec out(idx(dim()));
  for (std::size_t i = 0; i < dim(); ++i) out[idx(i)] = full[idx(spec_.shape()[i])];
  return out;
}

Vec ReducedSystem::cyclic_velocities(const TangentPoint& x) const {
  const std::size_t n = parent_.dim();
  const auto& cyc = spec_.cyclic();
  const auto k = idx(cyc.size());
  TangentPoint z{Vec::Zero(idx(n)), Vec::Zero(idx(n))};
  for (std::size_t i = 0; i < dim(); ++i) {
    z.q[idx(spec_.shape()[i])] = x.q[idx(i)];
    z.qdot[idx(spec_.shape()[i])] = x.qdot[idx(i)];
  }
  const Vec qc = section_.offsets + section_.shear * x.q;
  for (Eigen::Index c = 0; c < k; ++c) z.q[idx(cyc[static_cast<std::size_t>(c)])] = qc[c];
  if (k == 0) return Vec(0);

  const Tolerances& tol = parent_lagrangian().tolerances();
  const double target = tol.newton_tol * (1.0 + inf_norm(mu_));
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= tol.newton_max_iter; ++it) {
    const auto j = parent_lagrangian().jet(z);
    Vec r(k);
    Mat mcc(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      const auto ca = idx(cyc[static_cast<std::size_t>(a)]);
      r[a] = j.dqdot[ca] - mu_[a];
      for (Eigen::Index b = 0; b < k; ++b) mcc(a, b) = j.mass(ca, idx(cyc[static_cast<std::size_t>(b)]));
    }
    residual = inf_norm(r);
    if (residual <= target) break;
    if (it == tol.newton_max_iter) throw ConvergenceError("cyclic velocity solve did not converge", residual);
    Eigen::FullPivLU<Mat> lu(mcc);
    if (!lu.isInvertible()) throw SingularError("cyclic block of the velocity Hessian is singular");
    const Vec step = lu.solve(r);
    for (Eigen::Index a = 0; a < k; ++a) z.qdot[idx(cyc[static_cast<std::size_t>(a)])] -= step[a];
  }
  Vec out(k);
  for (Eigen::Index a = 0; a < k; ++a) out[a] = z.qdot[idx(cyc[static_cast<std::size_t>(a)])];
  return out;
}

TangentPoint ReducedSystem::section(const TangentPoint& x) const {
  const std::size_t n = parent_.dim();
  const auto& cyc = spec_.cyclic();
  TangentPoint z{Vec::Zero(idx(n)), Vec::Zero(idx(n))};
  for (std::size_t i = 0; i < dim(); ++i) {
    z.q[idx(spec_.shape()[i])] = x.q[idx(i)];
    z.qdot[idx(spec_.shape()[i])] = x.qdot[idx(i)];
  }
  const Vec qc = section_.offsets + section_.shear * x.q;
  const Vec vc = cyclic_velocities(x);
  for (std::size_t c = 0; c < cyc.size(); ++c) {
    z.q[idx(cyc[c])] = qc[idx(c)];
    z.qdot[idx(cyc[c])] = vc[idx(c)];
  }
  return z;
}

Mat ReducedSystem::section_jacobian(const TangentPoint& x) const {
  const auto n = idx(parent_.dim());
  const auto s = idx(dim());
  const auto& cyc = spec_.cyclic();
  const auto k = idx(cyc.size());
  Mat T = Mat::Zero(2 * n, 2 * s);
  for (Eigen::Index i = 0; i < s; ++i) {
    const auto si = idx(spec_.shape()[static_cast<std::size_t>(i)]);
    T(si, i) = 1.0;
    T(n + si, s + i) = 1.0;
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    T.row(idx(cyc[static_cast<std::size_t>(c)])).head(s) = section_.shear.row(c);
  }
  if (k == 0) return T;

  // dL/dqdot_c(q(x), qdot(x)) = mu differentiated in x.
  const auto j = parent_lagrangian().jet(section(x));
  Mat mcc(k, k), rhs(k, 2 * s);
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto ca = idx(cyc[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < k; ++b) mcc(a, b) = j.mass(ca, idx(cyc[static_cast<std::size_t>(b)]));
    rhs.row(a) = j.mixed.row(ca) * T.topRows(n) + j.mass.row(ca) * T.bottomRows(n);
  }
  Eigen::FullPivLU<Mat> lu(mcc);
  if (!lu.isInvertible()) throw SingularError("cyclic block of the velocity Hessian is singular");
  const Mat X = -lu.solve(rhs);
  for (Eigen::Index c = 0; c < k; ++c) T.row(n + idx(cyc[static_cast<std::size_t>(c)])) = X.row(c);
  return T;
}

TangentPoint ReducedSystem::project(const TangentPoint& z) const {
  return TangentPoint{shape_part(z.q), shape_part(z.qdot)};
}

Mat ReducedSystem::projection_matrix() const {
  const auto n = idx(parent_.dim());
  const auto s = idx(dim());
  Mat P = Mat::Zero(2 * s, 2 * n);
  for (Eigen::Index i = 0; i < s; ++i) {
    const auto si = idx(spec_.shape()[static_cast<std::size_t>(i)]);
    P(i, si) = 1.0;
    P(s + i, n + si) = 1.0;
  }
  return P;
}

TangentPoint ReducedSystem::level_set_point(const TangentPoint& x, const Vec& g) const {
  return tangent_lifted_action(spec_, g, section(x));
}

double ReducedSystem::lagrangian(const TangentPoint& x) const { return parent_lagrangian().value(section(x)); }

double ReducedSystem::action(const TangentPoint& x) const {
  return action_energy(parent_lagrangian(), section(x)).action;
}

double ReducedSystem::energy(const TangentPoint& x) const {
  return action_energy(parent_lagrangian(), section(x)).energy;
}

Vec ReducedSystem::energy_gradient(const TangentPoint& x) const {
  const TangentPoint z = section(x);
  return section_jacobian(x).transpose() * rclab::energy_gradient(parent_lagrangian().jet(z), z);
}

TwoFormAtPoint ReducedSystem::two_form(const TangentPoint& x) const {
  const TangentPoint z = section(x);
  TwoFormAtPoint form =
      pullback_form(section_jacobian(x), lagrangian_two_form(parent_lagrangian(), z), x.stacked());
  if (smallest_singular_value(form.matrix) < parent_lagrangian().tolerances().hyperreg_min) {
    throw SingularError("reduced two-form is degenerate at " + describe(x.stacked()));
  }
  form.symplectic = true;
  return form;
}

Mat ReducedSystem::fiber_jacobian(const FiberMap& map, const TangentPoint& x) const {
  const auto j = map.jet(section(x));
  const auto n = idx(parent_.dim());
  Mat full(n, 2 * n);
  full << j.dq, j.dqdot;
  Mat rows(idx(dim()), 2 * n);
  for (std::size_t i = 0; i < dim(); ++i) rows.row(idx(i)) = full.row(idx(spec_.shape()[i]));
  return rows * section_jacobian(x);
}

std::optional<Vec> ReducedSystem::force(const TangentPoint& x) const {
  if (!parent_.force()) return std::nullopt;
  return shape_part(parent_.force()->apply(section(x)));
}

std::optional<Vec> ReducedSystem::law(const TangentPoint& x) const {
  if (!parent_.law()) return std::nullopt;
  return shape_part(parent_.law()->apply(section(x)));
}

std::optional<Vec> ReducedSystem::control_offset(const TangentPoint& x) const {
  if (!parent_.control()) return std::nullopt;
  return shape_part(parent_.control()->offset(section(x)));
}

Mat ReducedSystem::force_jacobian(const TangentPoint& x) const {
  if (!parent_.force()) return Mat::Zero(idx(dim()), 2 * idx(dim()));
  return fiber_jacobian(*parent_.force(), x);
}

Mat ReducedSystem::law_jacobian(const TangentPoint& x) const {
  if (!parent_.law()) return Mat::Zero(idx(dim()), 2 * idx(dim()));
  return fiber_jacobian(*parent_.law(), x);
}

Mat ReducedSystem::offset_jacobian(const TangentPoint& x) const {
  if (!parent_.control() || !parent_.control()->offset_map()) return Mat::Zero(idx(dim()), 2 * idx(dim()));
  return fiber_jacobian(*parent_.control()->offset_map(), x);
}

DoubleTangentVector ReducedSystem::euler_lagrange_vector(const TangentPoint& x) const {
  const auto s = idx(dim());
  const Mat omega = two_form(x).matrix;
  const Vec grad = energy_gradient(x);
  const Mat A = omega.topLeftCorner(s, s);
  const Mat B = omega.topRightCorner(s, s);
  Eigen::FullPivLU<Mat> lu(B);
  if (!lu.isInvertible()) throw SingularError("reduced two-form is degenerate; no reduced field");
  return DoubleTangentVector{x, x.qdot, lu.solve(-grad.head(s) - A * x.qdot)};
}

DoubleTangentVector ReducedSystem::euler_lagrange_vector_dense(const TangentPoint& x) const {
  return DoubleTangentVector::from_stacked(x, solve_symplectic(two_form(x).matrix, energy_gradient(x)));
}

DoubleTangentVector ReducedSystem::field_vector(const TangentPoint& x) const {
  DoubleTangentVector xi = euler_lagrange_vector(x);
  const Vec base = xi.stacked();
  Vec extra = Vec::Zero(xi.dqdot.size());
  if (parent_.force()) extra += force_jacobian(x) * base;
  if (parent_.law()) extra += law_jacobian(x) * base;
  xi.dqdot += extra;
  return xi;
}

VectorFieldOnTQ ReducedSystem::field() const {
  ReducedSystem self = *this;
  return VectorFieldOnTQ{[self](const TangentPoint& x) { return self.field_vector(x); }, FieldKind::ReducedLift};
}

CotangentPoint ReducedSystem::legendre(const TangentPoint& x) const {
  return CotangentPoint{x.q, shape_part(parent_lagrangian().jet(section(x)).dqdot)};
}

Mat ReducedSystem::legendre_jacobian(const TangentPoint& x) const {
  const auto n = idx(parent_.dim());
  const auto s = idx(dim());
  const Mat jfl = rclab::legendre_jacobian(parent_lagrangian().jet(section(x)));
  Mat rows(s, 2 * n);
  for (Eigen::Index i = 0; i < s; ++i) rows.row(i) = jfl.row(n + idx(spec_.shape()[static_cast<std::size_t>(i)]));
  Mat J = Mat::Zero(2 * s, 2 * s);
  J.topLeftCorner(s, s) = Mat::Identity(s, s);
  J.bottomRows(s) = rows * section_jacobian(x);
  return J;
}

TangentPoint ReducedSystem::inverse_legendre(const CotangentPoint& alpha, const std::optional<Vec>& guess) const {
  const auto s = idx(dim());
  const Tolerances& tol = parent_lagrangian().tolerances();
  TangentPoint x{alpha.q, guess ? *guess : Vec(Vec::Zero(s))};
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= tol.newton_max_iter; ++it) {
    const Vec r = legendre(x).p - alpha.p;
    residual = inf_norm(r);
    if (residual <= tol.newton_tol * (1.0 + inf_norm(alpha.p))) return x;
    if (it == tol.newton_max_iter) break;
    Eigen::FullPivLU<Mat> lu(Mat(legendre_jacobian(x).bottomRightCorner(s, s)));
    if (!lu.isInvertible()) throw SingularError("reduced Legendre map is singular");
    x.qdot -= lu.solve(r);
  }
  throw ConvergenceError("reduced inverse Legendre did not converge", residual);
}

// ---------------------------------------------------------------------------
// Reduction

std::optional<Vec> control_level_member(const RCLSystem& rcl, const SymmetrySpec& spec, const Vec& mu,
                                        const TangentPoint& z, const std::optional<Vec>& start, double tol) {
  if (!rcl.control()) return std::nullopt;
  const ControlSubset& c = *rcl.control();
  const Vec offset = c.offset(z);
  const auto& D = c.actuated();
  const auto& cyc = spec.cyclic();
  Vec a(idx(D.size()));
  const Vec w0 = start ? *start : offset;
  for (std::size_t d = 0; d < D.size(); ++d) a[idx(d)] = w0[idx(D[d])] - offset[idx(D[d])];

  auto assemble = [&](const Vec& coeff) {
    Vec w = offset;
    for (std::size_t d = 0; d < D.size(); ++d) w[idx(D[d])] += coeff[idx(d)];
    return w;
  };
  const double target = tol * (1.0 + inf_norm(mu));
  for (int it = 0; it <= 50; ++it) {
    const Vec w = assemble(a);
    const auto j = rcl.lagrangian().jet(TangentPoint{z.q, w});
    Vec r(idx(cyc.size()));
    Mat J(idx(cyc.size()), idx(D.size()));
    for (std::size_t k = 0; k < cyc.size(); ++k) {
      r[idx(k)] = j.dqdot[idx(cyc[k])] - mu[idx(k)];
      for (std::size_t d = 0; d < D.size(); ++d) J(idx(k), idx(d)) = j.mass(idx(cyc[k]), idx(D[d]));
    }
    if (inf_norm(r) <= target) {
      return c.membership_defect(z, w) <= 1e-12 * (1.0 + inf_norm(w)) ? std::optional<Vec>(w) : std::nullopt;
    }
    const Vec step = J.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(r);
    if (!step.allFinite() || inf_norm(step) == 0.0) return std::nullopt;
    a -= step;
  }
  return std::nullopt;
}

ReducedSystem point_reduce(const RCLSystem& parent, const SymmetrySpec& spec, const Vec& mu,
                           const ReductionOptions& options, SectionChoice section) {
  if (!spec.is_translation()) throw UnsupportedError("point reduction needs an abelian translation symmetry");
  const LagrangianSystem& sys = parent.lagrangian();

  CheckResult invariance = check_invariance(spec, parent, options.samples, options.seed, 1e-10);
  invariance.id = "reduction.invariance";
  if (!invariance.pass) {
    throw IrreducibleError("parent system is not invariant under the symmetry (discrepancy " +
                           std::to_string(invariance.max_residual) + " at " + describe(*invariance.witness) + ")");
  }
  const auto regular = check_regular_value(spec, sys, sys.tolerances().hyperreg_samples, options.seed);
  if (!regular.pass) {
    throw IrreducibleError("mu is not a regular value of J_L (singular value " +
                           std::to_string(regular.min_singular_value) + " at " +
                           describe(regular.witness.stacked()) + ")");
  }

  ReducedSystem red(parent, spec, mu, std::move(section));

  // The controlled flow must stay on the level set: dJ_L vanishes on the
  // force and law lifts, and C meets the level set over every sampled point.
  ResidualTracker force_track, law_track, control_track;
  Sampler sampler(options.seed);
  for (std::size_t s = 0; s < options.samples; ++s) {
    const TangentPoint x = sampler.tangent(red.space());
    TangentPoint z;
    try {
      z = red.level_set_point(x, random_shift(spec, sampler));
    } catch (const Error& e) {
      throw IrreducibleError(std::string("level set J_L^{-1}(mu) is not reachable over the shape box: ") + e.what());
    }
    const DoubleTangentVector xi = euler_lagrange_vector(sys, z);
    if (parent.force()) force_track.observe(inf_norm(momentum_rate(spec, sys, vlift_of_fiber_map(*parent.force(), xi))), z.stacked());
    if (parent.law()) law_track.observe(inf_norm(momentum_rate(spec, sys, vlift_of_fiber_map(*parent.law(), xi))), z.stacked());
    if (parent.control()) {
      control_track.observe(control_level_member(parent, spec, mu, z) ? 0.0 : 1.0, z.stacked());
    }
  }
  const auto n = options.samples;
  CheckResult force_cert = force_track.finish("reduction.force_level_set", "F^L preserves J_L^{-1}(mu)", options.tol, n, options.seed);
  CheckResult law_cert = law_track.finish("reduction.law_level_set", "u^L preserves J_L^{-1}(mu)", options.tol, n, options.seed);
  CheckResult control_cert = control_track.finish("reduction.control_level_set", "C^L meets J_L^{-1}(mu)", 0.5, n, options.seed);
  if (!force_cert.pass) {
    throw IrreducibleError("F^L does not preserve J_L^{-1}(mu): |dJ_L(vlift(F) xi_L)| = " +
                           std::to_string(force_cert.max_residual) + " at " + describe(*force_cert.witness));
  }
  if (!law_cert.pass) {
    throw IrreducibleError("u^L does not preserve J_L^{-1}(mu): |dJ_L(vlift(u) xi_L)| = " +
                           std::to_string(law_cert.max_residual) + " at " + describe(*law_cert.witness));
  }
  if (!control_cert.pass) {
    throw IrreducibleError("C^L does not meet J_L^{-1}(mu) over " + describe(*control_cert.witness));
  }

  CheckResult reg;
  reg.id = "reduction.regular_value";
  reg.identity = "mu is a regular value of J_L";
  reg.pass = true;
  reg.samples = regular.samples;
  reg.seed = regular.seed;
  if (!spec.cyclic().empty()) {
    reg.witness = regular.witness.stacked();
    std::ostringstream os;
    os.precision(6);
    os << "smallest singular value of dJ_L/dqdot " << regular.min_singular_value;
    reg.note = os.str();
  }
  auto absent = [](CheckResult& c, const char* what) {
    c.applicable = false;
    c.note = std::string("no ") + what;
  };
  if (!parent.force()) absent(force_cert, "force");
  if (!parent.law()) absent(law_cert, "law");
  if (!parent.control()) absent(control_cert, "control subset");
  for (CheckResult* c : {&invariance, &reg, &force_cert, &law_cert, &control_cert}) red.certificates().push_back(*c);
  return red;
}

ReducedSystem point_reduce(const LagrangianSystem& parent, const SymmetrySpec& spec, const Vec& mu,
                           const ReductionOptions& options, SectionChoice section) {
  return point_reduce(RCLSystem(parent), spec, mu, options, std::move(section));
}

namespace {

CheckResult orbit_correction(const SymmetrySpec& spec, const Vec& mu, std::size_t samples, std::uint64_t seed) {
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec a = sampler.uniform_vector(spec.dim(), -1.0, 1.0);
    const Vec b = sampler.uniform_vector(spec.dim(), -1.0, 1.0);
    track.observe(std::fabs(coadjoint_plus_form(spec, mu, a, b)), mu);
  }
  CheckResult r = track.finish("reduction.orbit_correction", "coadjoint-orbit correction term vanishes", 0.0,
                               samples, seed);
  if (!r.witness) r.witness = mu;
  return r;
}

}  // namespace

OrbitReduction orbit_reduce(const RCLSystem& parent, const SymmetrySpec& spec, const Vec& mu,
                            const ReductionOptions& options) {
  if (!spec.is_translation() || !spec.is_abelian()) throw UnsupportedError("non-abelian orbit reduction unsupported");
  ReducedSystem red = point_reduce(parent, spec, mu, options);
  CheckResult corr = orbit_correction(spec, mu, options.samples, options.seed);
  red.certificates().push_back(corr);
  return OrbitReduction{std::move(red), std::move(corr)};
}

// ---------------------------------------------------------------------------
// Certification

CheckResult check_commutation(const ReducedSystem& red, std::size_t samples, std::uint64_t seed, double tol) {
  Sampler sampler(seed);
  ResidualTracker track;
  const Mat P = red.projection_matrix();
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint x = sampler.tangent(red.space());
    const TangentPoint z = red.level_set_point(x, random_shift(red.spec(), sampler));
    const Vec up = P * controlled_vector(red.parent(), z).stacked();
    const Vec down = red.field_vector(red.project(z)).stacked();
    track.observe(inf_norm(up - down), z.stacked());
  }
  return track.finish("reduction.commutation", "xi_red o tau_mu = T tau_mu o xi o j_mu", tol, samples, seed);
}

CheckResult check_flow_commutation(const ReducedSystem& red, const TangentPoint& x0, double t1, double h,
                                   double tol) {
  const Trajectory up = integrate(controlled_field(red.parent()), red.section(x0), t1, h, {}, &red.parent().space());
  const Trajectory down = integrate(red.field(), x0, t1, h, {}, &red.space());
  ResidualTracker track;
  const std::size_t m = std::min(up.states.size(), down.states.size());
  for (std::size_t i = 0; i < m; ++i) {
    const TangentPoint p = red.project(up.states[i]);
    const Vec dq = chart_difference(red.space(), p.q, down.states[i].q);
    const Vec dv = p.qdot - down.states[i].qdot;
    track.observe(std::max(inf_norm(dq), inf_norm(dv)), down.states[i].stacked());
  }
  if (up.blew_up || down.blew_up) track.observe(std::numeric_limits<double>::infinity(), x0.stacked());
  CheckResult r = track.finish("reduction.flow_commutation", "tau_mu(flow upstairs) = flow downstairs", tol, m, 0);
  if (up.blew_up || down.blew_up) r.note = "integration blew up";
  return r;
}

CheckResult check_section_independence(const ReducedSystem& red, std::size_t samples, std::uint64_t seed,
                                       double tol) {
  const auto k = idx(red.spec().cyclic().size());
  const auto s = idx(red.dim());
  SectionChoice other{Vec::Constant(k, 0.7), Mat::Constant(k, s, 0.3)};
  const ReducedSystem alt = red.with_section(other);
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t i = 0; i < samples; ++i) {
    const TangentPoint x = sampler.tangent(red.space());
    double r = inf_norm(Mat(red.two_form(x).matrix - alt.two_form(x).matrix));
    r = std::max(r, std::fabs(red.lagrangian(x) - alt.lagrangian(x)));
    r = std::max(r, std::fabs(red.energy(x) - alt.energy(x)));
    r = std::max(r, inf_norm(red.field_vector(x).stacked() - alt.field_vector(x).stacked()));
    track.observe(r, x.stacked());
  }
  CheckResult out = track.finish("reduction.section_independence",
                                 "omega_mu, l_mu, E_mu and xi_red do not depend on the section", tol, samples, seed);
  out.note = "alternative section: cyclic offsets 0.7, shear 0.3";
  return out;
}

CheckResult check_reduced_energy(const ReducedSystem& red, std::size_t samples, std::uint64_t seed, double tol) {
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t i = 0; i < samples; ++i) {
    const TangentPoint x = sampler.tangent(red.space());
    track.observe(std::fabs(red.energy_gradient(x).dot(red.euler_lagrange_vector(x).stacked())), x.stacked());
  }
  return track.finish("reduction.energy_conservation", "dE_mu(xi_l_mu) = 0", tol, samples, seed);
}

std::vector<CheckResult> check_reduced_legendre(const ReducedSystem& red, std::size_t samples, std::uint64_t seed,
                                                double tol) {
  Sampler sampler(seed);
  ResidualTracker track;
  const Mat omega0 = canonical_matrix(red.dim());
  for (std::size_t i = 0; i < samples; ++i) {
    const TangentPoint x = sampler.tangent(red.space());
    const Mat J = red.legendre_jacobian(x);
    track.observe(inf_norm(Mat(J.transpose() * omega0 * J - red.two_form(x).matrix)), x.stacked());
  }
  CheckResult point = track.finish("reduction.reduced_legendre", "(FL)_mu^* omega_mu = omega^L_mu", tol, samples, seed);

  CheckResult corr = orbit_correction(red.spec(), red.mu(), samples, seed);
  CheckResult orbit = point;
  orbit.id = "reduction.reduced_legendre_orbit";
  orbit.identity = "(FL)_[mu]^* omega_[mu] = omega^L_[mu] with zero orbit correction";
  orbit.max_residual = std::max(point.max_residual, corr.max_residual);
  orbit.pass = point.pass && corr.pass;
  orbit.note = "orbit correction " + std::to_string(corr.max_residual);
  return {point, orbit};
}

CheckResult check_reduced_round_trip(const ReducedSystem& red, std::size_t samples, std::uint64_t seed, double tol) {
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t i = 0; i < samples; ++i) {
    const TangentPoint x = sampler.tangent(red.space());
    const TangentPoint back = red.inverse_legendre(red.legendre(x));
    track.observe(inf_norm(Vec(back.stacked() - x.stacked())), x.stacked());
  }
  return track.finish("reduction.legendre_round_trip", "(FL)_mu^-1 o (FL)_mu = id", tol, samples, seed);
}

CheckResult check_reduced_second_order(const ReducedSystem& red, std::size_t samples, std::uint64_t seed) {
  return check_second_order(red.field(), red.space(), samples, seed, 0.0);
}

CheckResult check_reduced_dual_derivation(const ReducedSystem& red, std::size_t samples, std::uint64_t seed,
                                          double tol) {
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t i = 0; i < samples; ++i) {
    const TangentPoint x = sampler.tangent(red.space());
    track.observe(inf_norm(Vec(red.euler_lagrange_vector(x).stacked() - red.euler_lagrange_vector_dense(x).stacked())),
                  x.stacked());
  }
  return track.finish("reduction.dual_derivation", "block and dense solves of i_xi omega_mu = dE_mu agree", tol,
                      samples, seed);
}

namespace {

// h_mu(q_s, p_s) = p_s . qdot_s + mu . qdot_c - L(sigma(x)) with x = (FL)_mu^-1;
// stationary in the Newton error of x.
double reduced_hamiltonian(const ReducedSystem& red, const CotangentPoint& alpha, const Vec& guess) {
  const TangentPoint x = red.inverse_legendre(alpha, guess);
  return alpha.p.dot(x.qdot) + red.mu().dot(red.cyclic_velocities(x)) - red.lagrangian(x);
}

}  // namespace

CheckResult check_reduced_fl_related(const ReducedSystem& red, std::size_t samples, std::uint64_t seed, double tol) {
  constexpr double kStep = 1e-6;
  Sampler sampler(seed);
  ResidualTracker track;
  for (std::size_t i = 0; i < samples; ++i) {
    const TangentPoint x = sampler.tangent(red.space());
    const Vec lhs = red.legendre_jacobian(x) * red.euler_lagrange_vector(x).stacked();
    const Vec zeta = red.legendre(x).stacked();
    Vec grad(zeta.size());
    for (Eigen::Index c = 0; c < zeta.size(); ++c) {
      Vec zp = zeta, zm = zeta;
      zp[c] += kStep;
      zm[c] -= kStep;
      grad[c] = (reduced_hamiltonian(red, CotangentPoint::from_stacked(zp), x.qdot) -
                 reduced_hamiltonian(red, CotangentPoint::from_stacked(zm), x.qdot)) /
                (2.0 * kStep);
    }
    const Vec rhs = solve_symplectic(canonical_matrix(red.dim()), grad);
    track.observe(inf_norm(Vec(lhs - rhs)), x.stacked());
  }
  return track.finish("reduction.fl_related", "T(FL)_mu xi_l_mu = X_h_mu o (FL)_mu", tol, samples, seed);
}

}  // namespace rclab
