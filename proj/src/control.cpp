#include "rclab/control.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rclab/error.hpp"

namespace rclab {

namespace {

std::span<const double> as_span(const Vec& z) { return {z.data(), static_cast<std::size_t>(z.size())}; }

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

// ---------------------------------------------------------------------------
// FiberMap

FiberMap::FiberMap(const LagrangianSystem& sys, const std::vector<std::string>& components)
    : params_(sys.params().begin(), sys.params().end()) {
  if (components.size() != sys.dim()) {
    throw ValidationError("fiber map needs " + std::to_string(sys.dim()) + " components, got " +
                          std::to_string(components.size()));
  }
  components_.reserve(components.size());
  for (const auto& c : components) components_.push_back(sys.parse(c));
}

Vec FiberMap::apply(const TangentPoint& v) const {
  const Vec z = v.stacked();
  Vec out(static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < dim(); ++i) {
    out[static_cast<Eigen::Index>(i)] = expr::evaluate(components_[i], as_span(z), params_);
  }
  return out;
}

FiberMap::Jet FiberMap::jet(const TangentPoint& v) const {
  const Vec z = v.stacked();
  const auto n = static_cast<Eigen::Index>(dim());
  Jet j{Vec(n), Mat(n, n), Mat(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto d = expr::eval2(components_[static_cast<std::size_t>(i)], as_span(z), params_);
    j.value[i] = d.value;
    j.dq.row(i) = d.gradient.head(n).transpose();
    j.dqdot.row(i) = d.gradient.tail(n).transpose();
  }
  return j;
}

std::vector<std::string> FiberMap::text(const expr::SymbolTable& table) const {
  std::vector<std::string> out;
  for (const auto& c : components_) out.push_back(expr::to_string(c, table));
  return out;
}

// ---------------------------------------------------------------------------
// ControlSubset

ControlSubset::ControlSubset(const LagrangianSystem& sys, std::vector<std::size_t> actuated,
                             const std::optional<std::vector<std::string>>& offset,
                             std::vector<Interval> bounds)
    : n_(sys.dim()), actuated_(std::move(actuated)), bounds_(std::move(bounds)) {
  if (actuated_.empty()) throw ValidationError("control subset: actuated set must be nonempty");
  std::set<std::size_t> seen;
  for (auto d : actuated_) {
    if (d >= n_) throw ValidationError("control subset: actuated index out of range");
    if (!seen.insert(d).second) throw ValidationError("control subset: duplicate actuated index");
  }
  if (bounds_.empty()) bounds_.assign(actuated_.size(), Interval{-kUnbounded, kUnbounded});
  if (bounds_.size() != actuated_.size()) {
    throw ValidationError("control subset: need one bound per actuated direction");
  }
  for (const auto& b : bounds_) {
    if (!(b.lower <= b.upper)) throw ValidationError("control subset: bound with lower > upper");
  }
  if (offset) offset_ = FiberMap(sys, *offset);
}

bool ControlSubset::is_actuated(std::size_t i) const {
  return std::find(actuated_.begin(), actuated_.end(), i) != actuated_.end();
}

Vec ControlSubset::offset(const TangentPoint& v) const {
  return offset_ ? offset_->apply(v) : Vec(Vec::Zero(static_cast<Eigen::Index>(n_)));
}

double ControlSubset::membership_defect(const TangentPoint& v, const Vec& w) const {
  const Vec d = w - offset(v);
  double defect = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double di = d[static_cast<Eigen::Index>(i)];
    const auto it = std::find(actuated_.begin(), actuated_.end(), i);
    if (it == actuated_.end()) {
      defect = std::max(defect, std::fabs(di));
    } else {
      const Interval& b = bounds_[static_cast<std::size_t>(it - actuated_.begin())];
      defect = std::max({defect, b.lower - di, di - b.upper});
    }
  }
  return std::isnan(w.sum()) ? std::numeric_limits<double>::quiet_NaN() : defect;
}

Vec ControlSubset::sample_member(const TangentPoint& v, Sampler& sampler) const {
  Vec w = offset(v);
  for (std::size_t k = 0; k < actuated_.size(); ++k) {
    const Interval& b = bounds_[k];
    double lo = std::max(b.lower, -1.0);
    double hi = std::min(b.upper, 1.0);
    if (lo > hi) {  // bounds lie entirely outside [-1, 1]
      lo = std::isfinite(b.lower) ? b.lower : b.upper - 2.0;
      hi = std::isfinite(b.upper) ? b.upper : b.lower + 2.0;
    }
    w[static_cast<Eigen::Index>(actuated_[k])] += sampler.uniform(lo, hi);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Laws and RCL systems

LawCertificate certify_law(const ControlSubset& control, const FiberMap& law, const ConfigSpace& space,
                           std::size_t samples, std::uint64_t seed, double tol) {
  LawCertificate cert;
  cert.samples = samples;
  cert.seed = seed;
  auto visit = [&](const TangentPoint& v) {
    const Vec u = law.apply(v);
    const double defect = control.membership_defect(v, u) / (1.0 + inf_norm(u));
    if (std::isnan(defect) || defect > cert.max_defect) {
      cert.max_defect = std::isnan(defect) ? std::numeric_limits<double>::infinity() : defect;
      cert.witness = v;
    }
  };
  for (const auto& a : anchor_points(space)) visit(a);
  Sampler sampler(seed);
  for (std::size_t s = 0; s < samples; ++s) visit(sampler.tangent(space));
  cert.pass = cert.max_defect <= tol;
  return cert;
}

RCLSystem::RCLSystem(LagrangianSystem sys, std::optional<FiberMap> force,
                     std::optional<ControlSubset> control, std::optional<FiberMap> law,
                     std::size_t law_samples, std::uint64_t seed)
    : sys_(std::move(sys)), force_(std::move(force)), control_(std::move(control)), law_(std::move(law)) {
  if (force_ && force_->dim() != sys_.dim()) throw ValidationError("force map has the wrong dimension");
  if (law_) {
    if (law_->dim() != sys_.dim()) throw ValidationError("control law has the wrong dimension");
    if (!control_) throw ValidationError("control law declared without a control subset");
    certificate_ = certify_law(*control_, *law_, sys_.space(), law_samples, seed);
    if (!certificate_->pass) {
      throw ValidationError("control law leaves the control subset (defect " +
                            std::to_string(certificate_->max_defect) + ")");
    }
  }
}

RCLSystem RCLSystem::with_law(std::optional<FiberMap> law) const {
  RCLSystem copy = *this;
  copy.law_ = std::move(law);
  copy.certificate_.reset();
  if (copy.law_) {
    if (!copy.control_) throw ValidationError("control law declared without a control subset");
    copy.certificate_ = certify_law(*copy.control_, *copy.law_, copy.space(), 512, 0);
    if (!copy.certificate_->pass) throw ValidationError("control law leaves the control subset");
  }
  return copy;
}

// ---------------------------------------------------------------------------
// Vertical lifts and the controlled field

DoubleTangentVector vertical_lift(const TangentPoint& at, const Vec& w) {
  return DoubleTangentVector{at, Vec::Zero(w.size()), w};
}

DoubleTangentVector vlift_of_fiber_map(const FiberMap& map, const DoubleTangentVector& xi) {
  const auto j = map.jet(xi.base);
  return vertical_lift(xi.base, j.dq * xi.dq + j.dqdot * xi.dqdot);
}

DoubleTangentVector vlift_of_fiber_map(const FiberMap& map, const VectorFieldOnTQ& field,
                                       const TangentPoint& at) {
  return vlift_of_fiber_map(map, field(at));
}

DoubleTangentVector controlled_vector(const RCLSystem& rcl, const TangentPoint& v) {
  DoubleTangentVector xi = euler_lagrange_vector(rcl.lagrangian(), v);
  Vec extra = Vec::Zero(xi.dqdot.size());
  if (rcl.force()) extra += vlift_of_fiber_map(*rcl.force(), xi).dqdot;
  if (rcl.law()) extra += vlift_of_fiber_map(*rcl.law(), xi).dqdot;
  xi.dqdot += extra;
  return xi;
}

VectorFieldOnTQ controlled_field(const RCLSystem& rcl) {
  return VectorFieldOnTQ{[rcl](const TangentPoint& v) { return controlled_vector(rcl, v); },
                         FieldKind::Controlled};
}

// ---------------------------------------------------------------------------
// Equivalence

namespace {

void require_compatible(const RCLSystem& a, const RCLSystem& b, const PointMap& map) {
  if (!map.has_inverse()) throw ValidationError("equivalence check needs a map with a declared inverse");
  if (map.source().dim() != a.dim() || map.target().dim() != b.dim()) {
    throw ValidationError("point map dimensions do not match the systems");
  }
}

// Transports control-subset members along T phi and tests membership on the other side.
void subset_direction(const ControlSubset& from, const ControlSubset& to, const PointMap& phi,
                      const ConfigSpace& space, std::size_t samples, Sampler& sampler,
                      ResidualTracker& track) {
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint v = sampler.tangent(space);
    const Vec w = from.sample_member(v, sampler);
    const TangentPoint v2 = tangent_lift(phi, v);
    const Vec w2 = phi.jet(v.q).jacobian * w;
    track.observe(to.membership_defect(v2, w2), v.stacked());
  }
}

}  // namespace

EquivalenceReport check_rcl_equivalence(const RCLSystem& a, const RCLSystem& b, const PointMap& map,
                                        std::size_t samples, std::uint64_t seed, double tol) {
  require_compatible(a, b, map);
  EquivalenceReport report;

  {
    ResidualTracker track;
    Sampler sampler(seed);
    std::string note;
    bool structural_ok = true;
    if (a.control() && b.control()) {
      if (a.control()->actuated().size() != b.control()->actuated().size()) {
        structural_ok = false;
        note = "actuated dimensions differ";
      }
      subset_direction(*a.control(), *b.control(), map, a.space(), samples, sampler, track);
      subset_direction(*b.control(), *a.control(), map.inverse(), b.space(), samples, sampler, track);
    } else if (a.control() || b.control()) {
      structural_ok = false;
      note = "only one system declares a control subset";
    } else {
      note = "no control subsets declared";
    }
    report.condition1 = track.finish("rcl.condition1", "C_2 = T phi(C_1)", tol, 2 * samples, seed);
    report.condition1.pass = report.condition1.pass && structural_ok;
    report.condition1.note = note;
  }

  {
    ResidualTracker track;
    Sampler sampler(seed + 1);
    for (std::size_t s = 0; s < samples; ++s) {
      const TangentPoint v = sampler.tangent(a.space());
      double r;
      if (b.law()) {
        const Vec lhs = controlled_vector(b, tangent_lift(map, v)).stacked();
        const Vec rhs = double_tangent_lift(map, controlled_vector(a, v)).stacked();
        r = inf_norm(lhs - rhs);
      } else {
        const MatchSolution m = control_match_solve(a, b, map, v, tol);
        r = std::max(m.horizontal_part, m.off_support);
      }
      track.observe(r, v.stacked());
    }
    report.condition2 = track.finish("rcl.condition2", "xi_2 o T phi = T(T phi) xi_1", tol, samples, seed + 1);
    if (!b.law()) report.condition2.note = "second system has no law; checked for existence of one";
  }
  return report;
}

MatchSolution control_match_solve(const RCLSystem& a, const RCLSystem& b, const PointMap& map,
                                  const TangentPoint& at, double tol) {
  require_compatible(a, b, map);
  const TangentPoint v2 = tangent_lift(map, at);
  const DoubleTangentVector xi_l2 = euler_lagrange_vector(b.lagrangian(), v2);
  DoubleTangentVector uncontrolled2 = xi_l2;
  if (b.force()) uncontrolled2.dqdot += vlift_of_fiber_map(*b.force(), xi_l2).dqdot;
  const DoubleTangentVector pushed = double_tangent_lift(map, controlled_vector(a, at));

  MatchSolution out;
  out.required = DoubleTangentVector{v2, pushed.dq - uncontrolled2.dq, pushed.dqdot - uncontrolled2.dqdot};
  out.horizontal_part = inf_norm(out.required.dq);

  // vlift(u_2) = vlift(c_0) + rates of the actuated coefficients, so only
  // the part left after removing the offset's lift must sit on D.
  Vec free_part = out.required.dqdot;
  if (b.control() && b.control()->offset_map()) {
    free_part -= vlift_of_fiber_map(*b.control()->offset_map(), xi_l2).dqdot;
  }
  double off = 0.0;
  for (Eigen::Index i = 0; i < free_part.size(); ++i) {
    const bool on_support = b.control() && b.control()->is_actuated(static_cast<std::size_t>(i));
    if (!on_support) off = std::max(off, std::fabs(free_part[i]));
  }
  out.off_support = off;
  out.realizable = out.horizontal_part <= tol && out.off_support <= tol;
  return out;
}

MatchingConditionReport check_force_law_matching(const RCLSystem& a, const RCLSystem& b,
                                                 const PointMap& map, std::size_t samples,
                                                 std::uint64_t seed, double tol) {
  require_compatible(a, b, map);
  ResidualTracker premise, condition;
  Sampler sampler(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint v = sampler.tangent(a.space());
    const TangentPoint v2 = tangent_lift(map, v);
    const DoubleTangentVector xi1 = euler_lagrange_vector(a.lagrangian(), v);
    const DoubleTangentVector xi2 = euler_lagrange_vector(b.lagrangian(), v2);
    premise.observe(inf_norm(xi2.stacked() - double_tangent_lift(map, xi1).stacked()), v.stacked());
    if (!b.law()) continue;

    auto lift1 = [&](const std::optional<FiberMap>& f) {
      return f ? double_tangent_lift(map, vlift_of_fiber_map(*f, xi1)).stacked() : Vec(Vec::Zero(2 * xi1.dq.size()));
    };
    auto lift2 = [&](const std::optional<FiberMap>& f) {
      return f ? vlift_of_fiber_map(*f, xi2).stacked() : Vec(Vec::Zero(2 * xi2.dq.size()));
    };
    const Vec lhs = lift2(b.law()) - lift1(a.law());
    const Vec rhs = -lift2(b.force()) + lift1(a.force());
    condition.observe(inf_norm(lhs - rhs), v.stacked());
  }

  MatchingConditionReport report;
  report.premise = premise.finish("rcl.law_matching_premise", "xi_L2 o T phi = T(T phi) xi_L1", tol, samples, seed);
  report.condition = condition.finish("rcl.law_matching",
                                      "vlift(u_2) - vlift(T phi u_1) = -vlift(F_2) + vlift(T phi F_1)", tol,
                                      samples, seed);
  if (!b.law()) {
    report.condition.applicable = false;
    report.condition.pass = false;
    report.condition.note = "second system has no law";
  } else if (!report.premise.pass) {
    report.condition.applicable = false;
    report.condition.pass = false;
    report.condition.note = "premise fails; condition not applicable";
  }
  return report;
}

// ---------------------------------------------------------------------------
// Pushforward along affine maps

namespace {

constexpr double kAffineTol = 1e-12;

// Constant Jacobian of an affine map, or nullopt when the map is not affine
// on the sampled points of `space`.
std::optional<Mat> affine_jacobian(const PointMap& map, const ConfigSpace& space) {
  std::vector<TangentPoint> pts = anchor_points(space);
  Sampler sampler(0x5eed);
  for (int s = 0; s < 16; ++s) pts.push_back(sampler.tangent(space));
  const Mat J0 = map.jet(pts.front().q).jacobian;
  for (const auto& p : pts) {
    const auto j = map.jet(p.q);
    if ((j.jacobian - J0).cwiseAbs().maxCoeff() > kAffineTol) return std::nullopt;
    for (const auto& h : j.hessians) {
      if (h.size() && h.cwiseAbs().maxCoeff() > kAffineTol) return std::nullopt;
    }
  }
  return J0;
}

// sum_j coeff(i, j) * node_j, dropping zero coefficients.
expr::NodePtr linear_row(const Mat& coeff, Eigen::Index i, const std::vector<expr::NodePtr>& nodes) {
  using expr::Op;
  expr::NodePtr acc;
  for (Eigen::Index j = 0; j < coeff.cols(); ++j) {
    const double c = coeff(i, j);
    if (c == 0.0) continue;
    expr::NodePtr term = c == 1.0 ? nodes[static_cast<std::size_t>(j)]
                                  : expr::make_binary(Op::Mul, expr::make_const(c), nodes[static_cast<std::size_t>(j)]);
    acc = acc ? expr::make_binary(Op::Add, acc, term) : term;
  }
  return acc ? acc : expr::make_const(0.0);
}

}  // namespace

RCLSystem pushforward(const RCLSystem& rcl, const PointMap& map) {
  if (!map.has_inverse()) throw ValidationError("pushforward needs a map with a declared inverse");
  if (map.source().dim() != rcl.dim()) throw ValidationError("pushforward: map source does not match the system");
  const auto forward_jac = affine_jacobian(map, rcl.space());
  const PointMap inv = map.inverse();
  const auto inverse_jac = affine_jacobian(inv, map.target());
  if (!forward_jac || !inverse_jac) throw UnsupportedError("pushforward is implemented for affine maps only");
  const Mat& A = *forward_jac;
  const Mat& B = *inverse_jac;
  const auto n = static_cast<Eigen::Index>(rcl.dim());

  // Source variables (q, qdot) expressed in the target's (Q, Qdot).
  std::vector<expr::NodePtr> target_vel;
  for (Eigen::Index j = 0; j < n; ++j) target_vel.push_back(expr::make_var(static_cast<std::size_t>(n + j)));
  std::vector<expr::NodePtr> replacement;
  for (const auto& e : inv.forward_expressions()) replacement.push_back(e.root_ptr());
  for (Eigen::Index i = 0; i < n; ++i) replacement.push_back(linear_row(B, i, target_vel));

  const LagrangianSystem& src = rcl.lagrangian();
  const expr::SymbolTable target_table(map.target().names(), src.named_params(), true);

  auto pull = [&](const expr::Expression& e) { return expr::substitute(e, replacement); };
  // Fiber values transform by the constant Jacobian A.
  auto push_fiber = [&](const FiberMap& f) {
    std::vector<expr::NodePtr> pulled;
    for (const auto& c : f.components()) pulled.push_back(pull(c).root_ptr());
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < n; ++i) {
      out.push_back(expr::to_string(expr::Expression(linear_row(A, i, pulled)), target_table));
    }
    return out;
  };

  LagrangianSystem sys(map.target(), expr::to_string(pull(src.lagrangian()), target_table), src.named_params(),
                       src.tolerances());
  std::optional<FiberMap> force;
  if (rcl.force()) force = FiberMap(sys, push_fiber(*rcl.force()));

  std::optional<ControlSubset> control;
  if (rcl.control()) {
    const ControlSubset& c = *rcl.control();
    std::vector<std::size_t> actuated;
    std::vector<Interval> bounds;
    for (std::size_t k = 0; k < c.actuated().size(); ++k) {
      const auto d = static_cast<Eigen::Index>(c.actuated()[k]);
      Eigen::Index image = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (A(i, d) == 0.0) continue;
        if (image >= 0) throw UnsupportedError("pushforward: actuated direction is not mapped onto a coordinate axis");
        image = i;
      }
      if (image < 0) throw ValidationError("pushforward: singular map Jacobian");
      const double s = A(image, d);
      const Interval& b = c.bounds()[k];
      actuated.push_back(static_cast<std::size_t>(image));
      bounds.push_back(s > 0 ? Interval{s * b.lower, s * b.upper} : Interval{s * b.upper, s * b.lower});
    }
    std::optional<std::vector<std::string>> offset;
    if (c.offset_map()) offset = push_fiber(*c.offset_map());
    control = ControlSubset(sys, std::move(actuated), offset, std::move(bounds));
  }
  std::optional<FiberMap> law;
  if (rcl.law()) law = FiberMap(sys, push_fiber(*rcl.law()));
  return RCLSystem(std::move(sys), std::move(force), std::move(control), std::move(law));
}

}  // namespace rclab
