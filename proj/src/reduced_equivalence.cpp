#include <algorithm>
#include <cmath>

#include "rclab/error.hpp"
#include "rclab/reduction.hpp"

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

void require_pair(const ReducedSystem& a, const ReducedSystem& b, const PointMap& map) {
  if (!map.has_inverse()) throw ValidationError("equivalence check needs a map with a declared inverse");
  if (map.source().dim() != a.parent().dim() || map.target().dim() != b.parent().dim()) {
    throw ValidationError("point map dimensions do not match the systems");
  }
}

CheckResult informational(CheckResult r) {
  r.gating = false;
  return r;
}

// |J_to(T phi z) - mu_to| at level-set points of `from`.
void level_set_direction(const ReducedSystem& from, const ReducedSystem& to, const PointMap& phi, std::size_t samples,
                         Sampler& sampler, ResidualTracker& track) {
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint z = from.level_set_point(sampler.tangent(from.space()), random_shift(from.spec(), sampler));
    const Vec j = momentum_map_lagrangian(to.spec(), to.parent_lagrangian(), tangent_lift(phi, z));
    track.observe(j.size() == to.mu().size() ? inf_norm(Vec(j - to.mu())) : std::numeric_limits<double>::infinity(),
                  z.stacked());
  }
}

// phi(g.q) - phi(q) must be a translation along the target's cyclic
// coordinates that does not depend on q, and velocities must be unchanged.
void group_direction(const ReducedSystem& from, const ReducedSystem& to, const PointMap& phi, std::size_t samples,
                     Sampler& sampler, ResidualTracker& track) {
  const auto& cyc_to = to.spec().cyclic();
  const Vec q_ref = anchor_points(from.parent().space()).front().q;
  auto displacement = [&](const Vec& q, const Vec& g) {
    const TangentPoint gq = tangent_lifted_action(from.spec(), g, TangentPoint{q, Vec::Zero(q.size())});
    return Vec(phi.apply(gq.q) - phi.apply(q));
  };
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint z = from.level_set_point(sampler.tangent(from.space()), random_shift(from.spec(), sampler));
    const Vec g = random_shift(from.spec(), sampler);
    const Vec d = displacement(z.q, g);
    double r = inf_norm(Vec(d - displacement(q_ref, g)));
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (std::find(cyc_to.begin(), cyc_to.end(), static_cast<std::size_t>(i)) == cyc_to.end()) {
        r = std::max(r, std::fabs(d[i]));
      }
    }
    const TangentPoint gz = tangent_lifted_action(from.spec(), g, z);
    r = std::max(r, inf_norm(Vec(tangent_lift(phi, gz).qdot - tangent_lift(phi, z).qdot)));
    track.observe(r, z.stacked());
  }
}

// Members of C_from meeting the level set are carried into C_to on the other level set.
void control_direction(const ReducedSystem& from, const ReducedSystem& to, const PointMap& phi, std::size_t samples,
                       Sampler& sampler, ResidualTracker& track) {
  const ControlSubset& cf = *from.parent().control();
  const ControlSubset& ct = *to.parent().control();
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint z = from.level_set_point(sampler.tangent(from.space()), random_shift(from.spec(), sampler));
    const Vec start = cf.sample_member(z, sampler);
    const auto w = control_level_member(from.parent(), from.spec(), from.mu(), z, start);
    if (!w) {
      track.observe(std::numeric_limits<double>::infinity(), z.stacked());
      continue;
    }
    const TangentPoint z2 = tangent_lift(phi, z);
    const Vec w2 = phi.jet(z.q).jacobian * *w;
    const Vec j2 = momentum_map_lagrangian(to.spec(), to.parent_lagrangian(), TangentPoint{z2.q, w2});
    const double level = j2.size() == to.mu().size() ? inf_norm(Vec(j2 - to.mu())) : std::numeric_limits<double>::infinity();
    track.observe(std::max(ct.membership_defect(z2, w2), level), z.stacked());
  }
}

}  // namespace

bool ReducedEquivalenceReport::pass() const {
  for (const auto& c : condition1) {
    if (!c.pass) return false;
  }
  return condition2.pass && (!orbit_form || orbit_form->pass);
}

ReducedEquivalenceReport check_rpcl_equivalence(const ReducedSystem& a, const ReducedSystem& b, const PointMap& map,
                                                std::size_t samples, std::uint64_t seed, double tol, bool orbit) {
  require_pair(a, b, map);
  const PointMap inv = map.inverse();
  const std::string prefix = orbit ? "rocl." : "rpcl.";
  ReducedEquivalenceReport report;

  {
    ResidualTracker track;
    Sampler sampler(seed);
    level_set_direction(a, b, map, samples, sampler, track);
    level_set_direction(b, a, inv, samples, sampler, track);
    report.condition1.push_back(track.finish(prefix + "level_sets", "T phi maps J_L1^{-1}(mu_1) onto J_L2^{-1}(mu_2)",
                                             tol, 2 * samples, seed));
  }
  {
    ResidualTracker track;
    Sampler sampler(seed + 1);
    const bool same_group = a.spec().cyclic().size() == b.spec().cyclic().size();
    if (same_group) {
      group_direction(a, b, map, samples, sampler, track);
      group_direction(b, a, inv, samples, sampler, track);
    }
    CheckResult r = track.finish(prefix + "group_actions", "T phi intertwines the group actions", tol, 2 * samples, seed + 1);
    if (!same_group) {
      r.pass = false;
      r.note = "symmetry groups have different dimensions";
    }
    report.condition1.push_back(r);
  }
  {
    ResidualTracker track;
    Sampler sampler(seed + 2);
    std::string note;
    bool structural_ok = true;
    const auto& ca = a.parent().control();
    const auto& cb = b.parent().control();
    if (ca && cb) {
      if (ca->actuated().size() != cb->actuated().size()) {
        structural_ok = false;
        note = "actuated dimensions differ";
      }
      control_direction(a, b, map, samples, sampler, track);
      control_direction(b, a, inv, samples, sampler, track);
    } else if (ca || cb) {
      structural_ok = false;
      note = "only one system declares a control subset";
    } else {
      note = "no control subsets declared";
    }
    CheckResult r = track.finish(prefix + "control_subsets", "T phi maps C_1 meet J_L1^{-1}(mu_1) onto C_2 meet J_L2^{-1}(mu_2)",
                                 tol, 2 * samples, seed + 2);
    r.pass = r.pass && structural_ok;
    r.note = note;
    report.condition1.push_back(r);
  }
  {
    ResidualTracker track;
    Sampler sampler(seed + 3);
    for (std::size_t s = 0; s < samples; ++s) {
      const TangentPoint z = a.level_set_point(sampler.tangent(a.space()), random_shift(a.spec(), sampler));
      double r;
      if (b.parent().law()) {
        const Vec lhs = controlled_vector(b.parent(), tangent_lift(map, z)).stacked();
        const Vec rhs = double_tangent_lift(map, controlled_vector(a.parent(), z)).stacked();
        r = inf_norm(Vec(lhs - rhs));
      } else {
        const MatchSolution m = control_match_solve(a.parent(), b.parent(), map, z, tol);
        r = std::max(m.horizontal_part, m.off_support);
      }
      track.observe(r, z.stacked());
    }
    report.condition2 = track.finish(prefix + "condition2", "xi_2 o T phi = T(T phi) xi_1 on the level set", tol,
                                     samples, seed + 3);
  }
  if (orbit) {
    ResidualTracker track;
    Sampler sampler(seed + 4);
    const std::size_t da = a.spec().dim(), db = b.spec().dim();
    for (std::size_t s = 0; s < samples; ++s) {
      const Vec xi = sampler.uniform_vector(da, -1.0, 1.0), eta = sampler.uniform_vector(da, -1.0, 1.0);
      const Vec xi2 = sampler.uniform_vector(db, -1.0, 1.0), eta2 = sampler.uniform_vector(db, -1.0, 1.0);
      const double wa = coadjoint_plus_form(a.spec(), a.mu(), xi, eta);
      const double wb = coadjoint_plus_form(b.spec(), b.mu(), xi2, eta2);
      track.observe(std::fabs(wa - wb), a.mu());
    }
    report.orbit_form = track.finish("rocl.orbit_form", "omega^+ restrictions agree on the orbits", tol, samples, seed + 4);
  }
  return report;
}

TangentPoint reduced_map(const ReducedSystem& a, const ReducedSystem& b, const PointMap& map, const TangentPoint& x) {
  return b.project(tangent_lift(map, a.section(x)));
}

Mat reduced_map_jacobian(const ReducedSystem& a, const ReducedSystem& b, const PointMap& map, const TangentPoint& x) {
  return b.projection_matrix() * tangent_lift_jacobian(map, a.section(x)) * a.section_jacobian(x);
}

// ---------------------------------------------------------------------------
// Theorem harness

bool HarnessReport::upstairs_pass() const {
  return std::all_of(upstairs.begin(), upstairs.end(), [](const CheckResult& c) { return c.pass; });
}

bool HarnessReport::downstairs_pass() const {
  return std::all_of(downstairs.begin(), downstairs.end(), [](const CheckResult& c) { return c.pass; });
}

namespace {

// Lagrangian equivalence upstairs: T phi is symplectic and relates xi_L.
std::vector<CheckResult> lagrangian_upstairs(const ReducedSystem& a, const ReducedSystem& b, const PointMap& map,
                                             std::size_t samples, std::uint64_t seed, double tol) {
  const LagrangianSystem& la = a.parent_lagrangian();
  const LagrangianSystem& lb = b.parent_lagrangian();
  ResidualTracker form, field;
  Sampler sampler(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint v = sampler.tangent(la.space());
    const TangentPoint v2 = tangent_lift(map, v);
    const Mat J = tangent_lift_jacobian(map, v);
    form.observe(inf_norm(Mat(J.transpose() * lagrangian_two_form(lb, v2).matrix * J - lagrangian_two_form(la, v).matrix)),
                 v.stacked());
    field.observe(inf_norm(Vec(euler_lagrange_vector(lb, v2).stacked() -
                               double_tangent_lift(map, euler_lagrange_vector(la, v)).stacked())),
                  v.stacked());
  }
  return {form.finish("harness.upstairs_symplectic", "T phi^* omega^L_2 = omega^L_1", tol, samples, seed),
          field.finish("harness.upstairs_field", "xi_L2 o T phi = T(T phi) xi_L1", tol, samples, seed)};
}

std::vector<CheckResult> lagrangian_downstairs(const ReducedSystem& a, const ReducedSystem& b, const PointMap& map,
                                               std::size_t samples, std::uint64_t seed, double tol) {
  ResidualTracker form, field;
  Sampler sampler(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint x = sampler.tangent(a.space());
    const TangentPoint y = reduced_map(a, b, map, x);
    const Mat J = reduced_map_jacobian(a, b, map, x);
    form.observe(inf_norm(Mat(J.transpose() * b.two_form(y).matrix * J - a.two_form(x).matrix)), x.stacked());
    field.observe(inf_norm(Vec(b.euler_lagrange_vector(y).stacked() - J * a.euler_lagrange_vector(x).stacked())),
                  x.stacked());
  }
  return {form.finish("harness.downstairs_symplectic", "(T phi)_mu^* omega_2,mu = omega_1,mu", tol, samples, seed),
          field.finish("harness.downstairs_field", "xi_l2 o (T phi)_mu = T(T phi)_mu xi_l1", tol, samples, seed)};
}

// Reduced control subset at x: offset_mu(x) + actuated shape directions.
double reduced_membership_defect(const ReducedSystem& r, const TangentPoint& x, const Vec& w) {
  const Vec off = r.control_offset(x).value_or(Vec(Vec::Zero(w.size())));
  const Vec d = w - off;
  const ReducedControl& rc = *r.control();
  double defect = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const auto it = std::find(rc.actuated.begin(), rc.actuated.end(), static_cast<std::size_t>(i));
    if (it == rc.actuated.end()) {
      defect = std::max(defect, std::fabs(d[i]));
    } else {
      const Interval& bd = rc.bounds[static_cast<std::size_t>(it - rc.actuated.begin())];
      defect = std::max({defect, bd.lower - d[i], d[i] - bd.upper});
    }
  }
  return defect;
}

Vec reduced_sample_member(const ReducedSystem& r, const TangentPoint& x, Sampler& sampler) {
  Vec w = r.control_offset(x).value_or(Vec(Vec::Zero(idx(r.dim()))));
  const ReducedControl& rc = *r.control();
  for (std::size_t k = 0; k < rc.actuated.size(); ++k) {
    const Interval& bd = rc.bounds[k];
    double lo = std::max(bd.lower, -1.0), hi = std::min(bd.upper, 1.0);
    if (lo > hi) {
      lo = std::isfinite(bd.lower) ? bd.lower : bd.upper - 2.0;
      hi = std::isfinite(bd.upper) ? bd.upper : bd.lower + 2.0;
    }
    w[idx(rc.actuated[k])] += sampler.uniform(lo, hi);
  }
  return w;
}

// Reduced control subsets correspond under the reduced map: a member w at x
// is the reduced tangent point (q_s, w), carried by the reduced map.
void reduced_control_direction(const ReducedSystem& from, const ReducedSystem& to, const PointMap& phi,
                               std::size_t samples, Sampler& sampler, ResidualTracker& track) {
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint x = sampler.tangent(from.space());
    const Vec w = reduced_sample_member(from, x, sampler);
    const TangentPoint image = reduced_map(from, to, phi, TangentPoint{x.q, w});
    const TangentPoint y = reduced_map(from, to, phi, x);
    track.observe(reduced_membership_defect(to, y, image.qdot), x.stacked());
  }
}

std::vector<CheckResult> controlled_downstairs(const ReducedSystem& a, const ReducedSystem& b, const PointMap& map,
                                               std::size_t samples, std::uint64_t seed, double tol) {
  CheckResult control;
  {
    ResidualTracker track;
    Sampler sampler(seed);
    std::string note;
    bool structural_ok = true;
    if (a.control() && b.control()) {
      if (a.control()->actuated.size() != b.control()->actuated.size()) {
        structural_ok = false;
        note = "reduced actuated dimensions differ";
      }
      reduced_control_direction(a, b, map, samples, sampler, track);
      reduced_control_direction(b, a, map.inverse(), samples, sampler, track);
    } else if (a.control() || b.control()) {
      structural_ok = false;
      note = "only one reduced system has a control subset";
    } else {
      note = "no control subsets declared";
    }
    control = track.finish("harness.downstairs_control", "C_2,mu = (T phi)_mu(C_1,mu)", tol, 2 * samples, seed);
    control.pass = control.pass && structural_ok;
    control.note = note;
  }

  ResidualTracker field;
  Sampler sampler(seed + 1);
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint x = sampler.tangent(a.space());
    const TangentPoint y = reduced_map(a, b, map, x);
    const Vec pushed = reduced_map_jacobian(a, b, map, x) * a.field_vector(x).stacked();
    double r;
    if (b.parent().law()) {
      r = inf_norm(Vec(b.field_vector(y).stacked() - pushed));
    } else {
      // Existence of a reduced law: the requirement minus the offset's lift
      // must be vertical and supported on the actuated shape directions.
      DoubleTangentVector xi = b.euler_lagrange_vector(y);
      const Vec base = xi.stacked();
      Vec uncontrolled = base;
      const auto sb = idx(b.dim());
      uncontrolled.tail(sb) += b.force_jacobian(y) * base;
      Vec req = pushed - uncontrolled;
      req.tail(sb) -= b.offset_jacobian(y) * base;
      r = inf_norm(Vec(req.head(sb)));
      for (Eigen::Index i = 0; i < sb; ++i) {
        const bool on = b.control() && std::find(b.control()->actuated.begin(), b.control()->actuated.end(),
                                                 static_cast<std::size_t>(i)) != b.control()->actuated.end();
        if (!on) r = std::max(r, std::fabs(req[sb + i]));
      }
    }
    field.observe(r, x.stacked());
  }
  return {control, field.finish("harness.downstairs_field", "xi_2,red o (T phi)_mu = T(T phi)_mu xi_1,red", tol,
                                samples, seed + 1)};
}

}  // namespace

HarnessReport theorem_harness(TheoremKind kind, const ReducedSystem& a, const ReducedSystem& b, const PointMap& map,
                              std::size_t samples, std::uint64_t seed, double tol) {
  require_pair(a, b, map);
  HarnessReport report;
  const bool orbit = kind == TheoremKind::OrbitControlled || kind == TheoremKind::OrbitLagrangian;
  const bool controlled = kind == TheoremKind::PointControlled || kind == TheoremKind::OrbitControlled;

  if (controlled) {
    const ReducedEquivalenceReport up = check_rpcl_equivalence(a, b, map, samples, seed, tol, orbit);
    report.upstairs = up.condition1;
    report.upstairs.push_back(up.condition2);
    if (up.orbit_form) report.upstairs.push_back(*up.orbit_form);
    report.downstairs = controlled_downstairs(a, b, map, samples, seed + 10, tol);
  } else {
    report.upstairs = lagrangian_upstairs(a, b, map, samples, seed, tol);
    report.downstairs = lagrangian_downstairs(a, b, map, samples, seed + 10, tol);
  }
  if (orbit) {
    // Both sides carry the same coadjoint +-form restriction; zero for abelian groups.
    Sampler sampler(seed + 20);
    ResidualTracker track;
    for (std::size_t s = 0; s < samples; ++s) {
      const Vec xi = sampler.uniform_vector(a.spec().dim(), -1.0, 1.0);
      const Vec eta = sampler.uniform_vector(a.spec().dim(), -1.0, 1.0);
      track.observe(std::fabs(coadjoint_plus_form(a.spec(), a.mu(), xi, eta)), a.mu());
    }
    CheckResult plus = track.finish("harness.orbit_form", "omega^{L+} restriction agrees", tol, samples, seed + 20);
    if (!controlled) report.upstairs.push_back(plus);
    plus.id = "harness.orbit_form_reduced";
    report.downstairs.push_back(plus);
  }
  for (auto& c : report.upstairs) c = informational(c);
  for (auto& c : report.downstairs) c = informational(c);

  const bool up = report.upstairs_pass();
  const bool down = report.downstairs_pass();
  report.agreement.id = "harness.agreement";
  report.agreement.identity = "upstairs and downstairs verdicts agree";
  report.agreement.pass = up == down;
  report.agreement.max_residual = up == down ? 0.0 : 1.0;
  report.agreement.samples = samples;
  report.agreement.seed = seed;
  report.agreement.tol = 0.0;
  report.agreement.note = std::string("upstairs ") + (up ? "pass" : "fail") + ", downstairs " + (down ? "pass" : "fail");
  return report;
}

}  // namespace rclab
