#include "rclab/suites.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rclab/error.hpp"

namespace rclab {

namespace {

struct Picker {
  const SuiteOptions& opt;
  std::size_t n(std::size_t fallback) const { return opt.samples.value_or(fallback); }
  double tol(double fallback) const { return opt.tol.value_or(fallback); }
};

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void append(std::vector<CheckResult>& out, std::vector<CheckResult> more) {
  for (auto& c : more) out.push_back(std::move(c));
}

CheckResult not_applicable(std::string id, std::string identity, std::string note) {
  CheckResult r;
  r.id = std::move(id);
  r.identity = std::move(identity);
  r.applicable = false;
  r.pass = true;
  r.note = std::move(note);
  return r;
}

CheckResult hyperregularity_entry(const LagrangianSystem& sys, std::uint64_t seed) {
  const auto cert = check_hyperregular(sys, sys.tolerances().hyperreg_samples, seed);
  CheckResult r;
  r.id = "legendre.hyperregular";
  r.identity = "velocity Hessian M invertible on the box (FL a local diffeomorphism)";
  r.pass = cert.pass;
  r.max_residual = std::max(0.0, sys.tolerances().hyperreg_min - cert.min_singular_value);
  r.witness = cert.witness.stacked();
  r.samples = cert.samples;
  r.seed = seed;
  r.tol = 0.0;
  r.note = "smallest singular value " + format_value(cert.min_singular_value);
  return r;
}

CheckResult regular_value_entry(const SymmetrySpec& spec, const LagrangianSystem& sys, std::size_t samples,
                                std::uint64_t seed) {
  const auto cert = check_regular_value(spec, sys, samples, seed);
  CheckResult r;
  r.id = "symmetry.regular_value";
  r.identity = "dJ_L has full rank on the box (every mu is a regular value)";
  r.samples = samples;
  r.seed = seed;
  if (spec.cyclic().empty()) {
    r.pass = true;
    r.note = "trivial group";
    return r;
  }
  r.pass = cert.pass;
  r.max_residual = std::max(0.0, sys.tolerances().hyperreg_min - cert.min_singular_value);
  r.witness = cert.witness.stacked();
  r.note = "smallest singular value " + format_value(cert.min_singular_value);
  return r;
}

CheckResult law_entry(const RCLSystem& rcl) {
  const auto& cert = *rcl.law_certificate();
  CheckResult r;
  r.id = "control.law_certificate";
  r.identity = "u^L(v) lies in C^L(v)";
  r.pass = cert.pass;
  r.max_residual = cert.max_defect;
  if (cert.witness) r.witness = cert.witness->stacked();
  r.samples = cert.samples;
  r.seed = cert.seed;
  r.tol = 1e-12;
  return r;
}

std::vector<CheckResult> legendre_suite(const sysdef::SystemModel& m, const Picker& p) {
  const auto& sys = m.lagrangian();
  const auto seed = p.opt.seed;
  return {hyperregularity_entry(sys, seed), check_legendre_round_trip(sys, p.n(200), seed, p.tol(1e-10)),
          check_two_form_consistency(sys, p.n(100), seed, p.tol(1e-10))};
}

std::vector<CheckResult> dynamics_suite(const sysdef::SystemModel& m, const Picker& p) {
  const auto& sys = m.lagrangian();
  const auto seed = p.opt.seed;
  std::vector<CheckResult> out{check_dual_derivation(sys, p.n(200), seed, p.tol(1e-9))};
  CheckResult so = check_second_order(euler_lagrange_field(sys), sys.space(), p.n(200), seed, 0.0);
  so.id = "dynamics.second_order";
  so.identity = "dq-components of xi_L equal qdot";
  out.push_back(so);
  if (m.rcl.force() || m.rcl.law()) {
    CheckResult c = check_second_order(controlled_field(m.rcl), sys.space(), p.n(200), seed, 0.0);
    c.id = "dynamics.second_order_controlled";
    c.identity = "dq-components of the controlled field equal qdot";
    out.push_back(c);
  } else {
    out.push_back(not_applicable("dynamics.second_order_controlled",
                                 "dq-components of the controlled field equal qdot", "no force or law"));
  }
  out.push_back(check_fl_related(sys, p.n(100), seed, p.tol(1e-8)));
  out.push_back(check_energy_conservation(sys, p.n(200), seed, p.tol(1e-9)));
  if (m.uncontrolled()) {
    out.push_back(check_drift(sys, nullptr, m.initial_state(), 10.0, 1e-3, p.tol(1e-6)).energy);
  } else {
    out.push_back(not_applicable("dynamics.energy_drift", "E_L constant along the flow", "forced or controlled"));
  }
  return out;
}

std::vector<CheckResult> algebra_suite(const SymmetrySpec& spec, const Picker& p) {
  const auto seed = p.opt.seed;
  const double tol = p.tol(1e-12);
  CheckResult anti;
  anti.id = "symmetry.antisymmetry";
  anti.identity = "C^k_ij = -C^k_ji";
  anti.max_residual = spec.antisymmetry_defect();
  anti.pass = anti.max_residual <= tol;
  anti.tol = tol;
  CheckResult jac;
  jac.id = "symmetry.jacobi";
  jac.identity = "Jacobi identity of the bracket";
  jac.max_residual = spec.jacobi_defect();
  jac.pass = jac.max_residual <= tol;
  jac.tol = tol;

  // The form is a contraction with the bracket: antisymmetric in (xi, eta),
  // and identically zero for abelian algebras.
  Sampler sampler(seed);
  ResidualTracker track;
  const auto d = spec.dim();
  const std::size_t samples = p.n(100);
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec nu = sampler.uniform_vector(d, -1, 1), xi = sampler.uniform_vector(d, -1, 1),
              eta = sampler.uniform_vector(d, -1, 1);
    const double f = coadjoint_plus_form(spec, nu, xi, eta);
    double r = std::fabs(f + coadjoint_plus_form(spec, nu, eta, xi));
    if (spec.is_abelian()) r = std::max(r, std::fabs(f));
    Vec state(3 * d);
    state << nu, xi, eta;
    track.observe(r, state);
  }
  CheckResult form = track.finish("symmetry.coadjoint_form",
                                  "omega^+(nu)(xi, eta) = <nu, [xi, eta]> is antisymmetric, zero when abelian", tol,
                                  samples, seed);
  return {anti, jac, form};
}

std::vector<CheckResult> noether_suite(const sysdef::SystemModel& m, const Picker& p) {
  if (!m.symmetry) throw InapplicableError("noether suite needs a symmetry");
  const auto& spec = *m.symmetry;
  if (!spec.is_translation()) return algebra_suite(spec, p);
  const auto& sys = m.lagrangian();
  const auto seed = p.opt.seed;
  std::vector<CheckResult> out{check_invariance(spec, m.rcl, p.n(200), seed, p.tol(1e-10)),
                               check_equivariance(spec, sys, p.n(200), seed, p.tol(1e-10)),
                               check_momentum_paths(spec, sys, p.n(200), seed, p.tol(1e-14)),
                               check_noether(spec, sys, p.n(200), seed, p.tol(1e-9))};
  if (m.uncontrolled()) {
    out.push_back(check_drift(sys, &spec, m.initial_state(), 10.0, 1e-3, p.tol(1e-6)).momentum);
  } else {
    out.push_back(not_applicable("symmetry.momentum_drift", "J_L constant along the flow", "forced or controlled"));
  }
  out.push_back(regular_value_entry(spec, sys, p.n(200), seed));
  return out;
}

std::vector<CheckResult> reduced_checks(const ReducedSystem& red, const Picker& p, bool include_dynamics) {
  const auto seed = p.opt.seed;
  std::vector<CheckResult> out{check_commutation(red, p.n(200), seed, p.tol(1e-8))};
  const TangentPoint x0 = anchor_points(red.space()).front();
  out.push_back(check_flow_commutation(red, x0, 5.0, 1e-3, p.tol(1e-5)));
  out.push_back(check_section_independence(red, p.n(100), seed, p.tol(1e-9)));
  out.push_back(check_reduced_energy(red, p.n(200), seed, p.tol(1e-9)));
  append(out, check_reduced_legendre(red, p.n(100), seed, p.tol(1e-8)));
  if (include_dynamics) {
    out.push_back(check_reduced_round_trip(red, p.n(200), seed, p.tol(1e-10)));
    out.push_back(check_reduced_dual_derivation(red, p.n(200), seed, p.tol(1e-9)));
    CheckResult so = check_reduced_second_order(red, p.n(200), seed);
    so.id = "reduction.second_order";
    so.identity = "dq-components of the reduced field equal qdot";
    out.push_back(so);
    out.push_back(check_reduced_fl_related(red, p.n(100), seed, p.tol(1e-8)));
  }
  return out;
}

std::vector<CheckResult> reduction_suite(const sysdef::SystemModel& m, const Picker& p) {
  if (!m.symmetry) throw InapplicableError("reduction suite needs a symmetry");
  if (!m.symmetry->is_translation()) throw InapplicableError("reduction suite needs a cyclic-coordinate symmetry");
  const auto mu = p.opt.mu ? p.opt.mu : m.mu;
  if (!mu) throw InapplicableError("reduction suite needs a momentum value (--mu or 'mu' in the file)");
  if (static_cast<std::size_t>(mu->size()) != m.symmetry->cyclic().size()) {
    throw ValidationError("--mu needs " + std::to_string(m.symmetry->cyclic().size()) + " components");
  }
  const ReductionOptions ropt{p.n(200), p.opt.seed, p.tol(1e-8)};
  std::optional<OrbitReduction> orbit;
  try {
    orbit.emplace(orbit_reduce(m.rcl, *m.symmetry, *mu, ropt));
  } catch (const IrreducibleError& e) {
    CheckResult r;
    r.id = "reduction.preconditions";
    r.identity = "invariance, regular value, level-set preservation and a nonempty control slice";
    r.pass = false;
    r.max_residual = std::numeric_limits<double>::infinity();
    r.samples = ropt.samples;
    r.seed = ropt.seed;
    r.tol = ropt.tol;
    r.note = e.what();
    return {r};
  }
  std::vector<CheckResult> out = orbit->reduced.certificates();
  append(out, reduced_checks(orbit->reduced, p, true));
  return out;
}

std::vector<CheckResult> reduced_legendre_suite(const ReducedSystem& red, const Picker& p) {
  std::vector<CheckResult> out{check_reduced_round_trip(red, p.n(200), p.opt.seed, p.tol(1e-10))};
  out.push_back(check_reduced_legendre(red, p.n(100), p.opt.seed, p.tol(1e-8)).front());
  return out;
}

std::vector<CheckResult> reduced_dynamics_suite(const ReducedSystem& red, const Picker& p) {
  const auto seed = p.opt.seed;
  std::vector<CheckResult> out{check_reduced_dual_derivation(red, p.n(200), seed, p.tol(1e-9))};
  CheckResult so = check_reduced_second_order(red, p.n(200), seed);
  so.id = "reduction.second_order";
  so.identity = "dq-components of the reduced field equal qdot";
  out.push_back(so);
  out.push_back(check_reduced_energy(red, p.n(200), seed, p.tol(1e-9)));
  out.push_back(check_reduced_fl_related(red, p.n(100), seed, p.tol(1e-8)));
  return out;
}

/// The symmetry used for equivalence of reductions; systems without one reduce by the trivial group.
std::pair<SymmetrySpec, Vec> reduction_data(const sysdef::SystemModel& m, const std::optional<Vec>& mu,
                                            const char* label) {
  if (!m.symmetry) return {SymmetrySpec::translation(m.rcl.space(), {}), Vec(0)};
  if (!m.symmetry->is_translation()) {
    throw InapplicableError(std::string("system ") + label + " needs a cyclic-coordinate symmetry");
  }
  if (m.symmetry->cyclic().empty()) return {*m.symmetry, Vec(0)};
  if (!mu) throw InapplicableError(std::string("system ") + label + " needs a momentum value");
  return {*m.symmetry, *mu};
}

}  // namespace

Suite parse_suite(const std::string& name) {
  if (name == "legendre") return Suite::Legendre;
  if (name == "dynamics") return Suite::Dynamics;
  if (name == "noether") return Suite::Noether;
  if (name == "reduction") return Suite::Reduction;
  if (name == "all") return Suite::All;
  throw ValidationError("unknown suite '" + name + "'");
}

EquivalenceKind parse_equivalence_kind(const std::string& name) {
  if (name == "rcl") return EquivalenceKind::Rcl;
  if (name == "rpcl") return EquivalenceKind::Rpcl;
  if (name == "rocl") return EquivalenceKind::Rocl;
  if (name == "thm43") return EquivalenceKind::Thm43;
  if (name == "thm44") return EquivalenceKind::Thm44;
  if (name == "thm53") return EquivalenceKind::Thm53;
  if (name == "thm54") return EquivalenceKind::Thm54;
  throw ValidationError("unknown equivalence kind '" + name + "'");
}

std::vector<CheckResult> validation_checks(const sysdef::SystemModel& model, std::uint64_t seed) {
  std::vector<CheckResult> out{hyperregularity_entry(model.lagrangian(), seed)};
  if (model.rcl.law_certificate()) out.push_back(law_entry(model.rcl));
  if (model.symmetry && model.symmetry->is_translation()) {
    out.push_back(check_invariance(*model.symmetry, model.rcl, 200, seed));
  }
  return out;
}

std::vector<CheckResult> run_suite(const sysdef::SystemModel& model, Suite suite, const SuiteOptions& options) {
  const Picker p{options};
  switch (suite) {
    case Suite::Legendre:
      return legendre_suite(model, p);
    case Suite::Dynamics:
      return dynamics_suite(model, p);
    case Suite::Noether:
      return noether_suite(model, p);
    case Suite::Reduction:
      return reduction_suite(model, p);
    case Suite::All: {
      auto out = legendre_suite(model, p);
      append(out, dynamics_suite(model, p));
      if (model.symmetry) append(out, noether_suite(model, p));
      if (model.symmetry && model.symmetry->is_translation()) {
        if (options.mu || model.mu) {
          append(out, reduction_suite(model, p));
        } else {
          out.push_back(not_applicable("reduction.skipped", "reduction suite", "no momentum value given"));
        }
      }
      return out;
    }
  }
  throw ValidationError("unknown suite");
}

std::vector<CheckResult> run_suite(const sysdef::ReducedModel& model, Suite suite, const SuiteOptions& options) {
  const Picker p{options};
  switch (suite) {
    case Suite::Legendre:
      return reduced_legendre_suite(model.reduced, p);
    case Suite::Dynamics:
      return reduced_dynamics_suite(model.reduced, p);
    case Suite::All: {
      auto out = reduced_legendre_suite(model.reduced, p);
      append(out, reduced_dynamics_suite(model.reduced, p));
      return out;
    }
    case Suite::Noether:
    case Suite::Reduction:
      throw InapplicableError("reduced files support the legendre and dynamics suites only");
  }
  throw ValidationError("unknown suite");
}

std::vector<CheckResult> run_equivalence(const sysdef::PairModel& pair, EquivalenceKind kind,
                                         const SuiteOptions& options) {
  const Picker p{options};
  const auto seed = options.seed;
  const double tol = p.tol(1e-8);
  if (kind == EquivalenceKind::Rcl) {
    const auto rep = check_rcl_equivalence(pair.a.rcl, pair.b.rcl, pair.map, p.n(200), seed, tol);
    auto match = check_force_law_matching(pair.a.rcl, pair.b.rcl, pair.map, p.n(200), seed, tol);
    match.premise.gating = false;
    return {rep.condition1, rep.condition2, match.premise, match.condition};
  }

  const bool orbit = kind == EquivalenceKind::Rocl || kind == EquivalenceKind::Thm53 || kind == EquivalenceKind::Thm54;
  const auto [spec_a, mu_a] = reduction_data(pair.a, pair.mu_a, "a");
  const auto [spec_b, mu_b] = reduction_data(pair.b, pair.mu_b, "b");
  const ReductionOptions ropt{p.n(200), seed, 1e-8};
  std::vector<CheckResult> out;
  auto reduce = [&](const sysdef::SystemModel& m, const SymmetrySpec& spec, const Vec& mu, const char* label) {
    if (!orbit) return point_reduce(m.rcl, spec, mu, ropt);
    auto o = orbit_reduce(m.rcl, spec, mu, ropt);
    o.correction.id += std::string("_") + label;
    out.push_back(o.correction);
    return std::move(o.reduced);
  };
  const ReducedSystem a = reduce(pair.a, spec_a, mu_a, "a");
  const ReducedSystem b = reduce(pair.b, spec_b, mu_b, "b");

  if (kind == EquivalenceKind::Rpcl || kind == EquivalenceKind::Rocl) {
    const auto rep = check_rpcl_equivalence(a, b, pair.map, p.n(200), seed, tol, orbit);
    append(out, rep.condition1);
    out.push_back(rep.condition2);
    if (rep.orbit_form) out.push_back(*rep.orbit_form);
    return out;
  }
  TheoremKind tk = TheoremKind::PointControlled;
  if (kind == EquivalenceKind::Thm44) tk = TheoremKind::PointLagrangian;
  if (kind == EquivalenceKind::Thm53) tk = TheoremKind::OrbitControlled;
  if (kind == EquivalenceKind::Thm54) tk = TheoremKind::OrbitLagrangian;
  const auto rep = theorem_harness(tk, a, b, pair.map, p.n(200), seed, tol);
  append(out, rep.upstairs);
  append(out, rep.downstairs);
  out.push_back(rep.agreement);
  return out;
}

}  // namespace rclab
