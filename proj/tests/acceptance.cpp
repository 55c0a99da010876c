// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rclab/control.hpp"
#include "rclab/dynamics.hpp"
#include "rclab/error.hpp"
#include "rclab/reduction.hpp"
#include "rclab/suites.hpp"
#include "rclab/symmetry.hpp"
#include "rclab/sysdef.hpp"

using namespace rclab;
namespace fs = std::filesystem;
using sysdef::Json;

namespace {

const fs::path kData = RCLAB_DATA_DIR;

const std::vector<std::string> kSystemFiles = {
    "free_particle.json",      "harmonic_oscillator.json",       "harmonic_oscillator_cyclic.json",
    "central_force.json",      "central_force_drag.json",        "central_force_spin_drag.json",
    "pendulum_cart.json",      "pendulum_cart_drag.json",        "pendulum_cart_controlled.json"};
const std::vector<std::string> kBaseSystems = {"free_particle.json", "harmonic_oscillator.json", "central_force.json",
                                               "pendulum_cart.json"};
const std::vector<std::string> kReducible = {"free_particle.json", "central_force.json", "central_force_drag.json",
                                             "pendulum_cart.json", "pendulum_cart_drag.json"};
const std::vector<std::string> kPairs = {"ho_scaling_pair.json", "ho_scaling_bad.json", "translation_pair.json",
                                         "translation_bad.json"};

sysdef::SystemModel load(const std::string& f) { return sysdef::load_system_file(kData / f); }
sysdef::PairModel load_pair(const std::string& f) { return sysdef::load_pair_file(kData / f); }

// Every system model in the corpus, pair members included.
std::vector<std::pair<std::string, sysdef::SystemModel>> all_models() {
  std::vector<std::pair<std::string, sysdef::SystemModel>> out;
  for (const auto& f : kSystemFiles) out.emplace_back(f, load(f));
  for (const auto& f : kPairs) {
    auto p = load_pair(f);
    out.emplace_back(f + ":a", std::move(p.a));
    out.emplace_back(f + ":b", std::move(p.b));
  }
  return out;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "failed: ";
      else detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// Runs a check on every entry and reports the worst residual.
template <class Range, class Fn>
void over(Outcome& o, const Range& items, Fn check) {
  double worst = 0.0;
  for (const auto& [name, item] : items) {
    const CheckResult r = check(item);
    if (!(r.max_residual <= worst)) worst = r.max_residual;
    o.require(r.pass, name + " " + r.id + " residual " + fmt(r.max_residual));
  }
  if (o.pass) o.detail << "worst residual " << fmt(worst);
}

std::vector<std::pair<std::string, sysdef::SystemModel>> named(const std::vector<std::string>& files) {
  std::vector<std::pair<std::string, sysdef::SystemModel>> out;
  for (const auto& f : files) out.emplace_back(f, load(f));
  return out;
}

std::vector<std::pair<std::string, ReducedSystem>> reduced_corpus() {
  std::vector<std::pair<std::string, ReducedSystem>> out;
  for (const auto& f : kReducible) {
    const auto m = load(f);
    out.emplace_back(f, point_reduce(m.rcl, *m.symmetry, *m.mu));
  }
  for (const char* f : {"translation_pair.json"}) {
    const auto p = load_pair(f);
    out.emplace_back(std::string(f) + ":a", point_reduce(p.a.rcl, *p.a.symmetry, *p.mu_a));
    out.emplace_back(std::string(f) + ":b", point_reduce(p.b.rcl, *p.b.symmetry, *p.mu_b));
  }
  return out;
}

// Automatic derivatives against central differences --------------------------

struct ExprCase {
  std::string where;
  expr::Expression e;
  std::vector<double> params;
  std::vector<Interval> box;  // one interval per active variable
};

double rel_error(const Mat& ad, const Mat& fd) {
  const double scale = std::max(ad.cwiseAbs().maxCoeff(), 1.0);
  return (ad - fd).cwiseAbs().maxCoeff() / scale;
}

std::vector<ExprCase> shipped_expressions() {
  std::vector<ExprCase> out;
  auto add_system = [&](const std::string& where, const sysdef::SystemModel& m) {
    const auto& L = m.lagrangian();
    std::vector<Interval> box = L.space().q_box();
    box.insert(box.end(), L.space().qdot_box().begin(), L.space().qdot_box().end());
    const std::vector<double> params(L.params().begin(), L.params().end());
    auto add = [&](const std::string& label, const std::string& text) {
      out.push_back({where + " " + label, L.parse(text), params, box});
    };
    const Json& s = m.source;
    add("lagrangian", s.at("lagrangian").get<std::string>());
    if (s.contains("force"))
      for (const auto& t : s["force"]) add("force", t.get<std::string>());
    if (s.contains("law"))
      for (const auto& t : s["law"]) add("law", t.get<std::string>());
    if (s.contains("control") && s["control"].contains("offset"))
      for (const auto& t : s["control"]["offset"]) add("offset", t.get<std::string>());
  };
  auto add_map = [&](const std::string& where, const PointMap& map) {
    const auto& table = map.source_table();
    const std::vector<double> params(table.param_values().begin(), table.param_values().end());
    for (const auto& e : map.forward_expressions()) out.push_back({where, e, params, map.source().q_box()});
  };
  for (const auto& f : kSystemFiles) add_system(f, load(f));
  for (const auto& f : kPairs) {
    const auto p = load_pair(f);
    add_system(f + ":a", p.a);
    add_system(f + ":b", p.b);
    add_map(f + " map", p.map);
    add_map(f + " inverse", p.map.inverse());
  }
  return out;
}

// CLI helpers -------------------------------------------------------------------

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(RCLAB_BINARY) + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Json report_without_clock(const fs::path& p) {
  Json j = sysdef::read_json_file(p);
  j.erase("wallclock");
  return j;
}

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / "rclab_acceptance";
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// Criteria ------------------------------------------------------------------------

using Criterion = std::function<void(Outcome&)>;

void legendre_round_trip(Outcome& o) {
  over(o, named(kBaseSystems), [](const auto& m) { return check_legendre_round_trip(m.lagrangian(), 200, 0, 1e-10); });
}

void two_form(Outcome& o) {
  over(o, named(kBaseSystems), [](const auto& m) { return check_two_form_consistency(m.lagrangian(), 100, 0, 1e-10); });
}

void dual_derivation(Outcome& o) {
  over(o, named(kBaseSystems), [](const auto& m) { return check_dual_derivation(m.lagrangian(), 200, 0, 1e-9); });
}

void second_order(Outcome& o) {
  for (const auto& [name, m] : all_models()) {
    const auto& sp = m.rcl.space();
    const auto free = check_second_order(euler_lagrange_field(m.lagrangian()), sp, 200, 0, 0.0);
    o.require(free.pass && free.max_residual == 0.0, name + " xi_L");
    const auto ctl = check_second_order(controlled_field(m.rcl), sp, 200, 0, 0.0);
    o.require(ctl.pass && ctl.max_residual == 0.0, name + " controlled field");
  }
  for (const auto& [name, red] : reduced_corpus()) {
    const auto r = check_reduced_second_order(red, 200, 0);
    o.require(r.pass && r.max_residual == 0.0, name + " reduced field");
  }
  if (o.pass) o.detail << "all dq-residuals exactly 0";
}

void fl_related(Outcome& o) {
  over(o, named(kBaseSystems), [](const auto& m) { return check_fl_related(m.lagrangian(), 100, 0, 1e-8); });
}

void drift(Outcome& o) {
  double worst = 0.0;
  for (const auto& f : kBaseSystems) {
    const auto m = load(f);
    const auto d = check_drift(m.lagrangian(), m.symmetry ? &*m.symmetry : nullptr, m.initial_state(), 10.0, 1e-3, 1e-6);
    o.require(!d.blew_up && d.energy.pass, f + " energy drift " + fmt(d.energy.max_residual));
    o.require(!d.momentum.applicable || d.momentum.pass, f + " momentum drift " + fmt(d.momentum.max_residual));
    worst = std::max({worst, d.energy.max_residual, d.momentum.applicable ? d.momentum.max_residual : 0.0});
  }
  if (o.pass) o.detail << "worst drift " << fmt(worst);
}

void oscillator_period(Outcome& o) {
  const auto m = load("harmonic_oscillator.json");
  const TangentPoint v0 = m.initial_state();
  const auto traj = integrate(euler_lagrange_field(m.lagrangian()), v0, 2 * std::numbers::pi, 1e-3);
  const double err = (traj.states.back().stacked() - v0.stacked()).cwiseAbs().maxCoeff();
  o.require(!traj.blew_up && err <= 1e-6, "return error " + fmt(err));
  if (o.pass) o.detail << "return error " << fmt(err);
}

void central_oracle(Outcome& o) {
  const auto m = load("central_force.json");
  const auto red = point_reduce(m.rcl, *m.symmetry, *m.mu);
  Sampler s(0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto x = s.tangent(red.space());
    const double r = x.q[0];
    const auto xi = red.field_vector(x);
    worst = std::max({worst, std::fabs(xi.dq[0] - x.qdot[0]), std::fabs(xi.dqdot[0] - (1 / (r * r * r) - 1 / (r * r)))});
  }
  o.require(worst <= 1e-9, "oracle residual " + fmt(worst));
  TangentPoint fixed{Vec::Constant(1, 1.0), Vec::Zero(1)};
  const double at_fixed = red.field_vector(fixed).stacked().cwiseAbs().maxCoeff();
  o.require(at_fixed <= 1e-12, "field at r = 1 is " + fmt(at_fixed));
  if (o.pass) o.detail << "oracle residual " << fmt(worst) << ", fixed point " << fmt(at_fixed);
}

void section_independence(Outcome& o) {
  over(o, reduced_corpus(), [](const ReducedSystem& r) { return check_section_independence(r, 100, 0, 1e-9); });
}

void commutation(Outcome& o) {
  double worst_flow = 0.0;
  over(o, reduced_corpus(), [&](const ReducedSystem& r) {
    const auto flow = check_flow_commutation(r, anchor_points(r.space()).front(), 5.0, 1e-3, 1e-5);
    o.require(flow.pass, "flow residual " + fmt(flow.max_residual));
    worst_flow = std::max(worst_flow, flow.max_residual);
    return check_commutation(r, 200, 0, 1e-8);
  });
  if (o.pass) o.detail << ", worst flow residual " << fmt(worst_flow);
}

void reduced_legendre(Outcome& o) {
  for (const auto& [name, red] : reduced_corpus()) {
    for (const auto& c : check_reduced_legendre(red, 100, 0, 1e-8))
      o.require(c.pass, name + " " + c.id + " residual " + fmt(c.max_residual));
  }
  for (const auto& f : kReducible) {
    const auto m = load(f);
    const auto orbit = orbit_reduce(m.rcl, *m.symmetry, *m.mu);
    o.require(orbit.correction.max_residual == 0.0, f + " orbit correction " + fmt(orbit.correction.max_residual));
  }
  if (o.pass) o.detail << "reduced Legendre within 1e-8, orbit corrections exactly 0";
}

void coadjoint(Outcome& o) {
  const auto so3 = SymmetrySpec::so3();
  o.require(so3.antisymmetry_defect() == 0.0 && so3.jacobi_defect() == 0.0, "so(3) constants");
  Vec e1 = Vec::Zero(3), e2 = Vec::Zero(3), e3 = Vec::Zero(3);
  e1[0] = e2[1] = e3[2] = 1.0;
  o.require(coadjoint_plus_form(so3, e3, e1, e2) == 1.0, "form(e3*, e1, e2) != 1");
  Sampler s(0);
  double worst = 0.0, abelian = 0.0, antisym = 0.0;
  const auto ab = SymmetrySpec::algebra(3, std::vector<double>(27, 0.0));
  for (int i = 0; i < 200; ++i) {
    const Vec nu = s.uniform_vector(3, -2, 2), xi = s.uniform_vector(3, -2, 2), eta = s.uniform_vector(3, -2, 2);
    const double f = coadjoint_plus_form(so3, nu, xi, eta);
    worst = std::max(worst, std::fabs(f - nu.dot(Eigen::Vector3d(xi).cross(Eigen::Vector3d(eta)))));
    antisym = std::max(antisym, std::fabs(f + coadjoint_plus_form(so3, nu, eta, xi)));
    abelian = std::max(abelian, std::fabs(coadjoint_plus_form(ab, nu, xi, eta)));
  }
  o.require(worst <= 1e-14, "so(3) vs cross product " + fmt(worst));
  o.require(antisym == 0.0, "antisymmetry " + fmt(antisym));
  o.require(abelian == 0.0, "abelian form " + fmt(abelian));
  if (o.pass) o.detail << "so(3) residual " << fmt(worst) << ", abelian exactly 0";
}

void pair_equivalence(Outcome& o) {
  SuiteOptions opts;
  for (const auto& f : kPairs) {
    const bool good = f.find("bad") == std::string::npos;
    const auto pair = load_pair(f);
    for (auto kind : {EquivalenceKind::Rcl, EquivalenceKind::Rpcl, EquivalenceKind::Rocl}) {
      const auto checks = run_equivalence(pair, kind, opts);
      double worst = 0.0;
      for (const auto& c : checks)
        if (c.applicable && c.gating && std::isfinite(c.max_residual)) worst = std::max(worst, c.max_residual);
      if (good) o.require(sysdef::all_pass(checks) && worst <= 1e-8, f + " should be equivalent");
      else o.require(!sysdef::all_pass(checks) && worst > 1e-3, f + " should be rejected with residual > 1e-3");
    }
    for (auto kind : {EquivalenceKind::Thm43, EquivalenceKind::Thm44, EquivalenceKind::Thm53, EquivalenceKind::Thm54}) {
      bool agreed = false;
      for (const auto& c : run_equivalence(pair, kind, opts))
        if (c.id == "harness.agreement") agreed = c.pass;
      o.require(agreed, f + " theorem verdicts disagree");
    }
  }
  if (o.pass) o.detail << "good pairs accepted, bad pairs rejected, verdicts agree";
}

void automatic_derivatives(Outcome& o) {
  Sampler s(0);
  double worst_g = 0.0, worst_h = 0.0;
  std::size_t count = 0;
  for (const auto& c : shipped_expressions()) {
    ++count;
    const std::size_t n = c.box.size();
    for (int k = 0; k < 100; ++k) {
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = s.uniform(c.box[i].lower, c.box[i].upper);
      const auto ad = expr::eval2(c.e, x, c.params);
      Vec g(static_cast<Eigen::Index>(n));
      Mat h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        auto xp = x, xm = x;
        xp[i] += 1e-6;
        xm[i] -= 1e-6;
        g[static_cast<Eigen::Index>(i)] = (expr::evaluate(c.e, xp, c.params) - expr::evaluate(c.e, xm, c.params)) / 2e-6;
        xp = x;
        xm = x;
        xp[i] += 1e-5;
        xm[i] -= 1e-5;
        h.col(static_cast<Eigen::Index>(i)) =
            (expr::eval2(c.e, xp, c.params).gradient - expr::eval2(c.e, xm, c.params).gradient) / 2e-5;
      }
      const double eg = rel_error(ad.gradient, g), eh = rel_error(ad.hessian, h);
      worst_g = std::max(worst_g, eg);
      worst_h = std::max(worst_h, eh);
      if (!(eg <= 1e-6) || !(eh <= 1e-4)) {
        o.require(false, c.where + " gradient " + fmt(eg) + " Hessian " + fmt(eh));
        break;
      }
    }
  }
  if (o.pass) o.detail << count << " expressions, gradient " << fmt(worst_g) << ", Hessian " << fmt(worst_h);
}

void cli(Outcome& o) {
  const fs::path dir = scratch_dir();
  const fs::path r1 = dir / "r1.json", r2 = dir / "r2.json";
  for (const auto& f : kSystemFiles) {
    const int expected = (f == "harmonic_oscillator_cyclic.json" || f == "central_force_spin_drag.json") ? 1 : 0;
    const std::string args = "check '" + (kData / f).string() + "' --suite all --out ";
    const int e1 = run(args + "'" + r1.string() + "'");
    const int e2 = run(args + "'" + r2.string() + "'");
    o.require(e1 == expected && e2 == expected, f + " check exit " + std::to_string(e1));
    o.require(report_without_clock(r1) == report_without_clock(r2), f + " report not deterministic");
  }
  for (const auto& f : kPairs) {
    const int expected = f.find("bad") == std::string::npos ? 0 : 1;
    const int e = run("equivalence '" + (kData / f).string() + "' --kind rpcl --out '" + r1.string() + "'");
    o.require(e == expected, f + " equivalence exit " + std::to_string(e));
  }

  const fs::path malformed = dir / "malformed.json", degenerate = dir / "degenerate.json", quartic = dir / "quartic.json";
  write(malformed, "{\"name\": \"x\",\n  \"space\": }\n");
  const std::string space =
      R"("space": {"coords": ["q"], "periodic": [false], "box": {"q": [[-1, 1]], "qdot": [[-1, 1]]}})";
  write(degenerate, "{\"name\": \"degenerate\", " + space + ", \"lagrangian\": \"-q^2/2\"}");
  write(quartic, "{\"name\": \"quartic\", " + space + ", \"lagrangian\": \"q_dot^2/2 + q^4\"}");
  auto expect = [&](const std::string& what, int got, int want) {
    o.require(got == want, what + " exit " + std::to_string(got) + " (want " + std::to_string(want) + ")");
  };
  expect("malformed JSON", run("validate '" + malformed.string() + "'"), 2);
  expect("hyperregularity failure", run("validate '" + degenerate.string() + "'"), 2);
  expect("blow-up", run("simulate '" + quartic.string() + "' --state 1,0 --t1 10 --out '" + (dir / "t.csv").string() + "'"), 3);
  expect("reduction without symmetry",
         run("check '" + (kData / "harmonic_oscillator.json").string() + "' --suite reduction"), 4);
  expect("irreducible", run("reduce '" + (kData / "central_force_spin_drag.json").string() + "' --mu 1"), 5);
  const int seeded = run("check '" + (kData / "free_particle.json").string() + "' --suite legendre --out '" + r1.string() + "'",
                         "RCLAB_SEED=4242");
  o.require(seeded == 0 && sysdef::read_json_file(r1)["seed"] == 4242, "RCLAB_SEED not honoured");
  if (o.pass) o.detail << "reports reproducible, exit codes 0-5 as specified";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Criterion>> criteria = {
      {"Legendre round trip", legendre_round_trip},
      {"two-form consistency", two_form},
      {"dual derivation", dual_derivation},
      {"second-order fields", second_order},
      {"FL-relatedness", fl_related},
      {"energy and momentum drift", drift},
      {"oscillator period", oscillator_period},
      {"central force reduced oracle", central_oracle},
      {"section independence", section_independence},
      {"reduction commutes with the flow", commutation},
      {"reduced Legendre and orbit correction", reduced_legendre},
      {"coadjoint form", coadjoint},
      {"pair equivalence", pair_equivalence},
      {"automatic derivatives", automatic_derivatives},
      {"CLI determinism and exit codes", cli},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.str().c_str());
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
