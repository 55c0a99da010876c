// rclab: validate, simulate, check, compare and reduce system files.
//
// Exit codes: 0 all checks pass, 1 check failures, 2 validation errors,
// 3 integration blow-up, 4 inapplicable suite, 5 irreducible system.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rclab/error.hpp"
#include "rclab/suites.hpp"
#include "rclab/sysdef.hpp"

namespace fs = std::filesystem;
using namespace rclab;

namespace {

enum Exit { kPass = 0, kFail = 1, kInvalid = 2, kBlowUp = 3, kInapplicable = 4, kIrreducible = 5 };

std::uint64_t default_seed() {
  const char* env = std::getenv("RCLAB_SEED");
  if (!env || !*env) return 0;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError(std::string("RCLAB_SEED is not an unsigned integer: '") + env + "'");
  }
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    sysdef::write_file_atomic(out, text);
  }
}

std::string format_check_line(const CheckResult& c) {
  std::ostringstream os;
  os.precision(3);
  os << (!c.applicable ? "SKIP" : c.pass ? "PASS" : "FAIL") << "  " << c.id << "  residual " << c.max_residual;
  if (!c.note.empty()) os << "  (" << c.note << ")";
  return os.str();
}

std::string vec_text(const Vec& v) {
  std::ostringstream os;
  os.precision(6);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  return os.str();
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

int cmd_validate(const std::string& path, std::uint64_t seed) {
  const auto doc = sysdef::read_json_file(path);
  std::vector<CheckResult> checks;
  switch (sysdef::file_kind(doc)) {
    case sysdef::FileKind::System:
      checks = validation_checks(sysdef::load_system(doc, path), seed);
      break;
    case sysdef::FileKind::Reduced: {
      const auto red = sysdef::load_reduced(doc, path, fs::path(path).parent_path());
      checks = validation_checks(red.parent, seed);
      for (const auto& c : red.reduced.certificates()) checks.push_back(c);
      break;
    }
    case sysdef::FileKind::Pair: {
      const auto pair = sysdef::load_pair(doc, path, fs::path(path).parent_path());
      checks = validation_checks(pair.a, seed);
      for (auto& c : validation_checks(pair.b, seed)) checks.push_back(c);
      break;
    }
  }
  bool ok = true;
  for (const auto& c : checks) {
    std::cout << format_check_line(c) << "\n";
    if (c.applicable && c.gating && !c.pass) {
      ok = false;
      std::cerr << path << ": " << c.id << " failed";
      if (c.witness) std::cerr << " at (" << vec_text(*c.witness) << ")";
      std::cerr << "\n";
    }
  }
  std::cout << (ok ? "valid: " : "invalid: ") << path << "\n";
  return ok ? kPass : kInvalid;
}

struct SimulateOptions {
  std::vector<double> state;
  double t1 = 10.0;
  double dt = 1e-3;
  std::string out;
};

TangentPoint parse_state(const std::vector<double>& values, std::size_t n) {
  if (values.size() != 2 * n) {
    throw ValidationError("--state needs " + std::to_string(2 * n) + " values (positions then velocities)");
  }
  TangentPoint v{Vec(n), Vec(n)};
  for (std::size_t i = 0; i < n; ++i) {
    v.q[static_cast<Eigen::Index>(i)] = values[i];
    v.qdot[static_cast<Eigen::Index>(i)] = values[n + i];
  }
  return v;
}

int cmd_simulate(const std::string& path, const SimulateOptions& opt) {
  const auto doc = sysdef::read_json_file(path);
  std::optional<sysdef::SystemModel> sys;
  std::optional<sysdef::ReducedModel> red;
  switch (sysdef::file_kind(doc)) {
    case sysdef::FileKind::System:
      sys.emplace(sysdef::load_system(doc, path));
      break;
    case sysdef::FileKind::Reduced:
      red.emplace(sysdef::load_reduced(doc, path, fs::path(path).parent_path()));
      break;
    case sysdef::FileKind::Pair:
      throw ValidationError(path + ": simulate needs a system or reduced file");
  }
  const ConfigSpace& space = sys ? sys->rcl.space() : red->reduced.space();
  const std::size_t n = space.dim();

  TangentPoint v0;
  if (!opt.state.empty()) {
    v0 = parse_state(opt.state, n);
  } else if (sys) {
    v0 = sys->initial_state();
  } else {
    v0 = anchor_points(space).front();
  }

  Monitors mon;
  std::vector<std::string> momentum_names;
  VectorFieldOnTQ field;
  if (sys) {
    const LagrangianSystem& L = sys->lagrangian();
    field = controlled_field(sys->rcl);
    mon.energy = [&L](const TangentPoint& v) { return action_energy(L, v).energy; };
    if (sys->symmetry && sys->symmetry->is_translation() && !sys->symmetry->cyclic().empty()) {
      const SymmetrySpec& spec = *sys->symmetry;
      for (auto c : spec.cyclic()) momentum_names.push_back("J_" + space.names()[c]);
      mon.momentum = [&L, &spec](const TangentPoint& v) { return momentum_map_lagrangian(spec, L, v); };
    }
  } else {
    const ReducedSystem& r = red->reduced;
    field = r.field();
    mon.energy = [&r](const TangentPoint& x) { return r.energy(x); };
  }

  const Trajectory traj = integrate(field, v0, opt.t1, opt.dt, mon, &space);

  std::string csv;
  csv += "t";
  for (const auto& name : space.names()) csv += "," + name;
  for (const auto& name : space.names()) csv += "," + name + "_dot";
  csv += ",E_L";
  for (const auto& name : momentum_names) csv += "," + name;
  csv += "\n";
  char buf[64];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, ",%.17g", x);
    csv += buf;
  };
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.times[i]);
    csv += buf;
    for (Eigen::Index k = 0; k < traj.states[i].q.size(); ++k) put(traj.states[i].q[k]);
    for (Eigen::Index k = 0; k < traj.states[i].qdot.size(); ++k) put(traj.states[i].qdot[k]);
    put(traj.energy[i]);
    if (!traj.momentum.empty()) {
      for (Eigen::Index k = 0; k < traj.momentum[i].size(); ++k) put(traj.momentum[i][k]);
    }
    csv += "\n";
  }
  emit(csv, opt.out);
  if (traj.blew_up) {
    std::cerr << path << ": integration blew up after t = " << traj.times.back() << "\n";
    return kBlowUp;
  }
  return kPass;
}

struct CheckOptions {
  std::string suite = "all";
  std::optional<std::size_t> samples;
  std::optional<double> tol;
  std::vector<double> mu;
  std::string out;
};

SuiteOptions suite_options(const std::optional<std::size_t>& samples, std::uint64_t seed,
                           const std::optional<double>& tol, const std::vector<double>& mu) {
  SuiteOptions s;
  s.samples = samples;
  s.seed = seed;
  s.tol = tol;
  if (!mu.empty()) s.mu = Eigen::Map<const Vec>(mu.data(), static_cast<Eigen::Index>(mu.size()));
  return s;
}

int finish_report(const sysdef::ReportHeader& header, const std::vector<CheckResult>& checks, const Timer& timer,
                  const std::string& out) {
  const auto report = sysdef::make_report(header, checks, timer.seconds());
  emit(report.dump(2) + "\n", out);
  for (const auto& c : checks) {
    if (c.applicable && c.gating && !c.pass) std::cerr << format_check_line(c) << "\n";
  }
  return sysdef::all_pass(checks) ? kPass : kFail;
}

int cmd_check(const std::string& path, const CheckOptions& opt, std::uint64_t seed) {
  const Timer timer;
  const Suite suite = parse_suite(opt.suite);
  const auto doc = sysdef::read_json_file(path);
  const SuiteOptions so = suite_options(opt.samples, seed, opt.tol, opt.mu);
  std::vector<CheckResult> checks;
  switch (sysdef::file_kind(doc)) {
    case sysdef::FileKind::System:
      checks = run_suite(sysdef::load_system(doc, path), suite, so);
      break;
    case sysdef::FileKind::Reduced:
      checks = run_suite(sysdef::load_reduced(doc, path, fs::path(path).parent_path()), suite, so);
      break;
    case sysdef::FileKind::Pair:
      throw InapplicableError(path + ": check suites apply to system and reduced files; use 'equivalence'");
  }
  return finish_report({"check", path, opt.suite, seed, opt.samples, opt.tol}, checks, timer, opt.out);
}

struct EquivalenceOptions {
  std::string kind = "rcl";
  std::optional<std::size_t> samples;
  std::optional<double> tol;
  std::string out;
};

int cmd_equivalence(const std::string& path, const EquivalenceOptions& opt, std::uint64_t seed) {
  const Timer timer;
  const EquivalenceKind kind = parse_equivalence_kind(opt.kind);
  const auto pair = sysdef::load_pair_file(path);
  const auto checks = run_equivalence(pair, kind, suite_options(opt.samples, seed, opt.tol, {}));
  return finish_report({"equivalence", path, opt.kind, seed, opt.samples, opt.tol}, checks, timer, opt.out);
}

int cmd_reduce(const std::string& path, const std::vector<double>& mu_values, const std::string& out,
               std::uint64_t seed) {
  const auto model = sysdef::load_system_file(path);
  if (!model.symmetry || !model.symmetry->is_translation()) {
    throw InapplicableError(path + ": reduce needs a cyclic-coordinate symmetry");
  }
  std::optional<Vec> mu = model.mu;
  if (!mu_values.empty()) mu = Eigen::Map<const Vec>(mu_values.data(), static_cast<Eigen::Index>(mu_values.size()));
  if (!mu) throw ValidationError(path + ": reduce needs --mu or a 'mu' field");
  ReductionOptions ropt;
  ropt.seed = seed;
  const ReducedSystem red = point_reduce(model.rcl, *model.symmetry, *mu, ropt);
  emit(sysdef::reduced_to_json(red, model).dump(2) + "\n", out);
  for (const auto& note : red.notes()) std::cerr << "note: " << note << "\n";
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certify geometric-mechanics identities on controlled Lagrangian systems"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed_flag;

  std::string path;
  auto* validate = app.add_subcommand("validate", "Check a system, reduced or pair file");
  validate->add_option("path", path, "File to validate")->required();
  validate->add_option("--seed", seed_flag, "Sampling seed");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Integrate the controlled field and write a CSV trajectory");
  simulate->add_option("path", path, "System or reduced file")->required();
  simulate->add_option("--state", sim.state, "Initial state: positions then velocities")->delimiter(',');
  simulate->add_option("--t1", sim.t1, "Final time")->check(CLI::PositiveNumber);
  simulate->add_option("--dt", sim.dt, "Step size")->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim.out, "Output CSV (stdout by default)");

  CheckOptions chk;
  auto* check = app.add_subcommand("check", "Run a check suite and emit a JSON report");
  check->add_option("path", path, "System or reduced file")->required();
  check->add_option("--suite", chk.suite, "legendre|dynamics|noether|reduction|all");
  check->add_option("--samples", chk.samples, "Samples per check (overrides defaults)");
  check->add_option("--seed", seed_flag, "Sampling seed");
  check->add_option("--tol", chk.tol, "Tolerance for every check (overrides defaults)");
  check->add_option("--mu", chk.mu, "Momentum value for the reduction suite")->delimiter(',');
  check->add_option("--out", chk.out, "Report file (stdout by default)");

  EquivalenceOptions eq;
  auto* equivalence = app.add_subcommand("equivalence", "Compare the two systems of a pair file");
  equivalence->add_option("path", path, "Pair file")->required();
  equivalence->add_option("--kind", eq.kind, "rcl|rpcl|rocl|thm43|thm44|thm53|thm54");
  equivalence->add_option("--samples", eq.samples, "Samples per check (overrides defaults)");
  equivalence->add_option("--seed", seed_flag, "Sampling seed");
  equivalence->add_option("--tol", eq.tol, "Tolerance for every check");
  equivalence->add_option("--out", eq.out, "Report file (stdout by default)");

  std::vector<double> mu;
  std::string reduce_out;
  auto* reduce = app.add_subcommand("reduce", "Emit the reduced system at a momentum value");
  reduce->add_option("path", path, "System file")->required();
  reduce->add_option("--mu", mu, "Momentum value, comma separated")->delimiter(',');
  reduce->add_option("--seed", seed_flag, "Sampling seed for the certificates");
  reduce->add_option("--out", reduce_out, "Output file (stdout by default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    const std::uint64_t seed = seed_flag ? *seed_flag : default_seed();
    if (*validate) return cmd_validate(path, seed);
    if (*simulate) return cmd_simulate(path, sim);
    if (*check) return cmd_check(path, chk, seed);
    if (*equivalence) return cmd_equivalence(path, eq, seed);
    if (*reduce) return cmd_reduce(path, mu, reduce_out, seed);
  } catch (const IrreducibleError& e) {
    std::cerr << "irreducible: " << e.what() << "\n";
    return kIrreducible;
  } catch (const InapplicableError& e) {
    std::cerr << "inapplicable: " << e.what() << "\n";
    return kInapplicable;
  } catch (const UnsupportedError& e) {
    std::cerr << "inapplicable: " << e.what() << "\n";
    return kInapplicable;
  } catch (const ValidationError& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return kInvalid;
  } catch (const ParseError& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kFail;
}
