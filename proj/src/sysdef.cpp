#include "rclab/sysdef.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "rclab/error.hpp"

namespace rclab::sysdef {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& pointer, const std::string& message) {
  throw ValidationError(where + ": " + (pointer.empty() ? "/" : pointer) + ": " + message);
}

std::string child(const std::string& pointer, const std::string& key) { return pointer + "/" + key; }
std::string child(const std::string& pointer, std::size_t index) { return pointer + "/" + std::to_string(index); }

void require_object(const Json& j, const std::string& where, const std::string& ptr) {
  if (!j.is_object()) fail(where, ptr, "expected an object");
}

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where,
                    const std::string& ptr) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(where, child(ptr, key), "unknown field");
  }
}

const Json& required(const Json& j, const std::string& key, const std::string& where, const std::string& ptr) {
  auto it = j.find(key);
  if (it == j.end()) fail(where, child(ptr, key), "required field missing");
  return *it;
}

double number(const Json& j, const std::string& where, const std::string& ptr) {
  if (!j.is_number()) fail(where, ptr, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, ptr, "expected a finite number");
  return v;
}

std::string string_value(const Json& j, const std::string& where, const std::string& ptr) {
  if (!j.is_string()) fail(where, ptr, "expected a string");
  return j.get<std::string>();
}

std::vector<std::string> string_array(const Json& j, const std::string& where, const std::string& ptr) {
  if (!j.is_array()) fail(where, ptr, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(string_value(j[i], where, child(ptr, i)));
  return out;
}

Vec number_array(const Json& j, const std::string& where, const std::string& ptr,
                 std::optional<std::size_t> expected = std::nullopt) {
  if (!j.is_array()) fail(where, ptr, "expected an array of numbers");
  if (expected && j.size() != *expected) {
    fail(where, ptr, "expected " + std::to_string(*expected) + " entries, got " + std::to_string(j.size()));
  }
  Vec out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) out[static_cast<Eigen::Index>(i)] = number(j[i], where, child(ptr, i));
  return out;
}

/// [lo, hi] with null standing for an infinite end.
Interval interval(const Json& j, const std::string& where, const std::string& ptr, bool allow_infinite) {
  if (!j.is_array() || j.size() != 2) fail(where, ptr, "expected [lower, upper]");
  auto end = [&](std::size_t i, double inf) {
    if (allow_infinite && j[i].is_null()) return inf;
    return number(j[i], where, child(ptr, i));
  };
  Interval out{end(0, -std::numeric_limits<double>::infinity()), end(1, std::numeric_limits<double>::infinity())};
  if (!(out.lower < out.upper)) fail(where, ptr, "needs lower < upper");
  return out;
}

std::vector<Interval> interval_array(const Json& j, const std::string& where, const std::string& ptr,
                                     std::size_t expected, bool allow_infinite) {
  if (!j.is_array()) fail(where, ptr, "expected an array of intervals");
  if (j.size() != expected) {
    fail(where, ptr, "expected " + std::to_string(expected) + " intervals, got " + std::to_string(j.size()));
  }
  std::vector<Interval> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(interval(j[i], where, child(ptr, i), allow_infinite));
  return out;
}

std::size_t coordinate_index(const ConfigSpace& space, const Json& j, const std::string& where,
                             const std::string& ptr) {
  const std::string name = string_value(j, where, ptr);
  const auto idx = space.index_of(name);
  if (!idx) fail(where, ptr, "unknown coordinate '" + name + "'");
  return *idx;
}

ConfigSpace load_space(const Json& j, const std::string& where, const std::string& ptr) {
  require_object(j, where, ptr);
  reject_unknown(j, {"coords", "periodic", "box"}, where, ptr);
  const auto coords = string_array(required(j, "coords", where, ptr), where, child(ptr, "coords"));
  if (coords.empty()) fail(where, child(ptr, "coords"), "at least one coordinate is required");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto& c = coords[i];
    const auto p = child(child(ptr, "coords"), i);
    if (c.empty() || !(std::isalpha(static_cast<unsigned char>(c[0])) || c[0] == '_')) {
      fail(where, p, "coordinate names must be identifiers");
    }
    for (char ch : c) {
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')) fail(where, p, "coordinate names must be identifiers");
    }
    if (!seen.insert(c).second) fail(where, p, "duplicate coordinate '" + c + "'");
  }
  const std::size_t n = coords.size();
  std::vector<bool> periodic(n, false);
  if (auto it = j.find("periodic"); it != j.end()) {
    if (!it->is_array() || it->size() != n) fail(where, child(ptr, "periodic"), "expected one boolean per coordinate");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(*it)[i].is_boolean()) fail(where, child(child(ptr, "periodic"), i), "expected a boolean");
      periodic[i] = (*it)[i].get<bool>();
    }
  }
  const auto bptr = child(ptr, "box");
  const Json& box = required(j, "box", where, ptr);
  require_object(box, where, bptr);
  reject_unknown(box, {"q", "qdot"}, where, bptr);
  auto qb = interval_array(required(box, "q", where, bptr), where, child(bptr, "q"), n, false);
  auto vb = interval_array(required(box, "qdot", where, bptr), where, child(bptr, "qdot"), n, false);
  return ConfigSpace(coords, periodic, std::move(qb), std::move(vb));
}

std::vector<std::pair<std::string, double>> load_params(const Json& doc, const ConfigSpace& space,
                                                        const std::string& where) {
  std::vector<std::pair<std::string, double>> params;
  auto it = doc.find("params");
  if (it == doc.end()) return params;
  require_object(*it, where, "/params");
  std::set<std::string> reserved{"pi", "sin", "cos", "tan", "exp", "log", "sqrt"};
  for (const auto& c : space.names()) {
    reserved.insert(c);
    reserved.insert(expr::SymbolTable::velocity_name(c));
  }
  for (const auto& [key, value] : it->items()) {
    if (reserved.count(key)) fail(where, child("/params", key), "parameter name clashes with a coordinate or builtin");
    params.emplace_back(key, number(value, where, child("/params", key)));
  }
  return params;
}

Tolerances load_tolerances(const Json& doc, const std::string& where) {
  Tolerances tol;
  auto it = doc.find("tolerances");
  if (it == doc.end()) return tol;
  const std::string ptr = "/tolerances";
  require_object(*it, where, ptr);
  reject_unknown(*it, {"hyperreg_min", "hyperreg_samples", "newton_tol", "newton_max_iter"}, where, ptr);
  auto positive = [&](const char* key) {
    const double v = number((*it)[key], where, child(ptr, key));
    if (!(v > 0)) fail(where, child(ptr, key), "must be positive");
    return v;
  };
  auto count = [&](const char* key) {
    const auto& v = (*it)[key];
    if (!v.is_number_integer() || v.get<long long>() <= 0) fail(where, child(ptr, key), "expected a positive integer");
    return v.get<long long>();
  };
  if (it->contains("hyperreg_min")) tol.hyperreg_min = positive("hyperreg_min");
  if (it->contains("newton_tol")) tol.newton_tol = positive("newton_tol");
  if (it->contains("hyperreg_samples")) tol.hyperreg_samples = static_cast<std::size_t>(count("hyperreg_samples"));
  if (it->contains("newton_max_iter")) tol.newton_max_iter = static_cast<int>(count("newton_max_iter"));
  return tol;
}

/// Parses expression components; parse and domain errors are reported at their pointer.
std::vector<std::string> expression_array(const Json& j, const LagrangianSystem& sys, std::size_t expected,
                                          const std::string& where, const std::string& ptr) {
  const auto texts = string_array(j, where, ptr);
  if (texts.size() != expected) {
    fail(where, ptr, "expected " + std::to_string(expected) + " components, got " + std::to_string(texts.size()));
  }
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      (void)sys.parse(texts[i]);
    } catch (const Error& e) {
      fail(where, child(ptr, i), e.what());
    }
  }
  return texts;
}

std::optional<SymmetrySpec> load_symmetry(const Json& doc, const ConfigSpace& space, const std::string& where) {
  auto it = doc.find("symmetry");
  if (it == doc.end()) return std::nullopt;
  const std::string ptr = "/symmetry";
  require_object(*it, where, ptr);
  reject_unknown(*it, {"cyclic", "algebra"}, where, ptr);
  const bool has_cyclic = it->contains("cyclic");
  const bool has_algebra = it->contains("algebra");
  if (has_cyclic == has_algebra) fail(where, ptr, "expected exactly one of 'cyclic' or 'algebra'");
  if (has_cyclic) {
    const auto& list = (*it)["cyclic"];
    if (!list.is_array()) fail(where, child(ptr, "cyclic"), "expected an array of coordinate names");
    std::vector<std::size_t> cyclic;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto p = child(child(ptr, "cyclic"), i);
      const auto idx = coordinate_index(space, list[i], where, p);
      if (std::find(cyclic.begin(), cyclic.end(), idx) != cyclic.end()) fail(where, p, "duplicate cyclic coordinate");
      cyclic.push_back(idx);
    }
    try {
      return SymmetrySpec::translation(space, cyclic);
    } catch (const Error& e) {
      fail(where, child(ptr, "cyclic"), e.what());
    }
  }
  const auto aptr = child(ptr, "algebra");
  const auto& alg = (*it)["algebra"];
  require_object(alg, where, aptr);
  reject_unknown(alg, {"dim", "structure_constants"}, where, aptr);
  const auto& d = required(alg, "dim", where, aptr);
  if (!d.is_number_integer() || d.get<long long>() <= 0) fail(where, child(aptr, "dim"), "expected a positive integer");
  const auto dim = static_cast<std::size_t>(d.get<long long>());
  const Vec c = number_array(required(alg, "structure_constants", where, aptr), where,
                             child(aptr, "structure_constants"), dim * dim * dim);
  try {
    return SymmetrySpec::algebra(dim, std::vector<double>(c.data(), c.data() + c.size()));
  } catch (const Error& e) {
    fail(where, child(aptr, "structure_constants"), e.what());
  }
}

std::optional<Vec> load_mu(const Json& doc, const char* key, std::optional<std::size_t> expected,
                           const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end()) return std::nullopt;
  return number_array(*it, where, std::string("/") + key, expected);
}

std::optional<std::size_t> momentum_dim(const std::optional<SymmetrySpec>& spec) {
  if (!spec) return std::nullopt;
  return spec->is_translation() ? spec->cyclic().size() : spec->dim();
}

Json vec_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) {
      out.push_back(v[i]);
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

Json space_json(const ConfigSpace& space) {
  Json q = Json::array(), qd = Json::array();
  for (std::size_t i = 0; i < space.dim(); ++i) {
    q.push_back({space.q_box()[i].lower, space.q_box()[i].upper});
    qd.push_back({space.qdot_box()[i].lower, space.qdot_box()[i].upper});
  }
  Json out;
  out["coords"] = space.names();
  out["periodic"] = space.periodic_flags();
  out["box"] = {{"q", q}, {"qdot", qd}};
  return out;
}

/// Resolves an inline object or a path relative to `base_dir`.
std::pair<Json, std::string> resolve_ref(const Json& ref, const std::string& where, const std::string& ptr,
                                         const std::filesystem::path& base_dir) {
  if (ref.is_object()) return {ref, where + ":" + ptr};
  if (!ref.is_string()) fail(where, ptr, "expected an inline object or a file path");
  const auto path = base_dir / ref.get<std::string>();
  return {read_json_file(path), path.string()};
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string() + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ValidationError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(column) +
                          ": malformed JSON");
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(tmp.string() + ": cannot open for writing");
    out << contents;
    if (!out) throw Error(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

FileKind file_kind(const Json& doc) {
  if (!doc.is_object()) throw ValidationError("top level must be a JSON object");
  auto it = doc.find("kind");
  if (it == doc.end()) return FileKind::System;
  if (!it->is_string()) throw ValidationError("/kind: expected a string");
  const auto k = it->get<std::string>();
  if (k == "system") return FileKind::System;
  if (k == "reduced") return FileKind::Reduced;
  if (k == "pair") return FileKind::Pair;
  throw ValidationError("/kind: expected 'system', 'reduced' or 'pair'");
}

TangentPoint SystemModel::initial_state() const {
  if (reference_state) return *reference_state;
  const auto& s = lagrangian().space();
  TangentPoint v{Vec(s.dim()), Vec(s.dim())};
  for (std::size_t i = 0; i < s.dim(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    v.q[k] = 0.5 * (s.q_box()[i].lower + s.q_box()[i].upper);
    v.qdot[k] = 0.5 * (s.qdot_box()[i].lower + s.qdot_box()[i].upper);
  }
  return v;
}

SystemModel load_system(const Json& doc, const std::string& where) {
  require_object(doc, where, "");
  reject_unknown(doc,
                 {"kind", "name", "description", "space", "params", "lagrangian", "force", "control", "law",
                  "symmetry", "mu", "reference_state", "tolerances"},
                 where, "");
  if (auto k = doc.find("kind"); k != doc.end() && (!k->is_string() || k->get<std::string>() != "system")) {
    fail(where, "/kind", "expected 'system'");
  }
  std::string name = "system";
  if (auto it = doc.find("name"); it != doc.end()) name = string_value(*it, where, "/name");
  if (auto it = doc.find("description"); it != doc.end()) (void)string_value(*it, where, "/description");

  const ConfigSpace space = load_space(required(doc, "space", where, ""), where, "/space");
  const std::size_t n = space.dim();
  auto params = load_params(doc, space, where);
  const Tolerances tol = load_tolerances(doc, where);
  const std::string lagrangian = string_value(required(doc, "lagrangian", where, ""), where, "/lagrangian");

  // Parse without certification first so expression errors are reported as such.
  try {
    (void)LagrangianSystem(space, lagrangian, params, tol, false);
  } catch (const Error& e) {
    fail(where, "/lagrangian", e.what());
  }
  std::optional<LagrangianSystem> sys;
  try {
    sys.emplace(space, lagrangian, params, tol, true);
  } catch (const ValidationError& e) {
    fail(where, "/lagrangian", e.what());
  }

  std::optional<FiberMap> force;
  if (auto it = doc.find("force"); it != doc.end()) force.emplace(*sys, expression_array(*it, *sys, n, where, "/force"));

  std::optional<ControlSubset> control;
  if (auto it = doc.find("control"); it != doc.end()) {
    const std::string ptr = "/control";
    require_object(*it, where, ptr);
    reject_unknown(*it, {"actuated", "offset", "bounds"}, where, ptr);
    const auto& act = required(*it, "actuated", where, ptr);
    if (!act.is_array() || act.empty()) fail(where, child(ptr, "actuated"), "expected a nonempty array of coordinate names");
    std::vector<std::size_t> actuated;
    for (std::size_t i = 0; i < act.size(); ++i) {
      actuated.push_back(coordinate_index(space, act[i], where, child(child(ptr, "actuated"), i)));
    }
    std::optional<std::vector<std::string>> offset;
    if (auto o = it->find("offset"); o != it->end()) offset = expression_array(*o, *sys, n, where, child(ptr, "offset"));
    std::vector<Interval> bounds;
    if (auto b = it->find("bounds"); b != it->end()) bounds = interval_array(*b, where, child(ptr, "bounds"), actuated.size(), true);
    try {
      control.emplace(*sys, actuated, offset, bounds);
    } catch (const ValidationError& e) {
      fail(where, ptr, e.what());
    }
  }

  std::optional<FiberMap> law;
  if (auto it = doc.find("law"); it != doc.end()) {
    if (!control) fail(where, "/law", "a law needs a control subset");
    law.emplace(*sys, expression_array(*it, *sys, n, where, "/law"));
  }

  auto symmetry = load_symmetry(doc, space, where);
  auto mu = load_mu(doc, "mu", momentum_dim(symmetry), where);
  if (mu && !symmetry) fail(where, "/mu", "a momentum value needs a symmetry");

  std::optional<TangentPoint> reference;
  if (auto it = doc.find("reference_state"); it != doc.end()) {
    const std::string ptr = "/reference_state";
    require_object(*it, where, ptr);
    reject_unknown(*it, {"q", "qdot"}, where, ptr);
    reference = TangentPoint{number_array(required(*it, "q", where, ptr), where, child(ptr, "q"), n),
                             number_array(required(*it, "qdot", where, ptr), where, child(ptr, "qdot"), n)};
  }

  try {
    return SystemModel{std::move(name), RCLSystem(*sys, force, control, law), std::move(symmetry), std::move(mu),
                       std::move(reference), doc};
  } catch (const ValidationError& e) {
    fail(where, "/law", e.what());
  }
}

SystemModel load_system_file(const std::filesystem::path& path) {
  const Json doc = read_json_file(path);
  if (file_kind(doc) != FileKind::System) throw ValidationError(path.string() + ": not a system file");
  return load_system(doc, path.string());
}

ReducedModel load_reduced(const Json& doc, const std::string& where, const std::filesystem::path& base_dir) {
  require_object(doc, where, "");
  reject_unknown(doc, {"kind", "name", "description", "parent", "mu", "section", "space", "notes"}, where, "");
  std::string name = "reduced";
  if (auto it = doc.find("name"); it != doc.end()) name = string_value(*it, where, "/name");
  auto [parent_doc, parent_where] = resolve_ref(required(doc, "parent", where, ""), where, "/parent", base_dir);
  SystemModel parent = load_system(parent_doc, parent_where);
  if (!parent.symmetry || !parent.symmetry->is_translation()) {
    fail(where, "/parent", "the parent needs a cyclic-coordinate symmetry");
  }
  const std::size_t k = parent.symmetry->cyclic().size();
  const std::size_t s = parent.symmetry->shape().size();
  const Vec mu = number_array(required(doc, "mu", where, ""), where, "/mu", k);

  SectionChoice section;
  if (auto it = doc.find("section"); it != doc.end()) {
    require_object(*it, where, "/section");
    reject_unknown(*it, {"offsets", "shear"}, where, "/section");
    if (auto o = it->find("offsets"); o != it->end()) section.offsets = number_array(*o, where, "/section/offsets", k);
    if (auto sh = it->find("shear"); sh != it->end()) {
      if (!sh->is_array() || sh->size() != k) fail(where, "/section/shear", "expected one row per cyclic coordinate");
      section.shear = Mat(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(s));
      for (std::size_t r = 0; r < k; ++r) {
        section.shear.row(static_cast<Eigen::Index>(r)) =
            number_array((*sh)[r], where, child("/section/shear", r), s).transpose();
      }
    }
  }
  ReducedSystem reduced = point_reduce(parent.rcl, *parent.symmetry, mu, {}, section);
  if (auto sp = doc.find("space"); sp != doc.end()) {
    require_object(*sp, where, "/space");
    if (auto c = sp->find("coords"); c != sp->end() && string_array(*c, where, "/space/coords") != reduced.space().names()) {
      fail(where, "/space/coords", "does not match the shape coordinates of the parent");
    }
  }
  return ReducedModel{std::move(name), std::move(parent), std::move(reduced), doc};
}

Json reduced_to_json(const ReducedSystem& red, const SystemModel& parent) {
  Json out;
  out["kind"] = "reduced";
  out["name"] = parent.name + "_reduced";
  out["mu"] = vec_json(red.mu());
  const std::size_t k = red.spec().cyclic().size();
  const Vec offsets = red.section_choice().offsets.size() ? red.section_choice().offsets : Vec::Zero(k);
  Json section;
  section["offsets"] = vec_json(offsets);
  if (red.section_choice().shear.size()) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < red.section_choice().shear.rows(); ++r) {
      rows.push_back(vec_json(red.section_choice().shear.row(r).transpose()));
    }
    section["shear"] = rows;
  }
  out["section"] = section;
  out["space"] = space_json(red.space());
  out["notes"] = red.notes();
  out["parent"] = parent.source;
  return out;
}

PairModel load_pair(const Json& doc, const std::string& where, const std::filesystem::path& base_dir) {
  require_object(doc, where, "");
  reject_unknown(doc, {"kind", "name", "description", "a", "b", "map", "mu_a", "mu_b"}, where, "");
  auto [a_doc, a_where] = resolve_ref(required(doc, "a", where, ""), where, "/a", base_dir);
  auto [b_doc, b_where] = resolve_ref(required(doc, "b", where, ""), where, "/b", base_dir);
  SystemModel a = load_system(a_doc, a_where);
  SystemModel b = load_system(b_doc, b_where);

  const Json& m = required(doc, "map", where, "");
  require_object(m, where, "/map");
  reject_unknown(m, {"forward", "inverse"}, where, "/map");
  const auto forward = string_array(required(m, "forward", where, "/map"), where, "/map/forward");
  if (!m.contains("inverse")) fail(where, "/map/inverse", "an inverse map is required");
  const auto inverse = string_array(m["inverse"], where, "/map/inverse");
  if (forward.size() != b.rcl.dim()) fail(where, "/map/forward", "expected one component per coordinate of b");
  if (inverse.size() != a.rcl.dim()) fail(where, "/map/inverse", "expected one component per coordinate of a");
  std::optional<PointMap> map;
  try {
    map.emplace(a.rcl.space(), b.rcl.space(), forward, inverse);
  } catch (const Error& e) {
    fail(where, "/map", e.what());
  }
  const double defect = map->inverse_defect(64, 0);
  if (!(defect <= 1e-9)) {
    fail(where, "/map/inverse", "does not invert the forward map (defect " + std::to_string(defect) + ")");
  }
  auto mu_a = load_mu(doc, "mu_a", momentum_dim(a.symmetry), where);
  auto mu_b = load_mu(doc, "mu_b", momentum_dim(b.symmetry), where);
  if (!mu_a) mu_a = a.mu;
  if (!mu_b) mu_b = b.mu;
  return PairModel{std::move(a), std::move(b), std::move(*map), std::move(mu_a), std::move(mu_b)};
}

PairModel load_pair_file(const std::filesystem::path& path) {
  const Json doc = read_json_file(path);
  if (file_kind(doc) != FileKind::Pair) throw ValidationError(path.string() + ": not a pair file");
  return load_pair(doc, path.string(), path.parent_path());
}

Json check_to_json(const CheckResult& c) {
  Json j;
  j["id"] = c.id;
  j["paper_ref"] = c.identity;
  j["pass"] = c.pass;
  j["applicable"] = c.applicable;
  j["gating"] = c.gating;
  if (std::isfinite(c.max_residual)) {
    j["max_residual"] = c.max_residual;
  } else {
    j["max_residual"] = nullptr;
  }
  j["witness"] = c.witness ? vec_json(*c.witness) : Json(nullptr);
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["tol"] = c.tol;
  j["note"] = c.note;
  return j;
}

bool all_pass(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks) {
    if (c.applicable && c.gating && !c.pass) return false;
  }
  return true;
}

Json make_report(const ReportHeader& header, const std::vector<CheckResult>& checks, double wallclock_seconds) {
  Json r;
  r["command"] = header.command;
  r["file"] = header.file;
  r["mode"] = header.mode;
  r["seed"] = header.seed;
  r["samples"] = header.samples ? Json(*header.samples) : Json(nullptr);
  r["tol"] = header.tol ? Json(*header.tol) : Json(nullptr);
  r["pass"] = all_pass(checks);
  Json list = Json::array();
  for (const auto& c : checks) list.push_back(check_to_json(c));
  r["checks"] = list;
  r["wallclock"] = wallclock_seconds;
  return r;
}

}  // namespace rclab::sysdef
