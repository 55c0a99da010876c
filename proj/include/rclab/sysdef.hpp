#pragma once

// JSON system, reduced-system and pair files, and the verification report
// format shared by the CLI commands.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rclab/control.hpp"
#include "rclab/reduction.hpp"
#include "rclab/report.hpp"
#include "rclab/symmetry.hpp"

namespace rclab::sysdef {

using Json = nlohmann::ordered_json;

/// Parses a JSON file. Syntax errors become ValidationError with line and column.
Json read_json_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

enum class FileKind { System, Reduced, Pair };

/// "kind" field, defaulting to a system file.
FileKind file_kind(const Json& doc);

struct SystemModel {
  std::string name;
  RCLSystem rcl;
  std::optional<SymmetrySpec> symmetry;
  std::optional<Vec> mu;
  std::optional<TangentPoint> reference_state;
  Json source;

  const LagrangianSystem& lagrangian() const noexcept { return rcl.lagrangian(); }
  bool uncontrolled() const noexcept { return !rcl.force() && !rcl.law(); }
  /// reference_state, or the box center.
  TangentPoint initial_state() const;
};

/// Structural validation plus construction. `where` prefixes diagnostics
/// (usually the file name). Throws ValidationError with a JSON pointer for
/// structural problems, ParseError wrapped as ValidationError for
/// expressions, and ValidationError for a failed hyperregularity or law
/// certificate.
SystemModel load_system(const Json& doc, const std::string& where);
SystemModel load_system_file(const std::filesystem::path& path);

struct ReducedModel {
  std::string name;
  SystemModel parent;
  ReducedSystem reduced;
  Json source;
};

/// Rebuilds a reduced system through a certified point reduction of its parent.
ReducedModel load_reduced(const Json& doc, const std::string& where, const std::filesystem::path& base_dir);

/// The emitted reduced-system file; `parent` is embedded verbatim.
Json reduced_to_json(const ReducedSystem& red, const SystemModel& parent);

struct PairModel {
  SystemModel a;
  SystemModel b;
  PointMap map;
  std::optional<Vec> mu_a;
  std::optional<Vec> mu_b;
};

/// `a` and `b` are inline system objects or paths relative to the pair file.
/// The inverse map is mandatory and is verified on samples.
PairModel load_pair(const Json& doc, const std::string& where, const std::filesystem::path& base_dir);
PairModel load_pair_file(const std::filesystem::path& path);

/// One report entry in file form.
Json check_to_json(const CheckResult& check);

/// Verdict over applicable, gating entries.
bool all_pass(const std::vector<CheckResult>& checks);

struct ReportHeader {
  std::string command;
  std::string file;
  std::string mode;  // suite or equivalence kind
  std::uint64_t seed = 0;
  std::optional<std::size_t> samples;
  std::optional<double> tol;
};

Json make_report(const ReportHeader& header, const std::vector<CheckResult>& checks, double wallclock_seconds);

}  // namespace rclab::sysdef
