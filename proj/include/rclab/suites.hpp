#pragma once

// Named groups of checks run by the CLI against system, reduced and pair files.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rclab/report.hpp"
#include "rclab/sysdef.hpp"

namespace rclab {

enum class Suite { Legendre, Dynamics, Noether, Reduction, All };
enum class EquivalenceKind { Rcl, Rpcl, Rocl, Thm43, Thm44, Thm53, Thm54 };

/// Throws ValidationError for unknown names.
Suite parse_suite(const std::string& name);
EquivalenceKind parse_equivalence_kind(const std::string& name);

/// Overrides; unset fields fall back to per-check defaults.
struct SuiteOptions {
  std::optional<std::size_t> samples;
  std::uint64_t seed = 0;
  std::optional<double> tol;
  std::optional<Vec> mu;
};

/// Certificates behind `validate`: hyperregularity, the law certificate and,
/// with a cyclic symmetry, invariance.
std::vector<CheckResult> validation_checks(const sysdef::SystemModel& model, std::uint64_t seed);

/// Throws InapplicableError when the suite needs data the file lacks
/// (a symmetry, a momentum value, or an unreduced system).
std::vector<CheckResult> run_suite(const sysdef::SystemModel& model, Suite suite, const SuiteOptions& options);
std::vector<CheckResult> run_suite(const sysdef::ReducedModel& model, Suite suite, const SuiteOptions& options);

std::vector<CheckResult> run_equivalence(const sysdef::PairModel& pair, EquivalenceKind kind,
                                         const SuiteOptions& options);

}  // namespace rclab
