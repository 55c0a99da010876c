#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "rclab/geometry.hpp"

namespace rclab {

/// Outcome of one sampled identity check.
struct CheckResult {
  std::string id;        // stable short id, e.g. "legendre.round_trip"
  std::string identity;  // what is being certified, in words
  bool pass = false;
  bool applicable = true;
  bool gating = true;  // false for entries that inform but do not decide the verdict
  double max_residual = 0.0;
  std::optional<Vec> witness;  // stacked state of the worst sample
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double tol = 0.0;
  std::string note;
};

/// Running maximum of a residual with the state where it occurred.
class ResidualTracker {
 public:
  void observe(double residual, const Vec& state) {
    if (std::isnan(max_)) return;
    // NaN residuals win so they surface as failures.
    if (!witness_ || std::isnan(residual) || residual > max_) {
      max_ = residual;
      witness_ = state;
    }
  }
  double max() const noexcept { return max_; }
  const std::optional<Vec>& witness() const noexcept { return witness_; }

  CheckResult finish(std::string id, std::string identity, double tol, std::size_t samples,
                     std::uint64_t seed) const {
    CheckResult r;
    r.id = std::move(id);
    r.identity = std::move(identity);
    r.max_residual = max_;
    r.pass = max_ <= tol;
    r.witness = witness_;
    r.samples = samples;
    r.seed = seed;
    r.tol = tol;
    return r;
  }

 private:
  double max_ = 0.0;
  std::optional<Vec> witness_;
};

}  // namespace rclab
