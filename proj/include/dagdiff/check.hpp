#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dagdiff {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Worst observed residual (or violation count) for the property.
  double value = 0.0;
  double tolerance = 0.0;
  std::size_t instances = 0;
  /// Seed of the property's own random stream.
  std::uint64_t stream_seed = 0;
};

struct CheckReport {
  std::uint64_t seed = 0;
  std::vector<CheckResult> results;

  bool all_passed() const noexcept;
  /// Plain-text report; identical seeds give identical bytes.
  std::string to_text() const;
};

/// Seeded random instances for every structural and numerical invariant of
/// the engine: scheduling, sequential/grouped equivalence, diffusion row
/// sums, maximum principle, builder symmetry, kernel symmetry, gradients,
/// linearity and component isolation.
CheckReport run_invariant_suite(std::uint64_t seed);

}  // namespace dagdiff
