// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace deepmood {

/// Finite-difference verification of every hand-derived backward pass.
///
/// Each check builds a tiny random instance, reduces the component's output
/// to a scalar (a fixed random projection, or the task loss end to end) and
/// compares every analytic partial derivative against a central difference.
/// Errors are |a - n| / max(|a|, |n|, floor); the floor keeps entries whose
/// true gradient is zero from turning rounding noise into huge ratios.
struct GradCheckOptions {
  std::uint64_t seed = 1;
  double step = 1e-6;
  double tolerance = 1e-4;
  double floor = 1e-5;
  /// Test fixture: perturbs one analytic entry per parameter so the suite
  /// must fail.
  bool corrupt = false;
};

struct GradCheckEntry {
  std::string check;      // e.g. "encoder", "head/mvm", "model/fc/hdrs"
  std::string parameter;  // e.g. "fwd/U_z", "input/1"
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  double tolerance = 0.0;
  std::vector<GradCheckEntry> entries;

  bool passed() const;
  double max_rel_error() const;
  /// Fixed-width table, one row per entry.
  std::string table() const;
};

GradCheckReport run_gradcheck(const GradCheckOptions& options = {});

}  // namespace deepmood
