#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fsm/measures.hpp"

namespace fsm {

struct CheckRecord {
  std::string check;
  std::string partition;    // empty when not tied to a partition
  std::string process;
  std::string subdivision;  // "limit" for mesh → 0 statements
  Rational residual;
  bool pass = false;
};

nlohmann::json to_json(const CheckRecord& record);

struct CheckReport {
  std::vector<CheckRecord> records;

  bool passed() const;
  int failures() const;
  void append(const CheckReport& other);
};

/// Fixed subdivisions used by the finite-level checks.
std::vector<Subdivision> standard_battery();

/// k-tuple used by the suite: identical copies of a single process, otherwise
/// the components taken cyclically.
ProcessSpec suite_tuple(const ProcessSpec& spec, int k);

inline constexpr int kMaxSuiteOrder = 5;

/// Exact identity checks over NC(k), k ≤ k_max; every residual must be 0.
CheckReport identity_suite(const ProcessSpec& spec, int k_max, const Rational& t = 1);

/// Main theorem residuals for every π ∈ NC(k), k ≤ k_max. L2 runs while 2k ≤ kMaxProductArity.
CheckReport main_theorem_sweep(const ProcessSpec& spec, int k_max, const Rational& t = 1);

/// Closed-form example checks in L1 and L2 for every π ∈ NC(k), k ≤ k_max.
CheckReport example_sweep(ExampleProcess which, int k_max, const Rational& t = 1);

}  // namespace fsm
