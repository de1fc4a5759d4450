#pragma once

// Acceptance criteria and runtime invariant checks. Each check reports a
// single pass/fail verdict plus the measured quantities behind it; the
// tolerances are fixed constants in the implementation.

#include <string>
#include <vector>

namespace ergo {

struct CheckReport {
  std::string id;     // "1".."8" for acceptance criteria, a short name otherwise
  std::string title;
  bool pass = false;
  std::vector<std::string> details;
  double seconds = 0.0;
};

struct AcceptanceContext {
  std::string config_dir = "configs";  // compare.json, pinn.json, smoke.json
  std::string work_dir = "acceptance_work";
  int threads = 0;                     // 0 = hardware concurrency
  bool verbose = false;
};

inline constexpr int kCriterionCount = 8;

CheckReport run_criterion(int id, const AcceptanceContext& ctx);

// Fast invariants over every module (orthonormality, conservation, bounds,
// round trips). Used by `ergo check`.
std::vector<CheckReport> run_property_checks();

// "PASS  [1] title: detail; detail (0.4 s)".
std::string format_report(const CheckReport& r);

}  // namespace ergo
