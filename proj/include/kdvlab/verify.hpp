#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kdvlab/io.hpp"

namespace kdvlab {

enum class VerifyLevel { fast, full };
VerifyLevel verify_level_from_string(const std::string& s);
std::string to_string(VerifyLevel l);

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  bool skipped = false;  ///< not run at this level
  std::string detail;
  double seconds = 0.0;
  double budget = 0.0;   ///< runtime budget in seconds; exceeding it fails the criterion
};

struct VerifyReport {
  VerifyLevel level = VerifyLevel::full;
  std::vector<CriterionResult> criteria;
  /// Every criterion that ran passed.
  bool passed() const;
  Json to_json() const;
};

/// Ids 1..14 with their titles and budgets.
std::vector<CriterionResult> criterion_catalogue();

/// One acceptance criterion. The fast level skips 10 and 11 (tens of minutes).
CriterionResult run_criterion(int id, VerifyLevel level = VerifyLevel::full);

/// All criteria in order; on_result sees each one as it finishes.
VerifyReport verify_suite(VerifyLevel level, const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS [ 3] title (12.3 s): detail".
std::string format_line(const CriterionResult& r);

}  // namespace kdvlab
