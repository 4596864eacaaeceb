#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace l4span {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;  // wall time spent on the check
};

struct AcceptanceOptions {
  std::string scenario_dir;
  std::vector<int> only;          // empty = all criteria
  std::ostream* progress = nullptr;
};

/// Runs the acceptance suite against the bundled scenarios. Criteria that
/// throw are reported as failures with the exception text.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts);

std::string acceptance_to_json(const std::vector<CriterionResult>& results);
/// Throws ConfigError on malformed input.
std::vector<CriterionResult> acceptance_from_json(const std::string& text);
/// One "[PASS]/[FAIL] <id> <name>: <detail>" line per criterion.
void write_acceptance_table(std::ostream& os, const std::vector<CriterionResult>& results);
bool all_passed(const std::vector<CriterionResult>& results) noexcept;

}  // namespace l4span
