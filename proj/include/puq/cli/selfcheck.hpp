#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace puq::cli {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Special-function reference values and recurrences, end-to-end meta-model
// gradients against central differences, and AUROC/AUPR against brute force.
std::vector<CheckResult> run_selfcheck();

// Prints one line per check and a summary; returns true when all pass.
bool print_selfcheck(const std::vector<CheckResult>& results, std::ostream& out);

}  // namespace puq::cli
