#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedfilter {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Randomised self-check of the library's core properties: Mirsky's
// inequality, the delta <-> tol_f round trip, the eigensolver trace identity
// and the dead-band reconstruction guarantee on a synthetic run.
std::vector<CheckResult> run_invariant_suite(std::uint64_t seed);

}  // namespace fedfilter
