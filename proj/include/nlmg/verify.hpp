#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlmg/io.hpp"

namespace nlmg {

struct VerifyCase {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
};

struct SuiteResult {
  std::string name;
  std::vector<VerifyCase> cases;
  /// Wall time; reported on the console, never written into the JSON.
  double seconds = 0.0;

  bool passed() const;
};

const std::vector<std::string>& suite_names();

/// Runs one suite; case inputs that are randomized draw from a generator seeded with `seed`.
/// Throws ParameterError for an unknown suite name.
SuiteResult run_suite(const std::string& name, std::uint64_t seed);

/// {"seed", "passed", "suites": [{"name", "passed", "cases": [{"name", "status", "measured",
/// "bound"}]}]}. Identical for identical seeds.
json verify_json(const std::vector<SuiteResult>& results, std::uint64_t seed);

}  // namespace nlmg
