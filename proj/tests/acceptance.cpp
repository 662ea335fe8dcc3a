// Runs every acceptance criterion with the default configuration and prints one line each.
// Exit status is nonzero if any criterion fails.

#include "rosenblatt/verify.hpp"

#include <iostream>

int main()
{
  using namespace rosenblatt;
  const RunConfig config;
  const VerifyReport report = run_verification(config, [](const CriterionResult& r) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.title << ": " << r.summary << " ("
              << r.seconds << " s)" << std::endl;
  });
  int failed = 0;
  for (const auto& r : report.results)
    failed += !r.passed;
  std::cout << report.results.size() - failed << '/' << report.results.size() << " criteria passed in "
            << report.seconds << " s" << std::endl;
  return failed == 0 ? 0 : 1;
}
