#pragma once

#include "rosenblatt/config.hpp"
#include "rosenblatt/io.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rosenblatt {

struct CriterionResult
{
  int id = 0;
  std::string title;
  bool passed = false;
  std::string summary;
  double seconds = 0.0;
  Json details;
};

struct VerifyReport
{
  std::vector<CriterionResult> results;
  double seconds = 0.0;

  bool all_passed() const;
  //! One line per criterion: "[PASS] 3 title: summary (1.2 s)".
  std::string table() const;
  Json json() const;
};

inline constexpr int kCriterionCount = 14;

std::string criterion_title(int id);

//! Runs the selected criteria (all when config.verify.criteria is empty).
//! A criterion that throws is recorded as failed; the others still run.
//! on_result is called as each criterion finishes.
VerifyReport run_verification(const RunConfig& config,
                              const std::function<void(const CriterionResult&)>& on_result = {});

} // namespace rosenblatt
