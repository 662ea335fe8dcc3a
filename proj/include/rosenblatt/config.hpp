#pragma once

#include "rosenblatt/io.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace rosenblatt {

struct ConfigError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct GridConfig
{
  int n = 512;              // Galerkin cells per unit time
  int nystrom_nodes = 256;  // quadrature nodes for the derivative covariance operator on [0, 1]
  double line_lower = -40.0; // truncated-line diagnostic: domain [line_lower * t, t]
  int line_inner = 128;
  int line_tail = 64;
};

struct SamplingConfig
{
  std::int64_t n_samples = 10000;
  std::uint64_t seed = 20240601;
  int chunks = 8;
  int threads = 1;
};

struct SpectrumConfig
{
  std::int64_t j_max = 0;
  double coverage_target = 1.0;
};

struct DensityConfig
{
  std::string method = "cf"; // cf | kde | both
  int derivative_order = 0;
  double x_min = -3.0;
  double x_max = 9.0;
  int points = 241;
  double bandwidth = 0.0; // 0 selects Silverman
};

struct MalliavinConfig
{
  std::vector<double> p{1.0, 2.0};
  bool restricted = true;
};

struct VerifyConfig
{
  double scale = 1.0;        // multiplies every Monte Carlo sample count
  std::vector<int> criteria; // empty runs all
};

struct RunConfig
{
  double H = 0.75;
  std::vector<double> times{1.0};
  GridConfig grid;
  SamplingConfig sampling;
  SpectrumConfig spectrum;
  DensityConfig density;
  MalliavinConfig malliavin;
  VerifyConfig verify;
  std::string output_dir = "rosenblatt-out";
};

Json to_json(const RunConfig& c);
//! Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const Json& j);
RunConfig load_config(const std::filesystem::path& path);
//! Throws ConfigError naming the first violated precondition.
void validate(const RunConfig& c);
//! FNV-1a of the canonical JSON form, as 16 hex digits.
std::string config_hash(const RunConfig& c);

} // namespace rosenblatt
