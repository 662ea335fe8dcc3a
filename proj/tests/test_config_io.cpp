#include "rosenblatt/config.hpp"
#include "rosenblatt/io.hpp"
#include "rosenblatt/spectral.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rosenblatt;

namespace {

std::filesystem::path scratch_dir(const std::string& name)
{
  const auto dir = std::filesystem::temp_directory_path() / ("rosenblatt_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p)
{
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("config round trip")
{
  RunConfig c;
  c.H = 0.6;
  c.times = {0.5, 1.0, 2.0};
  c.grid.n = 64;
  c.sampling.seed = 42;
  c.sampling.n_samples = 123;
  c.spectrum.coverage_target = 0.99;
  c.density.method = "both";
  c.malliavin.p = {1.0};
  c.verify.criteria = {3, 7};
  c.output_dir = "elsewhere";
  const RunConfig back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.times == c.times);
  CHECK(back.sampling.seed == 42);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);
  CHECK(config_hash(c) != config_hash(RunConfig{}));
  // the hash is a pure function of the content
  CHECK(config_hash(RunConfig{}) == config_hash(RunConfig{}));
}

TEST_CASE("partial configs keep defaults")
{
  const auto c = config_from_json(Json::parse(R"({"H": 0.8, "sampling": {"seed": 5}})"));
  CHECK(c.H == 0.8);
  CHECK(c.sampling.seed == 5);
  CHECK(c.sampling.n_samples == SamplingConfig{}.n_samples);
  CHECK(c.grid.n == GridConfig{}.n);
  CHECK(c.times == std::vector<double>{1.0});
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("config errors")
{
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"hurst": 0.8})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"grid": {"cells": 8}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"H": "high"})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"grid": 3})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json::parse("[1, 2]")), ConfigError);

  auto invalid = [](auto mutate) {
    RunConfig c;
    mutate(c);
    CHECK_THROWS_AS(validate(c), ConfigError);
  };
  invalid([](RunConfig& c) { c.H = 0.5; });
  invalid([](RunConfig& c) { c.H = 1.0; });
  invalid([](RunConfig& c) { c.times = {}; });
  invalid([](RunConfig& c) { c.times = {1.0, 1.0}; });
  invalid([](RunConfig& c) { c.times = {0.0, 1.0}; });
  invalid([](RunConfig& c) { c.grid.n = 0; });
  invalid([](RunConfig& c) { c.sampling.n_samples = -1; });
  invalid([](RunConfig& c) { c.sampling.threads = 0; });
  invalid([](RunConfig& c) { c.spectrum.coverage_target = 0.0; });
  invalid([](RunConfig& c) { c.spectrum.j_max = -2; });
  invalid([](RunConfig& c) { c.density.method = "histogram"; });
  invalid([](RunConfig& c) { c.density.x_max = c.density.x_min; });
  invalid([](RunConfig& c) { c.malliavin.p = {0.0}; });
  invalid([](RunConfig& c) { c.verify.criteria = {15}; });
  invalid([](RunConfig& c) { c.verify.scale = 0.0; });
  CHECK_NOTHROW(validate(RunConfig{}));

  const auto dir = scratch_dir("config");
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
  std::ofstream(dir / "broken.json") << "{ \"H\": ";
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
  std::ofstream(dir / "ok.json") << R"({"H": 0.7, "partition": [1, 2]})";
  CHECK(load_config(dir / "ok.json").times == std::vector<double>{1.0, 2.0});
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv and json writers")
{
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
  Eigen::MatrixXd rows(2, 2);
  rows << 1, 2.5, -3, 1e-300;
  CHECK(csv_text({"a", "b"}, rows) == "a,b\n1,2.5\n-3,1e-300\n");
  CHECK(csv_text({"a"}, Eigen::MatrixXd(0, 1)) == "a\n");
  CHECK_THROWS_AS(csv_text({"a"}, rows), std::invalid_argument);

  const auto dir = scratch_dir("io");
  write_csv(dir / "nested" / "t.csv", {"a", "b"}, rows);
  CHECK(slurp(dir / "nested" / "t.csv") == csv_text({"a", "b"}, rows));
  write_json(dir / "j.json", Json{{"x", 1}});
  CHECK(Json::parse(slurp(dir / "j.json"))["x"] == 1);

  Eigen::VectorXd v(3);
  v << 0.6, -0.3, 0.1;
  const auto s = make_spectrum(v, Eigen::MatrixXd(), Spectrum::Order::magnitude);
  const auto t = spectrum_table(s);
  CHECK(t(0, 0) == 1.0);
  CHECK(t(1, 1) == -0.3);
  CHECK(t(2, 2) == doctest::Approx(1.0));
  write_spectrum(dir / "spec", s);
  CHECK(std::filesystem::exists(dir / "spec.csv"));
  const auto j = Json::parse(slurp(dir / "spec.json"));
  CHECK(j["retained"] == 3);
  CHECK(j["order"] == "magnitude");
  CHECK_FALSE(j.contains("tail"));
  std::filesystem::remove_all(dir);
}
