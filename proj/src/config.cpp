#include "rosenblatt/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace rosenblatt {

Json to_json(const RunConfig& c)
{
  Json j;
  j["H"] = c.H;
  j["partition"] = c.times;
  j["grid"] = {{"n", c.grid.n},
               {"nystrom_nodes", c.grid.nystrom_nodes},
               {"line_lower", c.grid.line_lower},
               {"line_inner", c.grid.line_inner},
               {"line_tail", c.grid.line_tail}};
  j["sampling"] = {{"n_samples", c.sampling.n_samples},
                   {"seed", c.sampling.seed},
                   {"chunks", c.sampling.chunks},
                   {"threads", c.sampling.threads}};
  j["spectrum"] = {{"j_max", c.spectrum.j_max}, {"coverage_target", c.spectrum.coverage_target}};
  j["density"] = {{"method", c.density.method},
                  {"derivative_order", c.density.derivative_order},
                  {"x_min", c.density.x_min},
                  {"x_max", c.density.x_max},
                  {"points", c.density.points},
                  {"bandwidth", c.density.bandwidth}};
  j["malliavin"] = {{"p", c.malliavin.p}, {"restricted", c.malliavin.restricted}};
  j["verify"] = {{"scale", c.verify.scale}, {"criteria", c.verify.criteria}};
  j["outputs"] = c.output_dir;
  return j;
}

namespace {

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
  if (!j.is_object())
    throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const Json& j, const char* key, T& out)
{
  if (!j.contains(key))
    return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

} // namespace

RunConfig config_from_json(const Json& j)
{
  RunConfig c;
  check_keys(j, "config", {"H", "partition", "grid", "sampling", "spectrum", "density", "malliavin", "verify", "outputs"});
  read(j, "H", c.H);
  read(j, "partition", c.times);
  read(j, "outputs", c.output_dir);
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    check_keys(g, "grid", {"n", "nystrom_nodes", "line_lower", "line_inner", "line_tail"});
    read(g, "n", c.grid.n);
    read(g, "nystrom_nodes", c.grid.nystrom_nodes);
    read(g, "line_lower", c.grid.line_lower);
    read(g, "line_inner", c.grid.line_inner);
    read(g, "line_tail", c.grid.line_tail);
  }
  if (j.contains("sampling")) {
    const auto& s = j["sampling"];
    check_keys(s, "sampling", {"n_samples", "seed", "chunks", "threads"});
    read(s, "n_samples", c.sampling.n_samples);
    read(s, "seed", c.sampling.seed);
    read(s, "chunks", c.sampling.chunks);
    read(s, "threads", c.sampling.threads);
  }
  if (j.contains("spectrum")) {
    const auto& s = j["spectrum"];
    check_keys(s, "spectrum", {"j_max", "coverage_target"});
    read(s, "j_max", c.spectrum.j_max);
    read(s, "coverage_target", c.spectrum.coverage_target);
  }
  if (j.contains("density")) {
    const auto& d = j["density"];
    check_keys(d, "density", {"method", "derivative_order", "x_min", "x_max", "points", "bandwidth"});
    read(d, "method", c.density.method);
    read(d, "derivative_order", c.density.derivative_order);
    read(d, "x_min", c.density.x_min);
    read(d, "x_max", c.density.x_max);
    read(d, "points", c.density.points);
    read(d, "bandwidth", c.density.bandwidth);
  }
  if (j.contains("malliavin")) {
    const auto& m = j["malliavin"];
    check_keys(m, "malliavin", {"p", "restricted"});
    read(m, "p", c.malliavin.p);
    read(m, "restricted", c.malliavin.restricted);
  }
  if (j.contains("verify")) {
    const auto& v = j["verify"];
    check_keys(v, "verify", {"scale", "criteria"});
    read(v, "scale", c.verify.scale);
    read(v, "criteria", c.verify.criteria);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
  std::ifstream f(path);
  if (!f)
    throw ConfigError("cannot read config " + path.string());
  try {
    return config_from_json(Json::parse(f));
  } catch (const Json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

void validate(const RunConfig& c)
{
  if (!(c.H > 0.5 && c.H < 1.0))
    throw ConfigError("H must lie in (1/2, 1)");
  if (c.times.empty())
    throw ConfigError("partition needs at least one positive time");
  double prev = 0.0;
  for (double t : c.times) {
    if (!(t > prev))
      throw ConfigError("partition times must be positive and strictly increasing");
    prev = t;
  }
  if (c.grid.n < 1)
    throw ConfigError("grid.n must be positive");
  if (c.grid.nystrom_nodes < 2)
    throw ConfigError("grid.nystrom_nodes must be at least 2");
  if (!(c.grid.line_lower < 0.0) || c.grid.line_inner < 1 || c.grid.line_tail < 1)
    throw ConfigError("line grid needs line_lower < 0 and positive cell counts");
  if (c.sampling.n_samples < 0)
    throw ConfigError("sampling.n_samples must be nonnegative");
  if (c.sampling.chunks < 1 || c.sampling.threads < 1)
    throw ConfigError("sampling.chunks and sampling.threads must be positive");
  if (c.spectrum.j_max < 0)
    throw ConfigError("spectrum.j_max must be nonnegative");
  if (!(c.spectrum.coverage_target > 0.0 && c.spectrum.coverage_target <= 1.0))
    throw ConfigError("spectrum.coverage_target must lie in (0, 1]");
  if (c.density.method != "cf" && c.density.method != "kde" && c.density.method != "both")
    throw ConfigError("density.method must be cf, kde or both");
  if (c.density.derivative_order < 0)
    throw ConfigError("density.derivative_order must be nonnegative");
  if (!(c.density.x_max > c.density.x_min) || c.density.points < 2)
    throw ConfigError("density grid needs x_max > x_min and at least two points");
  for (double p : c.malliavin.p)
    if (!(p > 0.0))
      throw ConfigError("malliavin.p entries must be positive");
  if (!(c.verify.scale > 0.0))
    throw ConfigError("verify.scale must be positive");
  for (int k : c.verify.criteria)
    if (k < 1 || k > 14)
      throw ConfigError("verify.criteria entries must lie in 1..14");
}

std::string config_hash(const RunConfig& c)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace rosenblatt
