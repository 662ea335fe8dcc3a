// Batch front end: rosenblatt spectrum|simulate|malliavin|density|verify.

#include "rosenblatt/chaos_system.hpp"
#include "rosenblatt/config.hpp"
#include "rosenblatt/density.hpp"
#include "rosenblatt/io.hpp"
#include "rosenblatt/malliavin.hpp"
#include "rosenblatt/sampler.hpp"
#include "rosenblatt/stats.hpp"
#include "rosenblatt/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace rosenblatt;

namespace {

constexpr const char* kVersion = "1.0.0";

enum ExitCode
{
  ok = 0,
  failure = 1,
  usage = 2
};

struct Overrides
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  std::optional<double> hurst;
  std::optional<std::string> times;
  std::optional<double> scale;
  std::optional<std::string> criteria;
};

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what)
{
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof())
      throw ConfigError(std::string("cannot parse ") + what + " entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// Precedence: command-line flag > config file > default.
RunConfig resolve(const Overrides& o)
{
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed)
    c.sampling.seed = *o.seed;
  if (o.threads)
    c.sampling.threads = *o.threads;
  if (o.out)
    c.output_dir = *o.out;
  if (o.hurst)
    c.H = *o.hurst;
  if (o.times)
    c.times = parse_list<double>(*o.times, "--times");
  if (o.scale)
    c.verify.scale = *o.scale;
  if (o.criteria)
    c.verify.criteria = parse_list<int>(*o.criteria, "--criteria");
  validate(c);
  return c;
}

Json manifest(const std::string& command, const RunConfig& c, const std::vector<std::string>& files)
{
  Json j;
  j["command"] = command;
  j["config_hash"] = config_hash(c);
  j["config"] = to_json(c);
  j["versions"] = {{"rosenblatt", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  j["files"] = files;
  return j;
}

// Writes the manifest and resolved config first, so an interrupted run is still identifiable.
struct RunDir
{
  fs::path root;
  std::string command;
  const RunConfig& config;
  std::vector<std::string> files;

  RunDir(std::string cmd, const RunConfig& c) : root(c.output_dir), command(std::move(cmd)), config(c)
  {
    fs::create_directories(root);
    write_json(root / "config.json", to_json(c));
    write_json(root / "manifest.json", manifest(command, c, {}));
  }
  fs::path file(const std::string& name)
  {
    files.push_back(name);
    return root / name;
  }
  void finish() { write_json(root / "manifest.json", manifest(command, config, files)); }
};

Eigen::VectorXd x_grid(const DensityConfig& d)
{
  return Eigen::VectorXd::LinSpaced(d.points, d.x_min, d.x_max);
}

void write_curve(RunDir& dir, const std::string& stem, const DensityCurve& c)
{
  Eigen::MatrixXd t(c.x.size(), 2);
  t << c.x, c.values;
  write_csv(dir.file(stem + ".csv"), {"x", "value"}, t);
  Json j;
  j["method"] = c.method == DensityMethod::cf_inversion ? "cf_inversion" : "kde";
  j["derivative_order"] = c.derivative_order;
  j["points"] = c.x.size();
  j["integral"] = integrate_curve(c);
  if (c.method == DensityMethod::cf_inversion) {
    j["lambda_coverage"] = c.lambda_coverage;
    j["imaginary_residue"] = c.imaginary_residue;
    j["theta_max"] = c.theta_max;
    j["theta_step"] = c.theta_step;
  } else {
    j["bandwidth"] = c.bandwidth;
  }
  write_json(dir.file(stem + ".csv.json"), j);
}

ChaosOptions chaos_options(const RunConfig& c)
{
  return ChaosOptions{c.grid.n, c.spectrum.j_max};
}

RetentionPolicy policy(const RunConfig& c)
{
  return RetentionPolicy{c.spectrum.j_max, c.spectrum.coverage_target};
}

SamplingPlan plan(const RunConfig& c)
{
  return SamplingPlan{c.sampling.seed, c.sampling.n_samples, c.sampling.chunks, c.sampling.threads};
}

int cmd_spectrum(const RunConfig& c)
{
  RunDir dir("spectrum", c);
  const auto ctx = normalization_constant(c.H);
  const ChaosSystem sys(ctx, TimePartition(c.times), chaos_options(c));
  Json summary;
  for (int j = 1; j <= sys.partition().m(); ++j) {
    const double t = sys.partition().time(j);
    const Spectrum s = sys.level_spectrum(t, policy(c));
    const std::string stem = "spectrum_M_t" + std::to_string(j);
    write_spectrum(dir.root / stem, s);
    dir.files.push_back(stem + ".csv");
    dir.files.push_back(stem + ".json");
    Json e = {{"t", t}, {"modes", s.size()}, {"coverage", s.coverage}};
    if (s.coverage < c.spectrum.coverage_target)
      e["warning"] = "retained coverage below coverage_target (j_max truncation)";
    summary["M"].push_back(e);
  }

  Grading g;
  g.points_per_panel = 16;
  g.exponent = 1.5;
  g.side = Grading::Side::right;
  const int nodes = std::max(16, c.grid.nystrom_nodes / 16 * 16);
  NystromOptions opt;
  opt.retention = policy(c);
  opt.eigenvectors = false;
  opt.threads = c.sampling.threads;
  const Spectrum T =
      nystrom_eig([&](double s, double t) { return gram_kernel(ctx, s, t); }, build_grid(Interval{0, 1}, nodes, g), opt);
  write_spectrum(dir.root / "spectrum_T", T);
  dir.files.push_back("spectrum_T.csv");
  dir.files.push_back("spectrum_T.json");
  summary["T"] = {{"nodes", nodes}, {"modes", T.size()}, {"coverage", T.coverage}};
  write_json(dir.file("summary.json"), summary);
  dir.finish();
  return ok;
}

int cmd_simulate(const RunConfig& c)
{
  RunDir dir("simulate", c);
  const ChaosSystem sys(normalization_constant(c.H), TimePartition(c.times), chaos_options(c));
  const SampleBatch batch = run_batch(sys, plan(c));
  write_sample_batch(batch, dir.file("samples.csv"));
  dir.files.push_back("samples.csv.json");
  dir.finish();
  return ok;
}

Json moment_json(const MomentReport& m)
{
  return {{"p", m.p},
          {"target", m.target},
          {"n", m.n},
          {"estimate", m.estimate},
          {"half_width", m.half_width},
          {"stability_ratio", m.stability_ratio},
          {"max_share", m.max_share},
          {"unstable", m.unstable}};
}

int cmd_malliavin(const RunConfig& c)
{
  RunDir dir("malliavin", c);
  const TimePartition part(c.times);
  const ChaosSystem sys(normalization_constant(c.H), part, chaos_options(c));
  const bool restricted = c.malliavin.restricted && sys.has_unit_restriction();
  const MalliavinBatch b = run_malliavin_batch(sys, plan(c), MalliavinOptions{true, restricted});

  const int m = part.m();
  std::vector<std::string> header{"det", "det_direct"};
  for (int j = 1; j <= m; ++j)
    header.push_back("residual" + std::to_string(j));
  header.push_back("dz1_full");
  if (restricted)
    header.push_back("dz1_restricted");
  Eigen::MatrixXd table(b.size(), header.size());
  table.col(0) = b.det;
  table.col(1) = b.det_direct;
  table.middleCols(2, m) = b.residual_norms;
  table.col(2 + m) = b.dz1_full;
  if (restricted)
    table.col(3 + m) = b.dz1_restricted;
  write_csv(dir.file("malliavin.csv"), header, table);

  Json report;
  report["partition"] = part.positive_times();
  report["H"] = c.H;
  report["n_samples"] = b.size();
  const PositivityCensus census = positivity_census(b.det, default_positivity_epsilon(part, c.H));
  report["positivity_census"] = {
      {"samples", census.samples}, {"violations", census.violations}, {"epsilon", census.epsilon}};
  report["det_quantiles"] = Json::object();
  report["moment_reports"] = Json::array();
  report["ks_reports"] = Json::array();
  if (b.size() > 0) {
    for (double q : {0.001, 0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99})
      report["det_quantiles"][format_double(q)] = quantile(b.det, q);
    for (double p : c.malliavin.p) {
      std::vector<std::pair<std::string, const Eigen::VectorXd*>> targets{{"det Gamma", &b.det}};
      if (restricted)
        targets.emplace_back("||DZ_1||^2 on [0,1]", &b.dz1_restricted);
      for (const auto& [name, values] : targets) {
        try {
          report["moment_reports"].push_back(moment_json(negative_moment(*values, p, name, c.sampling.seed)));
        } catch (const std::exception& e) {
          report["moment_reports"].push_back({{"p", p}, {"target", name}, {"error", e.what()}});
        }
      }
    }
    if (restricted) {
      // distribution of the restricted norm against its own spectral series 4 sum mu zeta^2
      const Spectrum mu = sys.restricted_derivative_spectrum();
      SamplingPlan sp = plan(c);
      sp.seed = derive_seed(c.sampling.seed, 1);
      Eigen::VectorXd series = run_series_batch(mu, sp, TailMode::none);
      series = 4.0 * (series.array() + mu.eigenvalues.sum());
      const KsResult ks = ks_two_sample(b.dz1_restricted, series);
      report["ks_reports"].push_back({{"label", "dz1_restricted vs 4 sum mu zeta^2"},
                                      {"statistic", ks.statistic},
                                      {"p_value", ks.p_value}});
      for (int j = 1; j <= m; ++j) {
        const DominationReport d = quantile_domination(b, j, b.dz1_restricted);
        report["domination"].push_back({{"j", j},
                                        {"q", d.q},
                                        {"residual_quantile", d.residual_quantile},
                                        {"surrogate_quantile", d.surrogate_quantile},
                                        {"holds", d.holds}});
      }
    }
  }
  write_json(dir.file("report.json"), report);
  dir.finish();
  return ok;
}

int cmd_density(const RunConfig& c)
{
  RunDir dir("density", c);
  const auto ctx = normalization_constant(c.H);
  const double t = c.times.front();
  const int cells = std::max(1, static_cast<int>(std::lround(c.grid.n * t)));
  const Eigen::VectorXd x = x_grid(c.density);
  const bool want_cf = c.density.method != "kde";
  const bool want_kde = c.density.method != "cf";
  if (want_kde && c.density.derivative_order != 0)
    throw ConfigError("density.method kde only supports derivative_order 0");

  Json summary = {{"t", t}, {"derivative_order", c.density.derivative_order}};
  std::optional<DensityCurve> cf, k;
  if (want_cf) {
    const Spectrum s = rosenblatt_level_spectrum(ctx, t, cells, policy(c));
    cf = cf_inversion(s, c.density.derivative_order, x);
    cf->lambda_coverage = s.coverage;
    write_curve(dir, "density_cf", *cf);
  }
  if (want_kde) {
    const Spectrum s = rosenblatt_level_spectrum(ctx, t, cells);
    const Eigen::VectorXd samples = run_series_batch(s, plan(c), TailMode::extrapolated);
    k = kde(samples, x, c.density.bandwidth);
    write_curve(dir, "density_kde", *k);
    const double sigma = std::sqrt(samples.squaredNorm() / samples.size());
    try {
      const TailFitReport tf = tail_fit(samples, sigma, Eigen::VectorXd::LinSpaced(11, 2.0, 4.0));
      summary["tail_fit"] = {{"sigma", sigma}, {"fitted_c", tf.fitted_c}, {"r_squared", tf.r_squared}};
    } catch (const TailFitError& e) {
      summary["tail_fit"] = {{"error", e.what()}, {"usable_t_max", e.usable_t_max}};
    }
  }
  if (cf && k)
    summary["sup_difference"] = (cf->values - k->values).cwiseAbs().maxCoeff();
  write_json(dir.file("summary.json"), summary);
  dir.finish();
  return ok;
}

int cmd_verify(const RunConfig& c)
{
  RunDir dir("verify", c);
  const VerifyReport report = run_verification(c, [](const CriterionResult& r) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.title << ": " << r.summary << std::endl;
  });
  write_json(dir.file("verify.json"), report.json());
  write_text(dir.file("verify.txt"), report.table());
  dir.finish();
  std::cout << report.table().substr(report.table().rfind('\n', report.table().size() - 2) + 1);
  return report.all_passed() ? ok : failure;
}

void print_error(const std::string& kind, const std::string& message, const std::optional<fs::path>& out)
{
  const Json j = {{"error", kind}, {"message", message}};
  std::cerr << j.dump() << std::endl;
  if (out) {
    try {
      write_json(*out / "error.json", j);
    } catch (...) {
    }
  }
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Rosenblatt process toolkit: spectra, sampling, Malliavin matrices, densities"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--threads", o.threads, "worker thread cap (does not affect results)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--hurst", o.hurst, "Hurst index H in (1/2, 1)");
    sub->add_option("--times", o.times, "partition times, comma separated");
  };
  std::map<std::string, int (*)(const RunConfig&)> commands{{"spectrum", cmd_spectrum},
                                                            {"simulate", cmd_simulate},
                                                            {"malliavin", cmd_malliavin},
                                                            {"density", cmd_density},
                                                            {"verify", cmd_verify}};
  const std::map<std::string, std::string> help{
      {"spectrum", "eigenvalues of M_t at each partition time and of the derivative covariance operator"},
      {"simulate", "joint increment samples on the partition"},
      {"malliavin", "Malliavin matrix determinants, negative moments and positivity census"},
      {"density", "density (or derivative) by cf inversion and/or KDE"},
      {"verify", "run the acceptance criteria and print a pass/fail table"}};
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name, help.at(name));
    add_common(sub);
    if (name == "verify") {
      sub->add_option("--scale", o.scale, "multiplier on every Monte Carlo sample count");
      sub->add_option("--criteria", o.criteria, "criterion ids to run, comma separated");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what(), std::nullopt);
    return usage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  RunConfig config;
  try {
    config = resolve(o);
  } catch (const std::exception& e) {
    print_error("config", e.what(), std::nullopt);
    return usage;
  }
  try {
    return commands.at(name)(config);
  } catch (const ConfigError& e) {
    print_error("config", e.what(), fs::path(config.output_dir));
    return usage;
  } catch (const std::invalid_argument& e) {
    print_error("precondition", e.what(), fs::path(config.output_dir));
    return usage;
  } catch (const std::exception& e) {
    print_error("runtime", e.what(), fs::path(config.output_dir));
    return failure;
  }
}
