#include "rosenblatt/chaos_system.hpp"
#include "rosenblatt/io.hpp"
#include "rosenblatt/random.hpp"
#include "rosenblatt/sampler.hpp"
#include "rosenblatt/stats.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace rosenblatt;
using doctest::Approx;

namespace {

Spectrum one_mode(double lambda)
{
  Eigen::VectorXd v(1);
  v << lambda;
  return make_spectrum(v, Eigen::MatrixXd(), Spectrum::Order::magnitude);
}

SamplingPlan plan(std::uint64_t seed, std::int64_t n, int chunks = 1, int threads = 1)
{
  SamplingPlan p;
  p.seed = seed;
  p.n_samples = n;
  p.chunks = chunks;
  p.threads = threads;
  return p;
}

// Exact covariance of the increments of the discrete model: Cov(Z_s, Z_t) = 2 tr(M_s M_t).
Eigen::MatrixXd increment_covariance(const std::vector<SecondChaosMatrix>& M)
{
  const int m = static_cast<int>(M.size());
  std::vector<Eigen::MatrixXd> D;
  for (int j = 0; j < m; ++j)
    D.push_back(j == 0 ? M[0].M : Eigen::MatrixXd(M[j].M - M[j - 1].M));
  Eigen::MatrixXd C(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      C(i, j) = 2 * (D[i] * D[j]).trace();
  return C;
}

} // namespace

TEST_CASE("stream seeds")
{
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i)
    seen.insert(derive_seed(7, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
  CHECK(derive_seed(7, 3) != derive_seed(8, 3));

  const auto a = gaussian_state(7, 3, 16), b = gaussian_state(7, 3, 16), c = gaussian_state(7, 4, 16);
  CHECK(a.xi == b.xi);
  CHECK(a.xi != c.xi);
  // a longer draw from the same stream extends the shorter one
  CHECK(gaussian_state(7, 3, 32).xi.head(16) == a.xi);
}

TEST_CASE("level and increment maps")
{
  Eigen::VectorXd y(4);
  y << 0.5, -1.0, 2.0, 0.25;
  const Eigen::VectorXd z = level_from_increments(y);
  CHECK(z(3) == Approx(1.75));
  CHECK(increments_from_levels(z) == y);
  const Eigen::MatrixXd L = level_map_matrix(4);
  CHECK((L * y - z).norm() == 0.0);
  CHECK(L.determinant() == 1.0);
  CHECK(level_map_matrix(1)(0, 0) == 1.0);
}

TEST_CASE("series sampler")
{
  SUBCASE("one mode with lambda = 1/2 has variance 1/2")
  {
    const auto v = run_series_batch(one_mode(0.5), plan(3, 100000));
    const auto est = variance_estimate(v);
    CHECK(std::abs(est.value - 0.5) < 4 * est.se);
    CHECK(std::abs(mean(v)) < 4 * standard_error(v));
  }
  SUBCASE("one mode with lambda = 1 is chi^2_1 - 1")
  {
    const auto v = run_series_batch(one_mode(1.0), plan(4, 100000));
    CHECK(v.minCoeff() >= -1.0);
    // P(chi^2_1 <= 1) = erf(1 / sqrt 2)
    const double p = std::erf(1 / std::sqrt(2.0));
    const double emp = (v.array() <= 0.0).cast<double>().mean();
    CHECK(std::abs(emp - p) < 4 * std::sqrt(p * (1 - p) / 1e5));
  }
  SUBCASE("an empty spectrum gives zero")
  {
    const auto empty = make_spectrum(Eigen::VectorXd(), Eigen::MatrixXd(), Spectrum::Order::magnitude);
    CHECK(run_series_batch(empty, plan(5, 10)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("discarded modes become a Gaussian with their variance")
  {
    Eigen::VectorXd lam(3);
    lam << 0.6, 0.3, 0.2;
    const auto s = make_spectrum(lam, Eigen::MatrixXd(), Spectrum::Order::magnitude, RetentionPolicy{1, 1.0});
    CHECK(series_modes(s, TailMode::discarded) == 1);
    CHECK(series_dimension(s, TailMode::discarded) == 2);
    CHECK(series_dimension(s, TailMode::none) == 1);
    CHECK(series_remainder_variance(s, TailMode::discarded) == Approx(2 * (0.09 + 0.04)));
    CHECK(series_remainder_variance(s, TailMode::none) == 0.0);
    const auto v = run_series_batch(s, plan(6, 100000), TailMode::discarded);
    const auto est = variance_estimate(v);
    CHECK(std::abs(est.value - 2 * lam.squaredNorm()) < 4 * est.se);
    GaussianState short_state = gaussian_state(1, 0, 1);
    CHECK_THROWS_AS(sample_series(s, short_state, TailMode::discarded), std::invalid_argument);
  }
  SUBCASE("extrapolated tail restores unit variance")
  {
    const auto s = rosenblatt_level_spectrum(normalization_constant(0.75), 1.0, 512);
    REQUIRE(s.extrapolated());
    CHECK(series_modes(s, TailMode::extrapolated) == s.tail_start);
    CHECK(2 * s.eigenvalues.head(s.tail_start).squaredNorm() + series_remainder_variance(s, TailMode::extrapolated) ==
          Approx(s.extrapolated_variance()).epsilon(1e-12));
  }
}

TEST_CASE("chaos system batches")
{
  const auto ctx = normalization_constant(0.75);
  const ChaosSystem sys(ctx, TimePartition({1.0, 2.0, 3.0}), ChaosOptions{32});
  const auto M = sys.level_matrices();

  SUBCASE("block increments agree with the single-sample primitive")
  {
    const auto block = noise_block(sys, 21, 512, 100);
    CHECK(block.eta.cols() == kSampleBlock);
    CHECK(block.eta.rightCols(kSampleBlock - 100).norm() == 0.0);
    const Eigen::MatrixXd inc = block_increments(sys, block);
    for (int i : {0, 57, 99}) {
      const auto state = gaussian_state(21, 512 + i, sys.dimension());
      CHECK(block.eta.col(i) == state.xi);
      CHECK((inc.row(i).transpose() - sample_increment_vector(M, state)).cwiseAbs().maxCoeff() < 1e-11);
    }
    CHECK(sample_increment_vector({}, gaussian_state(1, 0, 3)).size() == 0);
    CHECK_THROWS_AS(sample_increment_vector(M, gaussian_state(1, 0, 3)), std::invalid_argument);
  }
  SUBCASE("layout does not change the numbers")
  {
    const auto a = run_batch(sys, plan(9, 3000, 1, 1));
    const auto b = run_batch(sys, plan(9, 3000, 7, 3));
    CHECK(a.values == b.values);
    const auto s = rosenblatt_level_spectrum(ctx, 1.0, 64);
    CHECK(run_series_batch(s, plan(9, 3000, 1, 1)) == run_series_batch(s, plan(9, 3000, 5, 4)));
    CHECK(a.stream_layout != b.stream_layout);
  }
  SUBCASE("increment covariance matches 2 tr(M_i M_j)")
  {
    const auto batch = run_batch(sys, plan(10, 40000, 4, 2));
    const Eigen::MatrixXd C = increment_covariance(M);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        const auto est = covariance_estimate(batch.values.col(i), batch.values.col(j));
        CHECK(std::abs(est.value - C(i, j)) < 4 * est.se);
      }
    // stationary increments of the target: unit variances and Cov(Z_1, Z_2 - Z_1) = sqrt 2 - 1
    for (int i = 0; i < 3; ++i)
      CHECK(C(i, i) == Approx(1.0).epsilon(0.03));
    CHECK(C(0, 1) == Approx(std::sqrt(2.0) - 1).epsilon(0.03));
    CHECK(batch.coverage == Approx(1 - M[0].frobenius_deficit).epsilon(1e-12));
  }
  SUBCASE("an exhausted time budget keeps a finished prefix")
  {
    auto p = plan(11, 200000);
    p.time_budget_seconds = 1e-9;
    try {
      run_batch(sys, p);
      FAIL("expected PartialBatchError");
    } catch (const PartialBatchError& e) {
      CHECK(e.completed < 200000);
      CHECK(e.completed % kSampleBlock == 0);
    }
  }
  SUBCASE("invalid plans")
  {
    CHECK_THROWS_AS(run_batch(sys, plan(1, -1)), std::invalid_argument);
    CHECK_THROWS_AS(run_batch(sys, plan(1, 10, 0)), std::invalid_argument);
    CHECK(run_batch(sys, plan(1, 0)).values.rows() == 0);
  }
}

TEST_CASE("sample batch files")
{
  const auto ctx = normalization_constant(0.75);
  const ChaosSystem sys(ctx, TimePartition({0.5, 1.0}), ChaosOptions{16});
  const auto batch = run_batch(sys, plan(12, 5));
  const auto dir = std::filesystem::temp_directory_path() / "rosenblatt_test_sampler";
  std::filesystem::create_directories(dir);
  write_sample_batch(batch, dir / "samples.csv");

  std::ifstream in(dir / "samples.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "dz1,dz2");
  int rows = 0;
  while (std::getline(in, line)) {
    if (rows == 0)
      CHECK(line == format_double(batch.values(0, 0)) + "," + format_double(batch.values(0, 1)));
    ++rows;
  }
  CHECK(rows == 5);

  std::ifstream js(dir / "samples.csv.json");
  const auto j = Json::parse(js);
  CHECK(j["seed"] == 12);
  CHECK(j["n_samples"] == 5);
  CHECK(j["partition"] == Json::array({0.5, 1.0}));
  CHECK(j.contains("stream_layout"));
  CHECK(j.contains("coverage"));
  std::filesystem::remove_all(dir);
}
