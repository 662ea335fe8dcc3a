#include "oracle.hpp"

#include "rosenblatt/chaos_system.hpp"
#include "rosenblatt/malliavin.hpp"
#include "rosenblatt/random.hpp"
#include "rosenblatt/sampler.hpp"
#include "rosenblatt/stats.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

using namespace rosenblatt;
using doctest::Approx;

namespace {

DerivativeSet random_vectors(int m, int n, std::uint64_t seed)
{
  DerivativeSet d(m);
  for (int j = 0; j < m; ++j) {
    d[j].resize(n);
    fill_normals(seed, static_cast<std::uint64_t>(j), d[j]);
  }
  return d;
}

SamplingPlan plan(std::uint64_t seed, std::int64_t n)
{
  SamplingPlan p;
  p.seed = seed;
  p.n_samples = n;
  return p;
}

// E[(sum w_k zeta_k^2)^{-p}] by quadrature of the Laplace representation.
double laplace_oracle(const Eigen::VectorXd& w, double p)
{
  auto f = [&](double s) {
    double v = std::pow(s, p - 1);
    for (Eigen::Index k = 0; k < w.size(); ++k)
      v /= std::sqrt(1 + 2 * w(k) * s);
    return v;
  };
  const double decay = 0.5 * static_cast<double>(w.size()) - p + 1;
  return oracle::integrate_below([&](double y) { return f(-y); }, 0.0, 1e-13, decay) / std::tgamma(p);
}

} // namespace

TEST_CASE("projection determinant")
{
  SUBCASE("agrees with the Gram determinant")
  {
    for (int m : {1, 2, 4}) {
      const auto d = random_vectors(m, 10, 30 + m);
      const auto proj = det_via_projections(d);
      const Eigen::MatrixXd G = gram_matrix(d);
      CHECK(proj.det == Approx(direct_determinant(G)).epsilon(1e-10));
      CHECK(proj.det == Approx(G.determinant()).epsilon(1e-10));
      CHECK(proj.residual_norms(0) == Approx(d[0].squaredNorm()).epsilon(1e-14));
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues().minCoeff() > 0.0);
    }
  }
  SUBCASE("orthogonal vectors give the product of squared norms")
  {
    DerivativeSet d{Eigen::Vector3d(2, 0, 0), Eigen::Vector3d(0, 0, 3), Eigen::Vector3d(0, 0.5, 0)};
    const auto proj = det_via_projections(d);
    CHECK(proj.det == Approx(4 * 9 * 0.25).epsilon(1e-15));
  }
  SUBCASE("a repeated vector gives zero")
  {
    auto d = random_vectors(2, 8, 40);
    d.push_back(d[0]);
    const auto proj = det_via_projections(d);
    CHECK(proj.residual_norms(2) < 1e-24 * d[0].squaredNorm());
    CHECK(std::abs(proj.det) < 1e-20);
  }
  SUBCASE("nearly parallel vectors keep relative accuracy")
  {
    // det of [[1, 1], [1, 1 + e^2]] scaled: residual e^2 |v|^2 exactly
    Eigen::VectorXd a = Eigen::VectorXd::Zero(4), b = Eigen::VectorXd::Zero(4);
    a(0) = 1;
    b(0) = 1;
    b(1) = 1e-7;
    const auto proj = det_via_projections({a, b});
    CHECK(proj.residual_norms(1) == Approx(1e-14).epsilon(1e-6));
  }
  CHECK_THROWS_AS(det_via_projections({}), std::invalid_argument);
  CHECK_THROWS_AS(direct_determinant(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
  CHECK_THROWS_AS(gram_matrix({Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)}), std::invalid_argument);
}

TEST_CASE("derivatives of the discrete model")
{
  const auto ctx = normalization_constant(0.75);
  const ChaosSystem sys(ctx, TimePartition({1.0, 2.0}), ChaosOptions{16});
  const auto M = sys.level_matrices();

  SUBCASE("zero noise has zero derivative")
  {
    GaussianState zero;
    zero.xi = Eigen::VectorXd::Zero(sys.dimension());
    const auto s = malliavin_sample(M, zero);
    CHECK(s.derivative_vectors[0].norm() == 0.0);
    CHECK(s.det == 0.0);
  }
  SUBCASE("D Z_t = 2 M_t xi and the increments differ")
  {
    const auto st = gaussian_state(5, 0, sys.dimension());
    const auto s = malliavin_sample(M, st);
    CHECK((s.derivative_vectors[0] - 2 * M[0].M * st.xi).norm() < 1e-12);
    CHECK((s.derivative_vectors[1] - 2 * (M[1].M - M[0].M) * st.xi).norm() < 1e-12);
    CHECK(s.det == Approx(direct_determinant(s.gram)).epsilon(1e-9));
    CHECK(s.det > 0.0);
  }
  CHECK_THROWS_AS(malliavin_derivatives(M, gaussian_state(1, 0, 3)), std::invalid_argument);
  CHECK(malliavin_derivatives({}, gaussian_state(1, 0, 3)).empty());
}

TEST_CASE("Malliavin batches match single samples")
{
  const auto ctx = normalization_constant(0.75);
  auto check_batch = [&](const ChaosSystem& sys) {
    const auto batch = run_malliavin_batch(sys, plan(77, 300));
    const auto M = sys.level_matrices();
    const auto& Q = sys.restricted_gram();
    for (int i : {0, 1, 255, 256, 299}) {
      const auto st = gaussian_state(77, static_cast<std::uint64_t>(i), sys.dimension());
      const auto s = malliavin_sample(M, st);
      CHECK(batch.det(i) == Approx(s.det).epsilon(1e-8));
      CHECK(batch.det_direct(i) == Approx(s.det).epsilon(1e-6));
      CHECK((batch.residual_norms.row(i).transpose() - s.residual_norms).norm() <= 1e-9 * s.residual_norms.norm());
      CHECK(batch.dz1_full(i) == Approx(s.derivative_vectors[0].squaredNorm()).epsilon(1e-10));
      CHECK((batch.increments.row(i).transpose() - sample_increment_vector(M, st)).cwiseAbs().maxCoeff() < 1e-10);
      const Eigen::VectorXd r = 2 * M[0].M * st.xi;
      CHECK(batch.dz1_restricted(i) == Approx(r.dot(Q * r)).epsilon(1e-10));
      CHECK(batch.dz1_restricted(i) <= batch.dz1_full(i) * (1 + 1e-7));
    }
  };
  SUBCASE("one interval uses the product path")
  {
    check_batch(ChaosSystem(ctx, TimePartition({1.0}), ChaosOptions{32}));
  }
  SUBCASE("three intervals use the loading path")
  {
    check_batch(ChaosSystem(ctx, TimePartition({1.0, 1.5, 2.5}), ChaosOptions{16}));
  }
  SUBCASE("restriction is skipped when not requested or not available")
  {
    const ChaosSystem sys(ctx, TimePartition({0.5}), ChaosOptions{16});
    const auto batch = run_malliavin_batch(sys, plan(1, 10), MalliavinOptions{false, true});
    CHECK(batch.dz1_restricted.size() == 0);
    CHECK(batch.det_direct.size() == 0);
    CHECK(batch.size() == 10);
  }
}

TEST_CASE("mean squared derivative norm is 4 tr(M_1^2)")
{
  const auto ctx = normalization_constant(0.75);
  const ChaosSystem sys(ctx, TimePartition({1.0}), ChaosOptions{64});
  const auto batch = run_malliavin_batch(sys, plan(3, 20000));
  const double expected = 4 * sys.chaos_matrix(1.0).M.squaredNorm();
  CHECK(std::abs(mean(batch.dz1_full) - expected) < 4 * standard_error(batch.dz1_full));
  // 4 tr(M^2) = 2 Var(Z_1), close to 2
  CHECK(expected == Approx(2.0).epsilon(0.02));
}

TEST_CASE("negative moments")
{
  SUBCASE("Laplace quadrature against the chi-square closed form")
  {
    for (int N : {3, 5, 8})
      for (double p : {1.0, 2.0, 0.5}) {
        if (!(N > 2 * p))
          continue;
        const double w = 0.7;
        const double exact =
            std::pow(w, -p) * std::exp(std::lgamma(N / 2.0 - p) - std::lgamma(N / 2.0)) / std::pow(2.0, p);
        CHECK(laplace_negative_moment(Eigen::VectorXd::Constant(N, w), p) == Approx(exact).epsilon(1e-10));
      }
  }
  SUBCASE("Laplace quadrature with unequal weights")
  {
    Eigen::VectorXd w(6);
    w << 0.8, 0.3, 0.3, 0.05, 0.01, 0.001;
    for (double p : {1.0, 2.0})
      CHECK(laplace_negative_moment(w, p) == Approx(laplace_oracle(w, p)).epsilon(1e-8));
    // zero weights do not count toward finiteness
    Eigen::VectorXd few(4);
    few << 1.0, 1.0, 0.0, 0.0;
    CHECK_THROWS_AS(laplace_negative_moment(few, 1.0), std::domain_error);
    CHECK_THROWS_AS(laplace_negative_moment(w, 0.0), std::invalid_argument);
  }
  SUBCASE("chi-square surrogate")
  {
    const auto s = chi_square_surrogate(0.25, 1, 0, 1);
    CHECK(s.N == 3);
    CHECK(s.closed_form == Approx(1.0).epsilon(1e-14));
    CHECK(s.rel_error < 1e-10);
    const auto s2 = chi_square_surrogate(0.2, 2, 20000, 2);
    CHECK(s2.N == 5);
    CHECK(s2.rel_error < 1e-10);
    CHECK(s2.mc_estimate > 0.0);
    CHECK_THROWS_AS(chi_square_surrogate(0.0, 1, 0, 1), std::invalid_argument);
  }
  SUBCASE("empirical report")
  {
    Eigen::VectorXd v(4);
    v << 1.0, 2.0, 4.0, 0.5;
    const auto r = negative_moment(v, 1.0, "x", 3);
    CHECK(r.estimate == Approx((1 + 0.5 + 0.25 + 2) / 4.0));
    CHECK(r.max_share == Approx(2 / 3.75));
    CHECK(r.unstable);
    CHECK(r.stability_ratio == Approx(r.estimate / 0.75));
    CHECK(r.n == 4);
    v(2) = 0.0;
    CHECK_THROWS_AS(negative_moment(v, 1.0, "x"), std::domain_error);
    CHECK_THROWS_AS(negative_moment(Eigen::VectorXd::Ones(1), 1.0, "x"), std::invalid_argument);
  }
}

TEST_CASE("positivity census")
{
  Eigen::VectorXd d(5);
  d << 1.0, 1e-3, 0.0, -1e-20, 5.0;
  CHECK(positivity_census(d, 0.0).violations == 2);
  CHECK(positivity_census(d, 1e-2).violations == 3);
  CHECK(positivity_census(d, std::numeric_limits<double>::infinity()).violations == 5);
  CHECK(positivity_census(d, 0.0).samples == 5);
  const TimePartition p({0.5, 2.0});
  CHECK(default_positivity_epsilon(p, 0.75) == Approx(1e-14 * std::pow(0.5, 1.5) * std::pow(1.5, 1.5)));
}

TEST_CASE("scaling and domination reports")
{
  const auto ctx = normalization_constant(0.75);
  const ChaosSystem sys(ctx, TimePartition({1.0, 2.0}), ChaosOptions{16});
  const auto batch = run_malliavin_batch(sys, plan(8, 2000));
  SUBCASE("a batch compared with itself at a = 1")
  {
    const auto r = scaling_check(batch, batch, 1.0);
    CHECK(r.log_det.statistic == 0.0);
    CHECK(r.log_det.p_value == Approx(1.0));
    REQUIRE(r.residuals.size() == 2);
    CHECK(r.residuals[1].statistic == 0.0);
  }
  SUBCASE("exact rescaling by a^{2H} per coordinate")
  {
    MalliavinBatch scaled = batch;
    scaled.det *= std::pow(2.0, 2 * 0.75 * 2);
    scaled.residual_norms *= std::pow(2.0, 2 * 0.75);
    const auto r = scaling_check(batch, scaled, 2.0);
    CHECK(r.log_det.statistic < 1e-3);
    CHECK(r.residuals[0].statistic < 1e-3);
  }
  SUBCASE("domination")
  {
    const Eigen::VectorXd small = batch.residual_norms.col(1) * 0.1;
    CHECK(quantile_domination(batch, 2, small).holds);
    const Eigen::VectorXd large = batch.residual_norms.col(1) * 10.0;
    CHECK_FALSE(quantile_domination(batch, 2, large).holds);
    CHECK_THROWS_AS(quantile_domination(batch, 3, small), std::out_of_range);
  }
  MalliavinBatch other = batch;
  other.det.conservativeResize(10);
  CHECK_THROWS_AS(scaling_check(batch, other, 1.0), std::invalid_argument);
}
