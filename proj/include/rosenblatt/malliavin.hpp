#pragma once

#include "rosenblatt/chaos_system.hpp"
#include "rosenblatt/sampler.hpp"
#include "rosenblatt/stats.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace rosenblatt {

using DerivativeSet = std::vector<Eigen::VectorXd>;

//! D(Z_{t_j} - Z_{t_{j-1}}) = 2 (M_{t_j} - M_{t_{j-1}}) xi. Weights are folded
//! into M, so the H inner product is the plain dot product.
DerivativeSet malliavin_derivatives(const std::vector<SecondChaosMatrix>& matrices, const GaussianState& state);

Eigen::MatrixXd gram_matrix(const DerivativeSet& derivatives);

struct ProjectionDet
{
  double det = 0.0;
  Eigen::VectorXd residual_norms; // squared norms of DZ_j minus its projection on span(DZ_1..DZ_{j-1})
};

//! Modified Gram-Schmidt with re-orthogonalization; det is the product of residual_norms.
ProjectionDet det_via_projections(const DerivativeSet& derivatives);

//! Determinant of a small symmetric matrix by partial-pivot LU.
double direct_determinant(const Eigen::MatrixXd& gram);

struct MalliavinSample
{
  DerivativeSet derivative_vectors;
  Eigen::MatrixXd gram;
  double det = 0.0;
  Eigen::VectorXd residual_norms;
};

MalliavinSample malliavin_sample(const std::vector<SecondChaosMatrix>& matrices, const GaussianState& state);

struct PositivityCensus
{
  std::int64_t samples = 0;
  std::int64_t violations = 0;
  double epsilon = 0.0;
};

//! Counts determinants <= epsilon.
PositivityCensus positivity_census(const Eigen::VectorXd& dets, double epsilon);
//! Default threshold 1e-14 prod (t_j - t_{j-1})^{2H}.
double default_positivity_epsilon(const TimePartition& partition, double H);

struct MomentReport
{
  double p = 1.0;
  std::string target;
  std::int64_t n = 0;
  double estimate = 0.0;
  double half_width = 0.0;      // 95% bootstrap
  double stability_ratio = 1.0; // estimate on all samples / estimate on the first half
  double max_share = 0.0;       // largest single contribution to the sum
  bool unstable = false;        // max_share > 10%
};

//! Empirical E[target^{-p}]; throws if any value is <= 0.
MomentReport negative_moment(const Eigen::VectorXd& values, double p, const std::string& target, std::uint64_t seed = 0);

//! E[(sum_k w_k zeta_k^2)^{-p}] = Gamma(p)^{-1} int_0^inf s^{p-1} prod_k (1 + 2 w_k s)^{-1/2} ds,
//! evaluated by the trapezoid rule in log s. Requires more than 2p positive weights.
double laplace_negative_moment(const Eigen::VectorXd& weights, double p);

struct SurrogateCheck
{
  int N = 0;
  double p = 1.0;
  double lambda = 0.0;
  double closed_form = 0.0; // (4 lambda)^{-p} Gamma(N/2 - p) / (2^p Gamma(N/2))
  double quadrature = 0.0;  // laplace_negative_moment on N copies of 4 lambda
  double rel_error = 0.0;
  double mc_estimate = 0.0; // heavy-tailed; reported, not asserted
  double mc_half_width = 0.0;
};

//! Surrogate 4 lambda chi^2(N) with N = 2p + 1.
SurrogateCheck chi_square_surrogate(double lambda, int p, std::int64_t mc_samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Batches on a ChaosSystem.

struct MalliavinOptions
{
  bool direct = true;     // also compute det by LU for comparison
  bool restricted = true; // ||D Z_{t_1}||^2 restricted to [0, 1], needs 1 as a cell edge
};

struct MalliavinBatch
{
  TimePartition partition;
  double H = 0.0;
  Eigen::VectorXd det;            // projection-product determinant
  Eigen::VectorXd det_direct;     // LU determinant (empty unless requested)
  Eigen::MatrixXd residual_norms; // n x m
  Eigen::VectorXd dz1_full;       // ||D Z_{t_1}||^2 over the whole line
  Eigen::VectorXd dz1_restricted; // ||D Z_{t_1}||^2 over [0, 1] (empty unless requested)
  Eigen::MatrixXd increments;     // n x m sample values, same noise

  std::int64_t size() const { return det.size(); }
};

MalliavinBatch run_malliavin_batch(const ChaosSystem& system, const SamplingPlan& plan, const MalliavinOptions& opt = {});

//! Grid extrapolation of E||D Z_1||^2 on [0, 1] = 4 tr(M_1 Q M_1).
//!
//! The Galerkin basis misses small-scale parts of L_1(s, .), so the restricted
//! trace converges slowly (about h^{1/2}).  The missing modes are many and tiny,
//! which makes their contribution nearly deterministic; adding `shift()` to the
//! sampled restricted norms restores the mean.
struct TraceExtrapolation
{
  std::vector<int> cells_per_unit; // c / 4, c / 2, c
  std::vector<double> traces;
  double ratio = 0.0; // successive difference ratio
  double limit = 0.0; // Aitken limit

  double shift() const { return limit - traces.back(); }
};

//! Uses the partition of `finest` at cells_per_unit / 4 and / 2 as well; needs cells_per_unit divisible by 4.
TraceExtrapolation restricted_trace_extrapolation(const ChaosSystem& finest);

struct KsReport
{
  std::string label;
  double statistic = 0.0;
  double p_value = 1.0;
};

struct ScalingReport
{
  double a = 1.0;
  KsReport log_det;
  std::vector<KsReport> residuals;
};

//! Compares log det at partition a (t_j), shifted by -2 H m log a, with log det at (t_j);
//! residual norm j is shifted by -2 H log a.
ScalingReport scaling_check(const MalliavinBatch& base, const MalliavinBatch& scaled, double a);

struct DominationReport
{
  int j = 1;
  std::vector<double> q;
  std::vector<double> residual_quantile;  // of residual_norms[j] / (t_j - t_{j-1})^{2H}
  std::vector<double> surrogate_quantile; // of the surrogate, minus 2 SE
  bool holds = true;
};

//! Quantile domination of the scaled residual norms over a ||D Z_1||^2 surrogate batch.
DominationReport quantile_domination(const MalliavinBatch& batch,
                                     int j,
                                     const Eigen::VectorXd& surrogate,
                                     const std::vector<double>& q = {0.01, 0.05, 0.1});

} // namespace rosenblatt
