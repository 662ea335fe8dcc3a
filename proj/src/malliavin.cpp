#include "rosenblatt/malliavin.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace rosenblatt {

DerivativeSet malliavin_derivatives(const std::vector<SecondChaosMatrix>& matrices, const GaussianState& state)
{
  DerivativeSet out;
  if (matrices.empty())
    return out;
  const Eigen::Index n = matrices.front().dimension();
  for (const auto& M : matrices)
    if (M.dimension() != n || M.grid != matrices.front().grid)
      throw std::invalid_argument("malliavin_derivatives: matrices do not share one grid");
  if (state.dimension() != n)
    throw std::invalid_argument("malliavin_derivatives: noise dimension does not match the grid");
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(n);
  for (const auto& M : matrices) {
    Eigen::VectorXd level = 2.0 * M.M * state.xi;
    out.push_back(level - prev);
    prev = std::move(level);
  }
  return out;
}

Eigen::MatrixXd gram_matrix(const DerivativeSet& d)
{
  const auto m = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd G(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      if (d[i].size() != d[j].size())
        throw std::invalid_argument("gram_matrix: derivative vectors differ in length");
      G(i, j) = G(j, i) = d[i].dot(d[j]);
    }
  return G;
}

ProjectionDet det_via_projections(const DerivativeSet& d)
{
  if (d.empty())
    throw std::invalid_argument("det_via_projections: need at least one vector");
  ProjectionDet out;
  out.residual_norms.resize(static_cast<Eigen::Index>(d.size()));
  std::vector<Eigen::VectorXd> basis;
  out.det = 1.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    Eigen::VectorXd v = d[j];
    const double original = v.squaredNorm();
    for (const auto& q : basis)
      v -= q.dot(v) * q;
    // Residual norm below 1e-6 of the original: cancellation, project once more.
    if (v.squaredNorm() < 1e-12 * original)
      for (const auto& q : basis)
        v -= q.dot(v) * q;
    const double r = v.squaredNorm();
    out.residual_norms(static_cast<Eigen::Index>(j)) = r;
    out.det *= r;
    if (r > 0.0)
      basis.push_back(v / std::sqrt(r));
  }
  return out;
}

double direct_determinant(const Eigen::MatrixXd& gram)
{
  if (gram.rows() != gram.cols())
    throw std::invalid_argument("direct_determinant: matrix must be square");
  return gram.partialPivLu().determinant();
}

MalliavinSample malliavin_sample(const std::vector<SecondChaosMatrix>& matrices, const GaussianState& state)
{
  MalliavinSample s;
  s.derivative_vectors = malliavin_derivatives(matrices, state);
  s.gram = gram_matrix(s.derivative_vectors);
  auto proj = det_via_projections(s.derivative_vectors);
  s.det = proj.det;
  s.residual_norms = std::move(proj.residual_norms);
  return s;
}

PositivityCensus positivity_census(const Eigen::VectorXd& dets, double epsilon)
{
  PositivityCensus c;
  c.samples = dets.size();
  c.epsilon = epsilon;
  for (Eigen::Index i = 0; i < dets.size(); ++i)
    if (!(dets(i) > epsilon))
      ++c.violations;
  return c;
}

double default_positivity_epsilon(const TimePartition& partition, double H)
{
  double scale = 1.0;
  for (int j = 1; j <= partition.m(); ++j)
    scale *= std::pow(partition.spacing(j), 2.0 * H);
  return 1e-14 * scale;
}

MomentReport negative_moment(const Eigen::VectorXd& values, double p, const std::string& target, std::uint64_t seed)
{
  if (values.size() < 2)
    throw std::invalid_argument("negative_moment: need at least two samples");
  if (!(values.array() > 0.0).all())
    throw std::domain_error("negative_moment: " + target + " has a nonpositive sample");
  const Eigen::VectorXd c = values.array().pow(-p);
  MomentReport r;
  r.p = p;
  r.target = target;
  r.n = values.size();
  r.estimate = c.mean();
  r.half_width = bootstrap_mean_half_width(c, 200, seed);
  r.stability_ratio = r.estimate / c.head(c.size() / 2).mean();
  r.max_share = c.maxCoeff() / c.sum();
  r.unstable = r.max_share > 0.1;
  return r;
}

double laplace_negative_moment(const Eigen::VectorXd& weights, double p)
{
  if (!(p > 0.0))
    throw std::invalid_argument("laplace_negative_moment: p must be positive");
  const auto positive = (weights.array() > 0.0).count();
  if (!(positive > 2.0 * p))
    throw std::domain_error("laplace_negative_moment: need more than 2p positive weights for a finite moment");
  const Eigen::ArrayXd w = (weights.array() > 0.0).select(weights.array(), 0.0);
  auto log_integrand = [&](double u) {
    return p * u - 0.5 * (2.0 * w * std::exp(u)).log1p().sum();
  };
  // The integrand is analytic in a strip of half-width pi around the real
  // u-axis, so the trapezoid rule converges geometrically in 1/h.
  const double h = 0.05;
  const double u0 = -std::log(2.0 * w.maxCoeff());
  double peak = log_integrand(u0);
  double lo = u0, hi = u0;
  while (log_integrand(lo) > peak - 45.0)
    lo -= 1.0;
  while (log_integrand(hi) > peak - 45.0) {
    hi += 1.0;
    peak = std::max(peak, log_integrand(hi));
  }
  double sum = 0.0;
  for (double u = lo; u <= hi; u += h)
    sum += std::exp(log_integrand(u) - peak);
  return std::exp(std::log(sum * h) + peak - std::lgamma(p));
}

SurrogateCheck chi_square_surrogate(double lambda, int p, std::int64_t mc_samples, std::uint64_t seed)
{
  if (!(lambda > 0.0) || p < 1)
    throw std::invalid_argument("chi_square_surrogate: need lambda > 0 and p >= 1");
  SurrogateCheck s;
  s.N = 2 * p + 1;
  s.p = p;
  s.lambda = lambda;
  const double half = 0.5 * s.N;
  s.closed_form = std::exp(-p * std::log(4.0 * lambda) + std::lgamma(half - p) - std::lgamma(half) - p * std::log(2.0));
  s.quadrature = laplace_negative_moment(Eigen::VectorXd::Constant(s.N, 4.0 * lambda), p);
  s.rel_error = std::abs(s.quadrature - s.closed_form) / s.closed_form;
  if (mc_samples > 1) {
    Eigen::VectorXd c(mc_samples);
    Eigen::VectorXd z(s.N);
    for (std::int64_t i = 0; i < mc_samples; ++i) {
      fill_normals(seed, static_cast<std::uint64_t>(i), z);
      c(i) = std::pow(4.0 * lambda * z.squaredNorm(), -static_cast<double>(p));
    }
    s.mc_estimate = c.mean();
    s.mc_half_width = bootstrap_mean_half_width(c, 200, seed);
  }
  return s;
}

TraceExtrapolation restricted_trace_extrapolation(const ChaosSystem& finest)
{
  const int c = finest.options().cells_per_unit;
  if (c % 4 != 0 || c < 8)
    throw std::invalid_argument("restricted_trace_extrapolation: cells_per_unit must be a multiple of 4 (>= 8)");
  TraceExtrapolation r;
  for (int k : {c / 4, c / 2}) {
    ChaosOptions opt = finest.options();
    opt.cells_per_unit = k;
    const ChaosSystem coarse(finest.context(), finest.partition(), opt);
    r.cells_per_unit.push_back(k);
    r.traces.push_back(4.0 * coarse.restricted_derivative_spectrum().eigenvalues.sum());
  }
  r.cells_per_unit.push_back(c);
  r.traces.push_back(4.0 * finest.restricted_derivative_spectrum().eigenvalues.sum());
  const double d1 = r.traces[1] - r.traces[0], d2 = r.traces[2] - r.traces[1];
  r.ratio = d2 / d1;
  if (!(r.ratio > 0.0 && r.ratio < 1.0))
    throw std::runtime_error("restricted_trace_extrapolation: traces are not converging geometrically");
  r.limit = r.traces[2] + d2 * r.ratio / (1.0 - r.ratio);
  return r;
}

MalliavinBatch run_malliavin_batch(const ChaosSystem& system, const SamplingPlan& plan, const MalliavinOptions& opt)
{
  const int m = system.partition().m();
  const Eigen::Index n = plan.n_samples;
  const Eigen::Index J = system.dimension();
  const auto& W = system.noise_map();
  const bool restricted = opt.restricted && system.has_unit_restriction();
  const Eigen::MatrixXd* Q = restricted ? &system.restricted_gram() : nullptr;
  const Eigen::Index k1 = restricted ? system.cells_before(1.0) : 0;

  std::vector<Eigen::Index> bounds{0};
  for (int j = 1; j <= m; ++j)
    bounds.push_back(system.level_cells(j));

  // D(Z_{t_j} - Z_{t_{j-1}}) = 2 W_j^T W_j eta with W_j the rows of interval j.
  // Either form W_j^T W_j once (m J^2 per sample) or go through Y = W eta
  // (2 cells J per sample), whichever is cheaper.
  const bool via_products = m * J < 2 * system.cells();
  std::vector<Eigen::MatrixXd> Mj;
  Eigen::VectorXd traces(m);
  for (int j = 0; j < m; ++j) {
    const auto Wj = W.middleRows(bounds[j], bounds[j + 1] - bounds[j]);
    traces(j) = Wj.squaredNorm();
    if (via_products)
      Mj.push_back(Wj.transpose() * Wj);
  }
  Eigen::MatrixXd M1;
  if (restricted && via_products)
    M1 = W.topRows(k1).transpose() * W.topRows(k1);

  MalliavinBatch out;
  out.partition = system.partition();
  out.H = system.context().H;
  out.det.resize(n);
  out.residual_norms.resize(n, m);
  out.dz1_full.resize(n);
  out.increments.resize(n, m);
  if (opt.direct)
    out.det_direct.resize(n);
  if (restricted)
    out.dz1_restricted.resize(n);

  for_each_block(
      system,
      plan,
      [&](const NoiseBlock& b) {
        std::vector<Eigen::MatrixXd> G(m);
        for (int j = 0; j < m; ++j) {
          const Eigen::Index lo = bounds[j], len = bounds[j + 1] - bounds[j];
          if (via_products) {
            G[j].noalias() = 2.0 * Mj[j] * b.eta;
            // eta^T M_j eta = eta^T G_j / 2
            out.increments.col(j).segment(b.first, b.count) =
                (0.5 * (b.eta.leftCols(b.count).array() * G[j].leftCols(b.count).array()).colwise().sum().transpose() -
                 traces(j))
                    .matrix();
          } else {
            G[j].noalias() = 2.0 * W.middleRows(lo, len).transpose() * b.Y.middleRows(lo, len);
          }
        }
        if (!via_products)
          out.increments.middleRows(b.first, b.count) = block_increments(system, b);
        Eigen::MatrixXd R, QR;
        if (restricted) {
          if (via_products)
            R.noalias() = 2.0 * M1 * b.eta;
          else
            R.noalias() = 2.0 * W.topRows(k1).transpose() * b.Y.topRows(k1);
          QR.noalias() = (*Q) * R;
        }
        DerivativeSet d(m);
        for (Eigen::Index i = 0; i < b.count; ++i) {
          const Eigen::Index row = b.first + i;
          for (int j = 0; j < m; ++j)
            d[j] = G[j].col(i);
          const auto proj = det_via_projections(d);
          out.det(row) = proj.det;
          out.residual_norms.row(row) = proj.residual_norms.transpose();
          out.dz1_full(row) = d[0].squaredNorm();
          if (opt.direct)
            out.det_direct(row) = direct_determinant(gram_matrix(d));
          if (restricted)
            out.dz1_restricted(row) = R.col(i).dot(QR.col(i));
        }
      },
      !via_products);
  return out;
}

namespace {

KsReport ks_report(const std::string& label, const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
  const auto r = ks_two_sample(a, b);
  return {label, r.statistic, r.p_value};
}

} // namespace

ScalingReport scaling_check(const MalliavinBatch& base, const MalliavinBatch& scaled, double a)
{
  const int m = base.partition.m();
  if (scaled.partition.m() != m)
    throw std::invalid_argument("scaling_check: batches have different partition sizes");
  if (base.size() != scaled.size())
    throw std::invalid_argument("scaling_check: batches must have equal sample counts");
  const double H = base.H;
  ScalingReport r;
  r.a = a;
  const Eigen::VectorXd lb = base.det.array().log();
  const Eigen::VectorXd ls = scaled.det.array().log() - 2.0 * H * m * std::log(a);
  r.log_det = ks_report("log det", lb, ls);
  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXd rb = base.residual_norms.col(j).array().log();
    const Eigen::VectorXd rs = scaled.residual_norms.col(j).array().log() - 2.0 * H * std::log(a);
    r.residuals.push_back(ks_report("log residual " + std::to_string(j + 1), rb, rs));
  }
  return r;
}

DominationReport quantile_domination(const MalliavinBatch& batch,
                                     int j,
                                     const Eigen::VectorXd& surrogate,
                                     const std::vector<double>& q)
{
  if (j < 1 || j > batch.partition.m())
    throw std::out_of_range("quantile_domination: coordinate out of range");
  const double scale = std::pow(batch.partition.spacing(j), 2.0 * batch.H);
  const Eigen::VectorXd x = batch.residual_norms.col(j - 1) / scale;
  std::vector<double> sx(x.data(), x.data() + x.size());
  std::vector<double> ss(surrogate.data(), surrogate.data() + surrogate.size());
  std::sort(sx.begin(), sx.end());
  std::sort(ss.begin(), ss.end());
  DominationReport r;
  r.j = j;
  r.q = q;
  const double ns = static_cast<double>(ss.size());
  for (double qq : q) {
    // SE of a sample quantile from the spread of neighbouring order statistics.
    const double s = std::sqrt(qq * (1.0 - qq) / ns);
    const double se = 0.5 * (sorted_quantile(ss, std::min(1.0, qq + s)) - sorted_quantile(ss, std::max(0.0, qq - s)));
    r.residual_quantile.push_back(sorted_quantile(sx, qq));
    r.surrogate_quantile.push_back(sorted_quantile(ss, qq) - 2.0 * se);
    r.holds = r.holds && r.residual_quantile.back() >= r.surrogate_quantile.back();
  }
  return r;
}

} // namespace rosenblatt
