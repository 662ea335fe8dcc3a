#include "rosenblatt/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace rosenblatt {

double Spectrum::extrapolated_variance() const
{
  if (!extrapolated())
    return 2.0 * total_sq;
  return 2.0 * (head_sq + tail_sq);
}

Spectrum make_spectrum(const Eigen::VectorXd& values,
                       const Eigen::MatrixXd& vectors,
                       Spectrum::Order order,
                       const RetentionPolicy& policy)
{
  const Eigen::Index n = values.size();
  if (vectors.size() != 0 && vectors.cols() != n)
    throw std::invalid_argument("make_spectrum: eigenvector count does not match eigenvalues");
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (order == Spectrum::Order::value)
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values(a) > values(b); });
  else
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
      return std::abs(values(a)) > std::abs(values(b));
    });

  Spectrum s;
  s.order = order;
  s.full_size = n;
  s.total_sq = values.squaredNorm();
  s.total_sum = values.sum();

  Eigen::Index keep = policy.j_max > 0 ? std::min(policy.j_max, n) : n;
  if (policy.coverage_target < 1.0 && s.total_sq > 0.0) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < keep; ++k) {
      acc += values(idx[k]) * values(idx[k]);
      if (acc >= policy.coverage_target * s.total_sq) {
        keep = k + 1;
        break;
      }
    }
  }
  s.eigenvalues.resize(keep);
  for (Eigen::Index k = 0; k < keep; ++k)
    s.eigenvalues(k) = values(idx[k]);
  if (vectors.size() != 0) {
    s.eigenvectors.resize(vectors.rows(), keep);
    for (Eigen::Index k = 0; k < keep; ++k)
      s.eigenvectors.col(k) = vectors.col(idx[k]);
  }
  s.coverage = s.total_sq > 0.0 ? s.retained_sq() / s.total_sq : 1.0;
  return s;
}

Eigen::MatrixXd kernel_matrix(const KernelFn& kernel, const QuadratureGrid& grid, int threads)
{
  const Eigen::Index n = grid.size();
  Eigen::MatrixXd K(n, n);
  auto rows = [&](int worker, int stride) {
    for (Eigen::Index i = worker; i < n; i += stride)
      for (Eigen::Index j = i; j < n; ++j)
        K(i, j) = kernel(grid.nodes(i), grid.nodes(j));
  };
  threads = std::max(1, threads);
  if (threads == 1) {
    rows(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back(rows, w, threads);
    for (auto& th : pool)
      th.join();
  }
  K.triangularView<Eigen::StrictlyLower>() = K.transpose().triangularView<Eigen::StrictlyLower>();
  return K;
}

Spectrum nystrom_eig(const KernelFn& kernel, const QuadratureGrid& grid, const NystromOptions& opt)
{
  if (grid.size() < 1)
    throw std::invalid_argument("nystrom_eig: empty grid");
  if (opt.retention.j_max > grid.size())
    throw std::invalid_argument("nystrom_eig: j_max exceeds node count");
  const Eigen::VectorXd sw = grid.weights.array().sqrt();
  Eigen::MatrixXd A = kernel_matrix(kernel, grid, opt.threads);
  A = sw.asDiagonal() * A * sw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      A, opt.eigenvectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "nystrom_eig: eigensolver did not converge (n=" << grid.size()
        << ", max |K|=" << A.cwiseAbs().maxCoeff() << ")";
    throw std::runtime_error(msg.str());
  }
  Eigen::MatrixXd vectors;
  if (opt.eigenvectors)
    vectors = sw.cwiseInverse().asDiagonal() * es.eigenvectors();
  return make_spectrum(es.eigenvalues(), vectors, opt.order, opt.retention);
}

namespace {

// sum_{k >= 0} (x + k)^{-s}, s > 1, x > 0.
double hurwitz_zeta(double s, double x)
{
  const int direct = 64;
  double sum = 0.0;
  for (int k = 0; k < direct; ++k)
    sum += std::pow(x + k, -s);
  const double y = x + direct;
  sum += std::pow(y, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(y, -s) + s * std::pow(y, -s - 1.0) / 12.0 -
         s * (s + 1.0) * (s + 2.0) * std::pow(y, -s - 3.0) / 720.0;
  return sum;
}

} // namespace

double weyl_tail_sq(const HurstContext<>& ctx, double t, const Eigen::VectorXd& eigenvalues, Eigen::Index& start)
{
  start = 0;
  const Eigen::Index n = eigenvalues.size();
  const Eigen::Index j_lo = 10, j_hi = n / 16;
  if (j_hi < j_lo + 2)
    return 0.0;
  Eigen::VectorXd sorted = eigenvalues;
  std::sort(sorted.data(), sorted.data() + n, std::greater<>());
  const double pi = 3.141592653589793;
  const double c = std::pow(t, ctx.H) * ctx.weyl_constant();
  std::vector<double> shift;
  for (Eigen::Index j = j_lo; j <= j_hi; ++j) {
    const double lam = sorted(j - 1);
    if (!(lam > 0.0))
      return 0.0;
    shift.push_back(std::pow(lam / c, -1.0 / ctx.H) / pi - static_cast<double>(j));
  }
  std::nth_element(shift.begin(), shift.begin() + shift.size() / 2, shift.end());
  const double delta = shift[shift.size() / 2];
  start = j_hi;
  return c * c * std::pow(pi, -2.0 * ctx.H) * hurwitz_zeta(2.0 * ctx.H, static_cast<double>(j_hi) + 1.0 + delta);
}

void extrapolate_tail(const HurstContext<>& ctx, double t, const Eigen::VectorXd& all_values, Spectrum& spectrum)
{
  Eigen::Index start = 0;
  const double tail = weyl_tail_sq(ctx, t, all_values, start);
  if (start == 0)
    return;
  Eigen::VectorXd sorted = all_values;
  std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<>());
  spectrum.tail_start = start;
  spectrum.tail_sq = tail;
  spectrum.head_sq = sorted.head(start).squaredNorm();
}

Spectrum series_coefficients(const SecondChaosMatrix& M, const RetentionPolicy& policy)
{
  if (M.M.rows() == 0)
    return make_spectrum(Eigen::VectorXd(), Eigen::MatrixXd(), Spectrum::Order::magnitude, policy);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.M);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("series_coefficients: eigensolver did not converge");
  return make_spectrum(es.eigenvalues(), es.eigenvectors(), Spectrum::Order::magnitude, policy);
}

Eigen::MatrixXd riesz_gram(const HurstContext<>& ctx, const Eigen::VectorXd& edges)
{
  using ld = long double;
  const Eigen::Index n = edges.size() - 1;
  if (n < 1)
    throw std::invalid_argument("riesz_gram: need at least one cell");
  const ld H = ctx.H;
  const ld norm = 1.0L / (H * (H + 1.0L));
  auto Phi = [&](ld z) { return std::pow(std::fabs(z), H + 1.0L) * norm; };
  auto block = [&](ld x0, ld x1, ld y0, ld y1) {
    return Phi(x1 - y0) - Phi(x1 - y1) - Phi(x0 - y0) + Phi(x0 - y1);
  };

  Eigen::MatrixXd S(n, n);
  const double h0 = edges(1) - edges(0);
  bool uniform = true;
  for (Eigen::Index i = 0; i < n && uniform; ++i)
    uniform = std::abs((edges(i + 1) - edges(i)) - h0) <= 1e-12 * h0;
  if (uniform) {
    const ld h = h0;
    Eigen::VectorXd col(n);
    for (Eigen::Index k = 0; k < n; ++k)
      col(k) = static_cast<double>(ctx.betaH * block(k * h + h, k * h + 2 * h, h, 2 * h));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        S(i, j) = col(std::abs(i - j));
    return S;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      S(i, j) = static_cast<double>(ctx.betaH * block(edges(i), edges(i + 1), edges(j), edges(j + 1)));
      S(j, i) = S(i, j);
    }
  return S;
}

Spectrum rosenblatt_level_spectrum(const HurstContext<>& ctx, double t, int cells, const RetentionPolicy& policy)
{
  if (!(t > 0.0) || cells < 1)
    throw std::invalid_argument("rosenblatt_level_spectrum: need t > 0 and cells >= 1");
  const Eigen::VectorXd edges = Eigen::VectorXd::LinSpaced(cells + 1, 0.0, t);
  const double h = t / cells;
  const Eigen::MatrixXd S = riesz_gram(ctx, edges) / h;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("rosenblatt_level_spectrum: eigensolver did not converge");
  const Eigen::VectorXd values = ctx.dH * es.eigenvalues().cwiseMax(0.0);
  Spectrum s = make_spectrum(values, Eigen::MatrixXd(), Spectrum::Order::magnitude, policy);
  extrapolate_tail(ctx, t, values, s);
  return s;
}

} // namespace rosenblatt
