#include "rosenblatt/stats.hpp"

#include "rosenblatt/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace rosenblatt {

double mean(const Eigen::VectorXd& x)
{
  if (x.size() == 0)
    throw std::invalid_argument("mean: empty sample");
  return x.mean();
}

double variance(const Eigen::VectorXd& x)
{
  if (x.size() < 2)
    throw std::invalid_argument("variance: need at least two samples");
  return (x.array() - x.mean()).square().sum() / static_cast<double>(x.size() - 1);
}

double standard_error(const Eigen::VectorXd& x)
{
  return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

Estimate covariance_estimate(const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("covariance_estimate: need two samples of equal length >= 2");
  const double n = static_cast<double>(x.size());
  const Eigen::VectorXd prod = (x.array() - x.mean()) * (y.array() - y.mean());
  Estimate e;
  e.value = prod.sum() / (n - 1.0);
  e.se = std::sqrt(variance(prod) / n);
  return e;
}

Estimate variance_estimate(const Eigen::VectorXd& x)
{
  return covariance_estimate(x, x);
}

double sorted_quantile(const std::vector<double>& s, double q)
{
  if (s.empty())
    throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("quantile: q must lie in [0, 1]");
  const double h = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double quantile(const Eigen::VectorXd& x, double q)
{
  std::vector<double> s(x.data(), x.data() + x.size());
  std::sort(s.begin(), s.end());
  return sorted_quantile(s, q);
}

double kolmogorov_survival(double lambda)
{
  if (lambda < 0.2)
    return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17)
      break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
  if (a.size() == 0 || b.size() == 0)
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> x(a.data(), a.data() + a.size()), y(b.data(), b.data() + b.size());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v)
      ++i;
    while (j < y.size() && y[j] == v)
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  const double ne = std::sqrt(nx * ny / (nx + ny));
  return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

LinearFit linear_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit: need at least two points of equal length");
  const double mx = x.mean(), my = y.mean();
  const Eigen::ArrayXd dx = x.array() - mx, dy = y.array() - my;
  const double sxx = dx.square().sum();
  if (!(sxx > 0.0))
    throw std::invalid_argument("linear_fit: abscissae are all equal");
  LinearFit f;
  f.slope = (dx * dy).sum() / sxx;
  f.intercept = my - f.slope * mx;
  const double syy = dy.square().sum();
  const double ss_res = (dy - f.slope * dx).square().sum();
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

double bootstrap_mean_half_width(const Eigen::VectorXd& x, int resamples, std::uint64_t seed, double level)
{
  if (x.size() == 0 || resamples < 2)
    throw std::invalid_argument("bootstrap: need data and at least two resamples");
  std::mt19937_64 engine(derive_seed(seed, 0xb007));
  std::uniform_int_distribution<Eigen::Index> pick(0, x.size() - 1);
  std::vector<double> means(resamples);
  for (int r = 0; r < resamples; ++r) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      s += x(pick(engine));
    means[r] = s / static_cast<double>(x.size());
  }
  std::sort(means.begin(), means.end());
  const double alpha = 0.5 * (1.0 - level);
  return 0.5 * (sorted_quantile(means, 1.0 - alpha) - sorted_quantile(means, alpha));
}

} // namespace rosenblatt
