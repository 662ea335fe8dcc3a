#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace rosenblatt {

double mean(const Eigen::VectorXd& x);
//! Unbiased sample variance.
double variance(const Eigen::VectorXd& x);
double standard_error(const Eigen::VectorXd& x);

struct Estimate
{
  double value = 0.0;
  double se = 0.0;
};

//! Sample covariance of (x, y) and its standard error (SE of the mean of centered products).
Estimate covariance_estimate(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
//! Sample variance and its standard error.
Estimate variance_estimate(const Eigen::VectorXd& x);

//! Linear-interpolated quantile (type 7) of unsorted data.
double quantile(const Eigen::VectorXd& x, double q);
//! Same on already sorted data.
double sorted_quantile(const std::vector<double>& sorted, double q);

struct KsResult
{
  double statistic = 0.0;
  double p_value = 1.0;
};

//! Two-sample Kolmogorov-Smirnov test, asymptotic p-value with Stephens' small-sample correction.
KsResult ks_two_sample(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
//! Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

struct LinearFit
{
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit linear_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

//! Percentile bootstrap CI half-width for the mean of x.
double bootstrap_mean_half_width(const Eigen::VectorXd& x, int resamples, std::uint64_t seed, double level = 0.95);

} // namespace rosenblatt
