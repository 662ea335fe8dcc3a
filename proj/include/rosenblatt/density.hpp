#pragma once

#include "rosenblatt/spectral.hpp"

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace rosenblatt {

enum class DensityMethod
{
  cf_inversion,
  kde
};

struct DensityCurve
{
  Eigen::VectorXd x;
  Eigen::VectorXd values;
  int derivative_order = 0;
  DensityMethod method = DensityMethod::cf_inversion;
  double lambda_coverage = 1.0; // cf only
  double imaginary_residue = 0.0;
  double theta_max = 0.0;
  double theta_step = 0.0;
  double bandwidth = 0.0; // kde only
};

//! Trapezoid integral of values over x.
double integrate_curve(const DensityCurve& c);
//! Trapezoid integral of x^k values.
double curve_moment(const DensityCurve& c, int k);

struct CfOptions
{
  double tail_tolerance = 1e-10; // bound on the dropped theta tail, relative to the scale sigma^{-(n+1)}
  Eigen::Index max_nodes = Eigen::Index(1) << 22;
};

//! log phi(theta) = sum_j [-1/2 log(1 - 2 i theta lambda_j) - i theta lambda_j].
std::complex<double> log_characteristic(const Eigen::VectorXd& lambda, double theta);

//! p^(n)(x) = (2 pi)^{-1} int (-i theta)^n e^{-i theta x} phi(theta) d theta for the series of `spectrum`.
//! Needs J > 2(n + 1) nonzero modes.
DensityCurve cf_inversion(const Spectrum& spectrum, int n, const Eigen::VectorXd& x, const CfOptions& opt = {});

//! Silverman's rule 0.9 min(sd, IQR / 1.34) n^{-1/5}.
double silverman_bandwidth(const Eigen::VectorXd& samples);

//! Gaussian-kernel estimate on x; bandwidth <= 0 selects Silverman. Needs >= 1000 samples.
DensityCurve kde(const Eigen::VectorXd& samples, const Eigen::VectorXd& x, double bandwidth = 0.0);

struct TailFitReport
{
  double sigma = 0.0;
  Eigen::VectorXd thresholds;
  Eigen::VectorXd log_survival;
  double fitted_c = 0.0; // log P(|X| / sigma >= t) ~ b - c t
  double intercept = 0.0;
  double r_squared = 0.0;
  double curvature = 0.0; // quadratic coefficient of log survival
  bool superlinear = false;
};

//! Thrown when the data do not reach the requested thresholds.
struct TailFitError : std::runtime_error
{
  TailFitError(const std::string& what, double usable) : std::runtime_error(what), usable_t_max(usable) {}
  double usable_t_max;
};

//! Least-squares fit of the empirical log survival of |X| / sigma.
TailFitReport tail_fit(const Eigen::VectorXd& samples, double sigma, const Eigen::VectorXd& thresholds);
//! Same fit on given survival probabilities.
TailFitReport fit_log_survival(const Eigen::VectorXd& thresholds, const Eigen::VectorXd& survival, double sigma);

struct BoundFitReport
{
  int n = 0;
  double z_lo = 2.0;
  double z_mid = 0.0;
  double z_hi = 0.0;
  double fitted_C = 0.0;
  double fitted_c = 0.0;
  double max_violation = 0.0; // max over the validation window of log|p^(n)| - log(C e^{-c z})
  double rate_margin = 1.0;   // fraction of the fitted rate used for validation
  std::vector<double> t_values;
  double scaling_error = 0.0; // max |t^{H(1+n)} p_t^(n)(t^H z) - p_1^(n)(z)|
};

//! Self-similarity check of the cf pipeline and exponential-bound fit for p_1^(n) on [2, z_hi].
BoundFitReport derivative_bound_check(const HurstContext<>& ctx,
                               const Spectrum& unit_spectrum,
                               int n,
                               const std::vector<double>& t_values,
                               double z_hi,
                               int probes = 121,
                               double rate_margin = 0.75,
                               const CfOptions& opt = {});

//! Spectrum of Z_t = t^H Z_1 from that of Z_1.
Spectrum scale_spectrum(const Spectrum& s, double factor);

} // namespace rosenblatt
