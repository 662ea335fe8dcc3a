#include "rosenblatt/density.hpp"

#include "rosenblatt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace rosenblatt {

namespace {

double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
  double s = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i)
    s += 0.5 * (x(i) - x(i - 1)) * (y(i) + y(i - 1));
  return s;
}

} // namespace

double integrate_curve(const DensityCurve& c)
{
  return trapezoid(c.x, c.values);
}

double curve_moment(const DensityCurve& c, int k)
{
  return trapezoid(c.x, (c.x.array().pow(k) * c.values.array()).matrix());
}

std::complex<double> log_characteristic(const Eigen::VectorXd& lambda, double theta)
{
  // Re(1 - 2 i theta lambda) = 1, so the principal logarithm never meets its
  // cut and the summed half-logs are the continuous branch.
  std::complex<double> acc = 0.0;
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    const double b = 2.0 * theta * lambda(j);
    acc += std::complex<double>(-0.25 * std::log1p(b * b), 0.5 * std::atan(b) - theta * lambda(j));
  }
  return acc;
}

DensityCurve cf_inversion(const Spectrum& spectrum, int n, const Eigen::VectorXd& x, const CfOptions& opt)
{
  if (n < 0)
    throw std::invalid_argument("cf_inversion: derivative order must be nonnegative");
  std::vector<double> mag;
  for (Eigen::Index j = 0; j < spectrum.size(); ++j)
    if (spectrum.eigenvalues(j) != 0.0)
      mag.push_back(std::abs(spectrum.eigenvalues(j)));
  const auto J = static_cast<int>(mag.size());
  if (J <= 2 * (n + 1))
    throw std::invalid_argument("cf_inversion: derivative order " + std::to_string(n) + " needs J > 2(n+1) = " +
                                std::to_string(2 * (n + 1)) + " nonzero modes, got " + std::to_string(J));
  std::sort(mag.begin(), mag.end(), std::greater<>());
  const double sigma = std::sqrt(2.0 * spectrum.eigenvalues.squaredNorm());
  const double tol = opt.tail_tolerance;
  const double pi = std::numbers::pi;

  // |phi(theta)| <= prod_{k<=K} (2 a_k theta)^{-1/2}, so the dropped tail of
  // theta^n |phi| / pi beyond Theta is at most C_K Theta^{-e} / (pi e), e = K/2 - n - 1.
  double log_theta = std::numeric_limits<double>::infinity();
  double log_c = 0.0;
  for (int K = 1; K <= J; ++K) {
    log_c -= 0.5 * std::log(2.0 * mag[K - 1]);
    const double e = 0.5 * K - n - 1.0;
    if (e <= 0.0)
      continue;
    const double lt = (log_c - std::log(e) - std::log(pi) - std::log(tol) + (n + 1) * std::log(sigma)) / e;
    log_theta = std::min(log_theta, lt);
  }
  const double theta_max = std::exp(log_theta);

  // Trapezoid aliasing repeats the density with period 2 pi / dtheta; make the
  // period cover the probes plus a tail extent where the density is below tol.
  const double reach = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
  const double extent = 2.0 * mag.front() * (-std::log(tol)) + 10.0 * sigma;
  const double period = 2.0 * (reach + extent);
  // Node count from the scale-free ratio so that scaled spectra give the same grid.
  const double ratio = theta_max * period / (2.0 * pi);
  const auto nodes = static_cast<Eigen::Index>(std::ceil(ratio * (1.0 - 1e-12)));
  if (nodes > opt.max_nodes)
    throw std::runtime_error("cf_inversion: " + std::to_string(nodes) + " theta nodes exceed the limit");
  const double dtheta = theta_max / static_cast<double>(nodes);

  std::vector<std::complex<double>> g(static_cast<std::size_t>(nodes) + 1), gm(g.size());
  const Eigen::VectorXd& lam = spectrum.eigenvalues;
  for (Eigen::Index k = 0; k <= nodes; ++k) {
    const double th = k * dtheta;
    g[k] = std::pow(std::complex<double>(0.0, -th), n) * std::exp(log_characteristic(lam, th));
    gm[k] = std::pow(std::complex<double>(0.0, th), n) * std::exp(log_characteristic(lam, -th));
  }

  DensityCurve c;
  c.x = x;
  c.values.resize(x.size());
  c.derivative_order = n;
  c.method = DensityMethod::cf_inversion;
  c.lambda_coverage = spectrum.coverage;
  c.theta_max = theta_max;
  c.theta_step = dtheta;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    // theta and -theta are evaluated independently, so the imaginary part is a real check.
    std::complex<double> s = n == 0 ? g[0] : std::complex<double>(0.0);
    for (Eigen::Index k = 1; k <= nodes; ++k) {
      const double arg = k * dtheta * x(i);
      s += g[k] * std::polar(1.0, -arg) + gm[k] * std::polar(1.0, arg);
    }
    s *= dtheta / (2.0 * pi);
    c.values(i) = s.real();
    c.imaginary_residue = std::max(c.imaginary_residue, std::abs(s.imag()));
  }
  return c;
}

double silverman_bandwidth(const Eigen::VectorXd& samples)
{
  const double sd = std::sqrt(variance(samples));
  const double iqr = quantile(samples, 0.75) - quantile(samples, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

DensityCurve kde(const Eigen::VectorXd& samples, const Eigen::VectorXd& x, double bandwidth)
{
  if (samples.size() < 1000)
    throw std::invalid_argument("kde: need at least 1000 samples");
  if (!(variance(samples) > 0.0))
    throw std::invalid_argument("kde: samples have zero variance");
  const double h = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(samples);
  std::vector<double> s(samples.data(), samples.data() + samples.size());
  std::sort(s.begin(), s.end());
  const double norm = 1.0 / (static_cast<double>(s.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  DensityCurve c;
  c.x = x;
  c.values.resize(x.size());
  c.method = DensityMethod::kde;
  c.bandwidth = h;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    // beyond 9 bandwidths the kernel is below 3e-18 of its peak
    auto lo = std::lower_bound(s.begin(), s.end(), x(i) - 9.0 * h);
    auto hi = std::upper_bound(lo, s.end(), x(i) + 9.0 * h);
    double acc = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const double u = (x(i) - *it) / h;
      acc += std::exp(-0.5 * u * u);
    }
    c.values(i) = acc * norm;
  }
  return c;
}

TailFitReport fit_log_survival(const Eigen::VectorXd& thresholds, const Eigen::VectorXd& survival, double sigma)
{
  if (thresholds.size() < 3 || thresholds.size() != survival.size())
    throw std::invalid_argument("tail fit: need at least three thresholds with survival values");
  if ((thresholds.array() < 2.0).any())
    throw std::invalid_argument("tail fit: thresholds must be >= 2");
  if (!(survival.array() > 0.0).all())
    throw std::invalid_argument("tail fit: survival must be positive");
  TailFitReport r;
  r.sigma = sigma;
  r.thresholds = thresholds;
  r.log_survival = survival.array().log();
  const auto f = linear_fit(thresholds, r.log_survival);
  r.fitted_c = -f.slope;
  r.intercept = f.intercept;
  r.r_squared = f.r_squared;

  Eigen::MatrixXd V(thresholds.size(), 3);
  V.col(0).setOnes();
  V.col(1) = thresholds;
  V.col(2) = thresholds.array().square();
  const Eigen::Vector3d b = V.colPivHouseholderQr().solve(r.log_survival);
  r.curvature = b(2);
  const double ss_lin = (r.log_survival.array() - f.intercept - f.slope * thresholds.array()).square().sum();
  const double ss_quad = (r.log_survival - V * b).squaredNorm();
  // concave log survival that a quadratic explains much better than a line
  r.superlinear = r.curvature < 0.0 && ss_quad < 0.5 * ss_lin;
  return r;
}

TailFitReport tail_fit(const Eigen::VectorXd& samples, double sigma, const Eigen::VectorXd& thresholds)
{
  if (!(sigma > 0.0))
    throw std::invalid_argument("tail_fit: sigma must be positive");
  const Eigen::Index n = samples.size();
  std::vector<double> a(n);
  for (Eigen::Index i = 0; i < n; ++i)
    a[i] = std::abs(samples(i)) / sigma;
  std::sort(a.begin(), a.end());
  Eigen::VectorXd surv(thresholds.size());
  for (Eigen::Index k = 0; k < thresholds.size(); ++k) {
    const auto count = static_cast<double>(a.end() - std::lower_bound(a.begin(), a.end(), thresholds(k)));
    if (count < 10.0) {
      const double usable = n >= 10 ? a[n - 10] : 0.0;
      throw TailFitError("tail_fit: fewer than 10 exceedances at t = " + std::to_string(thresholds(k)) +
                             "; usable t_max is " + std::to_string(usable),
                         usable);
    }
    surv(k) = count / static_cast<double>(n);
  }
  return fit_log_survival(thresholds, surv, sigma);
}

Spectrum scale_spectrum(const Spectrum& s, double factor)
{
  Spectrum out = s;
  out.eigenvalues *= factor;
  out.total_sq *= factor * factor;
  out.total_sum *= factor;
  out.head_sq *= factor * factor;
  out.tail_sq *= factor * factor;
  return out;
}

BoundFitReport derivative_bound_check(const HurstContext<>& ctx,
                               const Spectrum& unit_spectrum,
                               int n,
                               const std::vector<double>& t_values,
                               double z_hi,
                               int probes,
                               double rate_margin,
                               const CfOptions& opt)
{
  if (!(z_hi > 2.0) || probes < 8)
    throw std::invalid_argument("derivative_bound_check: need z_hi > 2 and at least 8 probes");
  BoundFitReport r;
  r.n = n;
  r.z_hi = z_hi;
  r.z_mid = 0.5 * (r.z_lo + z_hi);
  r.rate_margin = rate_margin;
  r.t_values = t_values;

  const Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(probes, r.z_lo, z_hi);
  const DensityCurve p1 = cf_inversion(unit_spectrum, n, z, opt);
  for (double t : t_values) {
    const double s = std::pow(t, ctx.H);
    const DensityCurve pt = cf_inversion(scale_spectrum(unit_spectrum, s), n, (s * z).eval(), opt);
    const double err = (std::pow(t, ctx.H * (1 + n)) * pt.values - p1.values).cwiseAbs().maxCoeff();
    r.scaling_error = std::max(r.scaling_error, err);
  }

  const double sigma = std::sqrt(2.0 * unit_spectrum.eigenvalues.squaredNorm());
  const double floor = 1e3 * opt.tail_tolerance * std::pow(sigma, -(n + 1));
  std::vector<double> zf, yf;
  for (Eigen::Index i = 0; i < probes; ++i)
    if (z(i) <= r.z_mid) {
      zf.push_back(z(i));
      yf.push_back(std::log(std::max(std::abs(p1.values(i)), std::numeric_limits<double>::min())));
    }
  const auto fit = linear_fit(Eigen::Map<Eigen::VectorXd>(zf.data(), zf.size()),
                              Eigen::Map<Eigen::VectorXd>(yf.data(), yf.size()));
  r.fitted_c = -fit.slope * rate_margin;
  if (!(r.fitted_c > 0.0)) {
    r.fitted_C = 0.0;
    r.max_violation = std::numeric_limits<double>::infinity();
    return r;
  }
  double logC = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < zf.size(); ++i)
    logC = std::max(logC, yf[i] + r.fitted_c * zf[i]);
  r.fitted_C = std::exp(logC);
  r.max_violation = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < probes; ++i) {
    if (z(i) <= r.z_mid)
      continue;
    const double a = std::abs(p1.values(i));
    if (a > 0.0 && a < floor)
      throw std::runtime_error("derivative_bound_check: |p^(" + std::to_string(n) + ")| at z = " + std::to_string(z(i)) +
                               " is below the cf accuracy floor");
    r.max_violation = std::max(r.max_violation, std::log(std::max(a, std::numeric_limits<double>::min())) -
                                                    (logC - r.fitted_c * z(i)));
  }
  return r;
}

} // namespace rosenblatt
