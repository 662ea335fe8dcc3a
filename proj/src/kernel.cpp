#include "rosenblatt/kernel.hpp"
#include "rosenblatt/special.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace rosenblatt {

TimePartition::TimePartition(std::vector<double> positive_times)
{
  if (positive_times.empty())
    throw std::invalid_argument("TimePartition: need at least one positive time");
  times_.reserve(positive_times.size() + 1);
  for (double t : positive_times) {
    if (!std::isfinite(t) || !(t > times_.back()))
      throw std::invalid_argument("TimePartition: times must be finite and strictly increasing from 0");
    times_.push_back(t);
  }
}

TimePartition TimePartition::scaled(double a) const
{
  if (!(a > 0.0))
    throw std::invalid_argument("TimePartition::scaled: scale must be positive");
  std::vector<double> t = positive_times();
  for (double& x : t)
    x *= a;
  return TimePartition(std::move(t));
}

KernelEval kernel_value(const HurstContext<>& ctx, double t, double y1, double y2)
{
  if (!(t > 0.0))
    throw std::invalid_argument("kernel_value: t must be positive");
  KernelEval r{t, y1, y2, 0.0, false};
  const double m = std::max(y1, y2), mp = std::min(y1, y2);
  if (m >= t)
    return r;
  if (y1 == y2 && m >= 0.0) {
    r.value = std::numeric_limits<double>::infinity();
    r.infinite = true;
    return r;
  }
  const double a = ctx.a();
  const Singularity sing[2] = {{m, a - 1.0}, {mp, a - 1.0}};
  auto f = [&](double base, double off) {
    return std::pow((base - y1) + off, a - 1.0) * std::pow((base - y2) + off, a - 1.0);
  };
  r.value = ctx.dH * integrate_singular(f, std::max(0.0, m), t, sing);
  return r;
}

double cell_averaged_kernel(const HurstContext<>& ctx, double t, Interval c1, Interval c2)
{
  if (!(c1.hi > c1.lo) || !(c2.hi > c2.lo) || !std::isfinite(c1.lo) || !std::isfinite(c2.lo))
    throw std::invalid_argument("cell_averaged_kernel: cells must be finite nondegenerate intervals");
  if (!(t > 0.0))
    throw std::invalid_argument("cell_averaged_kernel: t must be positive");
  const double a = ctx.a();
  const Singularity sing[4] = {{c1.lo, a}, {c1.hi, a}, {c2.lo, a}, {c2.hi, a}};
  auto f = [&](double base, double off) {
    const double f1 = cell_primitive(a, (base - c1.lo) + off, (base - c1.hi) + off);
    const double f2 = cell_primitive(a, (base - c2.lo) + off, (base - c2.hi) + off);
    return f1 * f2;
  };
  const double lo = std::max(0.0, std::max(c1.lo, c2.lo));
  if (lo >= t)
    return 0.0;
  return ctx.dH * integrate_singular(f, lo, t, sing) / (c1.length() * c2.length());
}

namespace {

// h_s(v) = int_{max(s,0)}^1 (u - s)^{a-1} |u - v|^{H-1} du, with dvs = v - s
// and omv = 1 - v passed exactly.
double inner_profile(double a, double H, double s, double v, double dvs, double omv)
{
  const double q = 1.0 - a - H;
  if (dvs > 0.0) {
    double left;
    if (s >= 0.0)
      left = beta_function(a, H);
    else
      left = incomplete_beta_integral(H, a, v / dvs, -s / dvs);
    const double right = incomplete_beta_integral(H, q, std::max(0.0, omv / (1.0 - s)), dvs / (1.0 - s));
    return std::pow(dvs, a + H - 1.0) * (left + right);
  }
  return std::pow(-dvs, a + H - 1.0) * incomplete_beta_integral(a, q, (1.0 - s) / omv, -dvs / omv);
}

double gram_kernel_unit(const HurstContext<>& ctx, double s, double t)
{
  const double a = ctx.a(), H = ctx.H;
  const double lo = std::max(t, 0.0);
  const Singularity sing[3] = {{t, a - 1.0}, {s, a + H - 1.0}, {1.0, H}};
  auto f = [&](double base, double off) {
    const double dvt = (base - t) + off;
    const double dvs = (base - s) + off;
    const double omv = (1.0 - base) - off;
    const double v = base + off;
    return std::pow(dvt, a - 1.0) * inner_profile(a, H, s, v, dvs, omv);
  };
  GradedRuleOptions opt;
  opt.points = 12;
  return ctx.dH * ctx.dH * ctx.betaH * integrate_singular(f, lo, 1.0, sing, opt);
}

} // namespace

double gram_kernel(const HurstContext<>& ctx, double s, double t, double horizon)
{
  if (!(horizon > 0.0))
    throw std::invalid_argument("gram_kernel: horizon must be positive");
  if (s >= horizon || t >= horizon)
    return 0.0;
  const double scale = std::pow(horizon, 2.0 * ctx.H - 1.0);
  return scale * gram_kernel_unit(ctx, s / horizon, t / horizon);
}

double derivative_covariance(const HurstContext<>& ctx, double s, double t)
{
  if (!(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("derivative_covariance: s and t must lie in [0, 1]");
  return gram_kernel(ctx, s, t, 1.0);
}

double beta_reduction(const HurstContext<>& ctx, double u, double v)
{
  return ctx.betaH * std::pow(std::abs(u - v), ctx.H - 1.0);
}

double line_tail_mass_bound(const HurstContext<>& ctx, double t, double a)
{
  if (!(a < 0.0))
    return std::numeric_limits<double>::infinity();
  const double H = ctx.H;
  const double box = 2.0 * std::pow(t, H + 1.0) / (H * (H + 1.0)); // int int_[0,t]^2 |u-v|^{H-1}
  const double strip = ctx.dH * ctx.dH * ctx.betaH * box * std::pow(-a, H - 1.0) / (1.0 - H);
  return 2.0 * strip;
}

} // namespace rosenblatt
