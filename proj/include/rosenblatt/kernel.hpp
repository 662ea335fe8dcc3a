#pragma once

#include "rosenblatt/hurst.hpp"
#include "rosenblatt/quadrature.hpp"

#include <cmath>
#include <vector>

namespace rosenblatt {

//! 0 = t_0 < t_1 < ... < t_m.
class TimePartition
{
public:
  TimePartition() = default;
  //! Takes t_1..t_m; t_0 = 0 is prepended. Throws unless strictly increasing and positive.
  explicit TimePartition(std::vector<double> positive_times);

  int m() const { return static_cast<int>(times_.size()) - 1; }
  double time(int j) const { return times_.at(j); }
  double horizon() const { return times_.back(); }
  double spacing(int j) const { return times_.at(j) - times_.at(j - 1); }
  const std::vector<double>& times() const { return times_; }
  //! Times t_1..t_m, the form used in configuration files.
  std::vector<double> positive_times() const { return {times_.begin() + 1, times_.end()}; }
  TimePartition scaled(double a) const;

private:
  std::vector<double> times_{0.0};
};

struct KernelEval
{
  double t = 0.0;
  double y1 = 0.0;
  double y2 = 0.0;
  double value = 0.0;
  bool infinite = false;
};

//! L_t(y1, y2) = d(H) int_0^t (u - y1)_+^{a-1} (u - y2)_+^{a-1} du, a = H/2.
//!
//! The value is infinite exactly on the diagonal y1 = y2 in [0, t); for
//! y1 = y2 < 0 the integral is finite and returned.
KernelEval kernel_value(const HurstContext<>& ctx, double t, double y1, double y2);

//! Average of L_t over cell1 x cell2, computed from the exact y-integrals
//! F_c(u) = int_c (u - y)_+^{a-1} dy, so touching or coinciding cells are fine.
double cell_averaged_kernel(const HurstContext<>& ctx, double t, Interval cell1, Interval cell2);

//! F_c(u) = [(u - lo)_+^a - (u - hi)_+^a] / a.
inline double cell_primitive(double a, double du_lo, double du_hi)
{
  if (du_lo <= 0.0)
    return 0.0;
  if (du_hi <= 0.0)
    return std::pow(du_lo, a) / a;
  // difference of close powers without cancellation
  return std::pow(du_hi, a) * std::expm1(a * std::log1p((du_lo - du_hi) / du_hi)) / a;
}

template <typename Scalar>
Scalar process_covariance(const HurstContext<Scalar>& ctx, Scalar s, Scalar t)
{
  using std::abs;
  using std::pow;
  const Scalar h2 = 2 * ctx.H;
  return (pow(abs(t), h2) + pow(abs(s), h2) - pow(abs(t - s), h2)) / 2;
}

//! K_T(s, t) = <L_T(s, .), L_T(t, .)> for real s, t (0 once either is >= T).
//!
//! The inner u-integral is reduced to incomplete Beta integrals, the outer
//! v-integral is a graded Gauss rule resolving v = t, v = s and v = T.
double gram_kernel(const HurstContext<>& ctx, double s, double t, double horizon = 1.0);

//! K(s, t) = E[Y_s Y_t] for s, t in [0, 1], the covariance kernel of D Z_1 restricted to [0, 1].
double derivative_covariance(const HurstContext<>& ctx, double s, double t);

//! B(a, 1 - 2a) |u - v|^{2a-1}: the y-integral of (u-y)_+^{a-1}(v-y)_+^{a-1}.
double beta_reduction(const HurstContext<>& ctx, double u, double v);

//! Rigorous upper bound on the L^2 mass of L_t outside [a, inf)^2, a < 0.
double line_tail_mass_bound(const HurstContext<>& ctx, double t, double a);

} // namespace rosenblatt
