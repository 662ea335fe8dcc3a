#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rosenblatt {

namespace detail {

// sum_k c_k y^{e+k}/(e+k) with c_0 = 1, c_{k+1} = c_k (k + 1 - g)/(k + 1),
// i.e. the integral of y^{e-1}(1-y)^{g-1} expanded around y = 0 (up to the
// y^0 constant when e + k = 0, which contributes log y instead).
template <typename Scalar>
Scalar power_series_primitive(Scalar e, Scalar g, Scalar y)
{
  using std::abs;
  using std::log;
  using std::pow;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  Scalar c = 1;
  Scalar yk = pow(y, e);
  Scalar sum = 0;
  for (int k = 0; k < 4000; ++k) {
    const Scalar ek = e + k;
    Scalar term;
    if (abs(ek) < Scalar(1e-13))
      term = c * log(y);
    else
      term = c * yk / ek;
    sum += term;
    if (k > 2 && abs(term) <= eps * Scalar(0.25) * abs(sum))
      break;
    c *= (k + 1 - g) / Scalar(k + 1);
    if (c == 0)
      break;
    yk *= y;
  }
  return sum;
}

} // namespace detail

//! Integral of x^{p-1}(1-x)^{q-1} over [0, x] for p > 0, any real q, 0 <= x < 1.
//!
//! Unlike the regularized incomplete Beta this allows q <= 0, where the
//! integral diverges as x -> 1 but is finite for every x < 1.
//! The complement 1 - x is passed separately so that callers who know it
//! exactly keep full relative accuracy near x = 1.
template <typename Scalar>
Scalar incomplete_beta_integral(Scalar p, Scalar q, Scalar x, Scalar one_minus_x)
{
  if (!(p > 0))
    throw std::domain_error("incomplete_beta_integral: p must be positive");
  if (!(x >= 0 && one_minus_x >= 0) || (one_minus_x == 0 && !(q > 0)))
    throw std::domain_error("incomplete_beta_integral: x must lie in [0, 1)");
  if (x == 0)
    return 0;
  const Scalar half = Scalar(0.5);
  if (x <= half)
    return detail::power_series_primitive(p, q, x);
  // Reflect the piece above 1/2: y = 1 - x, integrand y^{q-1}(1-y)^{p-1}.
  const Scalar lower = detail::power_series_primitive(p, q, half);
  const Scalar upper = detail::power_series_primitive(q, p, half);
  if (one_minus_x == 0)
    return lower + upper;
  return lower + upper - detail::power_series_primitive(q, p, one_minus_x);
}

template <typename Scalar>
Scalar incomplete_beta_integral(Scalar p, Scalar q, Scalar x)
{
  return incomplete_beta_integral(p, q, x, Scalar(1) - x);
}

} // namespace rosenblatt
