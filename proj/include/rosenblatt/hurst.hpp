#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace rosenblatt {

template <typename Scalar>
Scalar log_beta(Scalar x, Scalar y)
{
  using std::lgamma;
  return lgamma(x) + lgamma(y) - lgamma(x + y);
}

template <typename Scalar>
Scalar beta_function(Scalar x, Scalar y)
{
  using std::exp;
  return exp(log_beta(x, y));
}

//! Self-similarity index and the constants every kernel evaluation needs.
template <typename Scalar = double>
struct HurstContext
{
  Scalar H;
  Scalar dH;    // normalization d(H), makes E[Z_t^2] = |t|^{2H}
  Scalar betaH; // B(H/2, 1 - H)

  //! Exponent a = H/2 of the fractional factors (u - y)_+^{a-1}.
  Scalar a() const { return H / 2; }

  Scalar unit_variance_identity() const
  {
    return 2 * dH * dH * betaH * betaH / (H * (2 * H - 1));
  }

  //! Leading constant c in the eigenvalue asymptotics lambda_j ~ c t^H (pi j)^{-H}.
  Scalar weyl_constant() const
  {
    using std::cos;
    using std::tgamma;
    const Scalar pi = Scalar(3.141592653589793238462643383279502884L);
    return dH * betaH * 2 * tgamma(H) * cos(pi * H / 2);
  }
};

template <typename Scalar = double>
HurstContext<Scalar> normalization_constant(Scalar H)
{
  using std::sqrt;
  if (!(H > Scalar(0.5) && H < Scalar(1)))
    throw std::domain_error("Hurst index must lie in (1/2, 1), got " +
                            std::to_string(static_cast<double>(H)));
  HurstContext<Scalar> ctx;
  ctx.H = H;
  ctx.betaH = beta_function(H / 2, 1 - H);
  ctx.dH = sqrt(H * (2 * H - 1) / 2) / ctx.betaH;
  return ctx;
}

} // namespace rosenblatt
