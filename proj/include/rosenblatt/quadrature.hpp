#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace rosenblatt {

template <typename Scalar = double>
struct Rule
{
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
};

//! Gauss-Legendre rule with q points on [0, 1].
template <typename Scalar = double>
Rule<Scalar> gauss_legendre(int q)
{
  using std::abs;
  using std::cos;
  if (q < 1)
    throw std::invalid_argument("gauss_legendre: q must be positive");
  const Scalar pi = Scalar(3.141592653589793238462643383279502884L);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  Rule<Scalar> rule;
  rule.nodes.resize(q);
  rule.weights.resize(q);
  for (int i = 0; i < (q + 1) / 2; ++i) {
    Scalar x = cos(pi * (i + Scalar(0.75)) / (q + Scalar(0.5)));
    Scalar dp = 1;
    for (int it = 0; it < 100; ++it) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= q; ++k) {
        const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = q == 1 ? Scalar(1) : q * (x * p1 - p0) / (x * x - 1);
      const Scalar dx = p1 / dp;
      x -= dx;
      if (abs(dx) <= 4 * eps)
        break;
    }
    // recompute the derivative at the converged node
    {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= q; ++k) {
        const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = q == 1 ? Scalar(1) : q * (x * p1 - p0) / (x * x - 1);
    }
    const Scalar w = 1 / ((1 - x * x) * dp * dp);
    rule.nodes(i) = (1 - x) / 2;
    rule.nodes(q - 1 - i) = (1 + x) / 2;
    rule.weights(i) = w;
    rule.weights(q - 1 - i) = w;
  }
  return rule;
}

//! Generalized Gauss-Laguerre rule for the weight x^alpha e^{-x} on (0, inf).
Rule<double> gauss_laguerre(int q, double alpha);

struct Interval
{
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
};

//! Panel layout for build_grid.
struct Grading
{
  enum class Side
  {
    none,
    left,
    right,
    both
  };
  int points_per_panel = 1;      // 1 gives midpoint cells
  double exponent = 1.0;         // panel edges follow s^exponent toward `side`
  Side side = Side::none;
  std::vector<double> breakpoints; // forced panel edges inside the domain
};

struct QuadratureGrid
{
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  Eigen::VectorXd edges; // panel (cell) boundaries, edges(0) = lo, edges(end) = hi
  Interval domain;
  double tail_mass_bound = 0.0;
  int points_per_panel = 1;

  Eigen::Index size() const { return nodes.size(); }
  Eigen::Index panels() const { return edges.size() - 1; }
};

QuadratureGrid build_grid(Interval domain, int n, const Grading& grading = {});

template <class F>
double integrate(const QuadratureGrid& grid, F&& f)
{
  double s = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    s += grid.weights(i) * f(grid.nodes(i));
  return s;
}

// ---------------------------------------------------------------------------
// Graded rules for integrands with known algebraic singularities.

//! Point where the integrand behaves like |x - at|^exponent.
struct Singularity
{
  double at;
  double exponent;
};

//! Quadrature node stored as base + offset so that the distance to the
//! panel end `base` is exact even when it is far below eps * |base|.
struct GradedNode
{
  double base;
  double offset;
  double weight;
  double x() const { return base + offset; }
};

struct GradedRuleOptions
{
  int points = 16;          // Gauss points per panel
  double ratio = 0.2;       // geometric panel ratio toward singular ends
  int extra_levels = 12;    // geometric levels added at every singular end
  int max_levels = 60;
};

//! Behaviour of the integrand at one end of an interval.
struct EndBehaviour
{
  double exponent = 0.0;                                     // at the end point
  double near = std::numeric_limits<double>::infinity();     // distance to the closest outside singularity
};

//! Nodes for one interval split at its midpoint, each half graded toward its end.
std::vector<GradedNode> graded_rule(double lo,
                                    double hi,
                                    EndBehaviour left,
                                    EndBehaviour right,
                                    const GradedRuleOptions& opt = {});

//! Nodes for [lo, hi] resolving the listed singularities (inside or near the interval).
std::vector<GradedNode> singular_rule(double lo,
                                      double hi,
                                      std::span<const Singularity> singularities,
                                      const GradedRuleOptions& opt = {});

//! Integrates f(base, offset) over [lo, hi]; the point is x = base + offset.
template <class F>
double integrate_singular(F&& f,
                          double lo,
                          double hi,
                          std::span<const Singularity> singularities,
                          const GradedRuleOptions& opt = {})
{
  const auto nodes = singular_rule(lo, hi, singularities, opt);
  double s = 0.0;
  for (const auto& nd : nodes)
    s += nd.weight * f(nd.base, nd.offset);
  return s;
}

} // namespace rosenblatt
