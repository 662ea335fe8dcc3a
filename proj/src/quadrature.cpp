#include "rosenblatt/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rosenblatt {

Rule<double> gauss_laguerre(int q, double alpha)
{
  if (q < 1 || !(alpha > -1.0))
    throw std::invalid_argument("gauss_laguerre: need q >= 1 and alpha > -1");
  // Golub-Welsch on the Jacobi matrix of the generalized Laguerre weight.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q, q);
  for (int k = 0; k < q; ++k) {
    J(k, k) = 2.0 * k + alpha + 1.0;
    if (k + 1 < q) {
      const double b = std::sqrt((k + 1.0) * (k + 1.0 + alpha));
      J(k, k + 1) = b;
      J(k + 1, k) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gauss_laguerre: eigensolver failed");
  const double mu0 = std::tgamma(alpha + 1.0);
  Rule<double> rule;
  rule.nodes = es.eigenvalues();
  rule.weights = mu0 * es.eigenvectors().row(0).transpose().array().square();
  return rule;
}

namespace {

double graded_position(double u, double exponent, Grading::Side side)
{
  switch (side) {
    case Grading::Side::left:
      return std::pow(u, exponent);
    case Grading::Side::right:
      return 1.0 - std::pow(1.0 - u, exponent);
    case Grading::Side::both:
      return u < 0.5 ? 0.5 * std::pow(2.0 * u, exponent)
                     : 1.0 - 0.5 * std::pow(2.0 * (1.0 - u), exponent);
    case Grading::Side::none:
    default:
      return u;
  }
}

} // namespace

QuadratureGrid build_grid(Interval domain, int n, const Grading& grading)
{
  if (!(domain.hi > domain.lo) || !std::isfinite(domain.lo) || !std::isfinite(domain.hi))
    throw std::invalid_argument("build_grid: degenerate domain");
  if (n < 2)
    throw std::invalid_argument("build_grid: need at least 2 nodes");
  const int q = grading.points_per_panel;
  if (q < 1 || n % q != 0)
    throw std::invalid_argument("build_grid: node count must be a multiple of points_per_panel");
  if (!(grading.exponent >= 1.0))
    throw std::invalid_argument("build_grid: grading exponent must be >= 1");

  std::vector<double> cuts{domain.lo};
  for (double b : grading.breakpoints)
    if (b > domain.lo && b < domain.hi)
      cuts.push_back(b);
  cuts.push_back(domain.hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const int segments = static_cast<int>(cuts.size()) - 1;
  const int panels = n / q;
  if (panels < segments)
    throw std::invalid_argument("build_grid: fewer panels than breakpoint segments");

  // Largest-remainder allocation of panels to segments, at least one each.
  std::vector<int> count(segments, 1);
  std::vector<double> share(segments);
  int left = panels - segments;
  for (int s = 0; s < segments; ++s) {
    share[s] = (cuts[s + 1] - cuts[s]) / domain.length() * left;
    count[s] += static_cast<int>(std::floor(share[s]));
  }
  int assigned = std::accumulate(count.begin(), count.end(), 0);
  std::vector<int> order(segments);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return share[a] - std::floor(share[a]) > share[b] - std::floor(share[b]);
  });
  for (int k = 0; assigned < panels; ++k, ++assigned)
    ++count[order[k % segments]];

  QuadratureGrid grid;
  grid.domain = domain;
  grid.points_per_panel = q;
  grid.edges.resize(panels + 1);
  Eigen::Index e = 0;
  for (int s = 0; s < segments; ++s) {
    for (int k = 0; k < count[s]; ++k) {
      const double u = static_cast<double>(k) / count[s];
      grid.edges(e++) = cuts[s] + (cuts[s + 1] - cuts[s]) * graded_position(u, grading.exponent, grading.side);
    }
  }
  grid.edges(e) = domain.hi;

  const auto gl = gauss_legendre<double>(q);
  grid.nodes.resize(n);
  grid.weights.resize(n);
  for (Eigen::Index p = 0; p < panels; ++p) {
    const double a = grid.edges(p), h = grid.edges(p + 1) - a;
    for (int i = 0; i < q; ++i) {
      grid.nodes(p * q + i) = a + h * gl.nodes(i);
      grid.weights(p * q + i) = h * gl.weights(i);
    }
  }
  return grid;
}

namespace {

void append_half(std::vector<GradedNode>& out,
                 const Rule<double>& gl,
                 double base,
                 double length,
                 EndBehaviour end,
                 const GradedRuleOptions& opt)
{
  const double L = std::abs(length);
  const double sign = length < 0 ? -1.0 : 1.0;
  if (L == 0.0)
    return;
  const double alpha = end.exponent;
  if (!(alpha > -1.0))
    throw std::domain_error("graded_rule: non-integrable end singularity");
  double p = 1.0;
  int levels = 0;
  if (alpha != 0.0) {
    // x - base = L w^p with p (alpha + 1) an integer removes the leading term
    const double k = std::max(1.0, std::ceil(alpha + 1.0 - 1e-12));
    p = k / (alpha + 1.0);
    levels = opt.extra_levels;
  }
  if (end.near < L) {
    const double w_near = std::pow(end.near / L, 1.0 / p);
    const int need = static_cast<int>(std::ceil(std::log(w_near) / std::log(opt.ratio))) + 1;
    levels = std::max(levels, need);
  }
  levels = std::min(levels, opt.max_levels);

  std::vector<double> cuts;
  cuts.reserve(levels + 2);
  cuts.push_back(0.0);
  for (int k = levels; k >= 1; --k)
    cuts.push_back(std::pow(opt.ratio, k));
  cuts.push_back(1.0);

  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double w0 = cuts[c], dw = cuts[c + 1] - cuts[c];
    for (Eigen::Index i = 0; i < gl.nodes.size(); ++i) {
      const double w = w0 + dw * gl.nodes(i);
      const double wp = std::pow(w, p);
      const double jac = p == 1.0 ? 1.0 : p * wp / w;
      out.push_back({base, sign * L * wp, dw * gl.weights(i) * L * jac});
    }
  }
}

} // namespace

std::vector<GradedNode> graded_rule(double lo,
                                    double hi,
                                    EndBehaviour left,
                                    EndBehaviour right,
                                    const GradedRuleOptions& opt)
{
  std::vector<GradedNode> out;
  if (!(hi > lo))
    return out;
  const auto gl = gauss_legendre<double>(opt.points);
  const double half = 0.5 * (hi - lo);
  append_half(out, gl, lo, half, left, opt);
  append_half(out, gl, hi, -half, right, opt);
  return out;
}

std::vector<GradedNode> singular_rule(double lo,
                                      double hi,
                                      std::span<const Singularity> singularities,
                                      const GradedRuleOptions& opt)
{
  std::vector<GradedNode> out;
  if (!(hi > lo))
    return out;
  std::vector<double> cuts{lo, hi};
  for (const auto& s : singularities)
    if (s.at > lo && s.at < hi)
      cuts.push_back(s.at);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const auto gl = gauss_legendre<double>(opt.points);
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double l = cuts[c], r = cuts[c + 1];
    EndBehaviour left, right;
    for (const auto& s : singularities) {
      if (s.at == l)
        left.exponent += s.exponent;
      else if (s.at < l)
        left.near = std::min(left.near, l - s.at);
      if (s.at == r)
        right.exponent += s.exponent;
      else if (s.at > r)
        right.near = std::min(right.near, s.at - r);
    }
    const double half = 0.5 * (r - l);
    append_half(out, gl, l, half, left, opt);
    append_half(out, gl, r, -half, right, opt);
  }
  return out;
}

} // namespace rosenblatt
