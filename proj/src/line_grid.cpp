#include "rosenblatt/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rosenblatt {

QuadratureGrid build_line_grid(const HurstContext<>& ctx, double t, double lower, int n_inner, int n_tail)
{
  if (!(t > 0.0) || !(lower < 0.0) || n_inner < 1 || n_tail < 1)
    throw std::invalid_argument("build_line_grid: need t > 0, lower < 0 and positive cell counts");
  const double h = t / n_inner;
  const double span = -lower;
  double r = 1.0;
  if (h * n_tail < span) {
    // widths h r^k, k = 0..n_tail-1, summing to |lower|
    auto total = [&](double x) { return h * (std::pow(x, n_tail) - 1.0) / (x - 1.0); };
    double lo = 1.0 + 1e-12, hi = 2.0;
    while (total(hi) < span)
      hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (total(mid) < span ? lo : hi) = mid;
    }
    r = 0.5 * (lo + hi);
  }

  QuadratureGrid grid;
  grid.domain = {lower, t};
  grid.points_per_panel = 1;
  const int n = n_inner + n_tail;
  grid.edges.resize(n + 1);
  double x = 0.0, w = r == 1.0 ? span / n_tail : h;
  grid.edges(n_tail) = 0.0;
  for (int k = 0; k < n_tail; ++k) {
    x -= w;
    grid.edges(n_tail - 1 - k) = x;
    w *= r;
  }
  grid.edges(0) = lower;
  for (int k = 1; k <= n_inner; ++k)
    grid.edges(n_tail + k) = k * h;
  grid.edges(n) = t;
  grid.nodes = 0.5 * (grid.edges.head(n) + grid.edges.tail(n));
  grid.weights = grid.edges.tail(n) - grid.edges.head(n);
  grid.tail_mass_bound = line_tail_mass_bound(ctx, t, lower);
  return grid;
}

SecondChaosMatrix line_chaos_matrix(const HurstContext<>& ctx, double t, const QuadratureGrid& grid, double tolerance)
{
  if (!(grid.domain.hi >= t))
    throw std::invalid_argument("line_chaos_matrix: grid must extend to t");
  const double a = ctx.a();
  const Eigen::Index n = grid.panels();

  std::vector<double> cuts{0.0};
  for (Eigen::Index i = 0; i <= n; ++i)
    if (grid.edges(i) > 0.0 && grid.edges(i) < t)
      cuts.push_back(grid.edges(i));
  cuts.push_back(t);

  GradedRuleOptions opt;
  opt.points = 10;
  opt.extra_levels = 4;
  std::vector<GradedNode> nodes;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const auto part = graded_rule(cuts[c], cuts[c + 1], EndBehaviour{a}, EndBehaviour{}, opt);
    nodes.insert(nodes.end(), part.begin(), part.end());
  }

  const Eigen::Index nu = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd E(nu, n);
  Eigen::VectorXd w(nu);
  for (Eigen::Index k = 0; k < nu; ++k) {
    const auto& nd = nodes[k];
    w(k) = nd.weight;
    for (Eigen::Index c = 0; c < n; ++c)
      E(k, c) = cell_primitive(a, (nd.base - grid.edges(c)) + nd.offset, (nd.base - grid.edges(c + 1)) + nd.offset);
  }
  const Eigen::VectorXd isw = grid.weights.array().rsqrt();
  SecondChaosMatrix out;
  out.t = t;
  out.M = ctx.dH * isw.asDiagonal() * (E.transpose() * w.asDiagonal() * E) * isw.asDiagonal();
  out.M = 0.5 * (out.M + out.M.transpose()).eval();
  out.grid = std::make_shared<const QuadratureGrid>(grid);
  out.frobenius_deficit = 1.0 - out.frobenius_variance() / std::pow(t, 2.0 * ctx.H);
  if (out.frobenius_deficit > tolerance)
    out.warnings.push_back("grid too coarse: 2||M||_F^2 falls short of t^{2H} by " +
                           std::to_string(out.frobenius_deficit) + " (tail_mass_bound " +
                           std::to_string(grid.tail_mass_bound) + ")");
  return out;
}

} // namespace rosenblatt
