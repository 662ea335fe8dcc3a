#include "rosenblatt/chaos_system.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace rosenblatt {

struct ChaosSystem::Impl
{
  HurstContext<> ctx;
  TimePartition partition;
  ChaosOptions opt;
  std::shared_ptr<QuadratureGrid> grid;
  Eigen::VectorXd lambda; // Galerkin eigenvalues, descending, retained
  Eigen::MatrixXd U;      // cells x J
  Eigen::MatrixXd W;      // cells x J

  mutable std::once_flag q_once;
  mutable Eigen::MatrixXd Q;

  Eigen::Index cells_before(double t) const
  {
    const auto& e = grid->edges;
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    for (Eigen::Index i = 0; i < e.size(); ++i)
      if (std::abs(e(i) - t) <= tol)
        return i;
    throw std::invalid_argument("ChaosSystem: time " + std::to_string(t) + " is not a cell edge of the grid");
  }

  void build_restricted_gram() const;
};

namespace {

std::shared_ptr<QuadratureGrid> chaos_cells(const TimePartition& partition, int cells_per_unit)
{
  std::vector<double> cuts = partition.times();
  const double T = partition.horizon();
  if (T > 1.0 && std::find(cuts.begin(), cuts.end(), 1.0) == cuts.end())
    cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());

  std::vector<double> edges{0.0};
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double len = cuts[s + 1] - cuts[s];
    const int n = std::max(1, static_cast<int>(std::lround(len * cells_per_unit)));
    for (int k = 1; k < n; ++k)
      edges.push_back(cuts[s] + len * k / n);
    edges.push_back(cuts[s + 1]);
  }
  auto grid = std::make_shared<QuadratureGrid>();
  const Eigen::Index n = static_cast<Eigen::Index>(edges.size()) - 1;
  grid->edges = Eigen::Map<const Eigen::VectorXd>(edges.data(), n + 1);
  grid->nodes = 0.5 * (grid->edges.head(n) + grid->edges.tail(n));
  grid->weights = grid->edges.tail(n) - grid->edges.head(n);
  grid->domain = {0.0, T};
  grid->points_per_panel = 1;
  return grid;
}

} // namespace

ChaosSystem::ChaosSystem(const HurstContext<>& ctx, const TimePartition& partition, const ChaosOptions& opt)
    : impl_(std::make_shared<Impl>())
{
  if (opt.cells_per_unit < 1)
    throw std::invalid_argument("ChaosSystem: cells_per_unit must be positive");
  if (partition.m() < 1)
    throw std::invalid_argument("ChaosSystem: empty partition");
  auto& I = *impl_;
  I.ctx = ctx;
  I.partition = partition;
  I.opt = opt;
  I.grid = chaos_cells(partition, opt.cells_per_unit);

  const Eigen::VectorXd isq = I.grid->weights.array().rsqrt();
  const Eigen::MatrixXd S = isq.asDiagonal() * riesz_gram(ctx, I.grid->edges) * isq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("ChaosSystem: Galerkin eigensolver did not converge");
  const Eigen::Index n = S.rows();
  const Eigen::Index J = opt.j_max > 0 ? std::min<Eigen::Index>(opt.j_max, n) : n;
  // SelfAdjointEigenSolver sorts ascending; keep the top J in descending order.
  I.lambda = es.eigenvalues().reverse().head(J).cwiseMax(0.0);
  I.U = es.eigenvectors().rowwise().reverse().leftCols(J);
  I.W = std::sqrt(ctx.dH) * I.U * I.lambda.cwiseSqrt().asDiagonal();
}

const HurstContext<>& ChaosSystem::context() const { return impl_->ctx; }
const TimePartition& ChaosSystem::partition() const { return impl_->partition; }
const ChaosOptions& ChaosSystem::options() const { return impl_->opt; }
std::shared_ptr<const QuadratureGrid> ChaosSystem::grid() const { return impl_->grid; }
Eigen::Index ChaosSystem::cells() const { return impl_->grid->weights.size(); }
Eigen::Index ChaosSystem::dimension() const { return impl_->W.cols(); }
const Eigen::VectorXd& ChaosSystem::galerkin_eigenvalues() const { return impl_->lambda; }
const Eigen::MatrixXd& ChaosSystem::noise_map() const { return impl_->W; }
Eigen::Index ChaosSystem::cells_before(double t) const { return impl_->cells_before(t); }

SecondChaosMatrix ChaosSystem::chaos_matrix(double t) const
{
  const auto& I = *impl_;
  if (t > I.grid->domain.hi * (1.0 + 1e-12))
    throw std::invalid_argument("chaos_matrix: t beyond the grid horizon");
  const Eigen::Index k = I.cells_before(t);
  SecondChaosMatrix out;
  out.t = t;
  const auto Wt = I.W.topRows(k);
  out.M.noalias() = Wt.transpose() * Wt;
  out.grid = I.grid;
  out.frobenius_deficit = t > 0.0 ? 1.0 - out.frobenius_variance() / std::pow(t, 2.0 * I.ctx.H) : 0.0;
  if (out.frobenius_deficit > I.opt.frobenius_tolerance)
    out.warnings.push_back("grid too coarse: 2||M||_F^2 falls short of t^{2H} by " +
                           std::to_string(out.frobenius_deficit));
  return out;
}

std::vector<SecondChaosMatrix> ChaosSystem::level_matrices() const
{
  std::vector<SecondChaosMatrix> out;
  for (int j = 1; j <= partition().m(); ++j)
    out.push_back(chaos_matrix(partition().time(j)));
  return out;
}

Spectrum ChaosSystem::level_spectrum(double t, const RetentionPolicy& policy) const
{
  const auto& I = *impl_;
  const Eigen::Index k = I.cells_before(t);
  const auto Wt = I.W.topRows(k);
  Eigen::MatrixXd G = k <= Wt.cols() ? Eigen::MatrixXd(Wt * Wt.transpose()) : Eigen::MatrixXd(Wt.transpose() * Wt);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("level_spectrum: eigensolver did not converge");
  const Eigen::VectorXd values = es.eigenvalues().cwiseMax(0.0);
  Spectrum s = make_spectrum(values, Eigen::MatrixXd(), Spectrum::Order::magnitude, policy);
  extrapolate_tail(I.ctx, t, values, s);
  return s;
}

bool ChaosSystem::has_unit_restriction() const
{
  const auto& e = impl_->grid->edges;
  for (Eigen::Index i = 0; i < e.size(); ++i)
    if (std::abs(e(i) - 1.0) <= 1e-9)
      return true;
  return false;
}

void ChaosSystem::Impl::build_restricted_gram() const
{
  const double a = ctx.a();
  const Eigen::Index n = grid->weights.size();
  const Eigen::Index n1 = cells_before(1.0);
  const auto& e = grid->edges;

  GradedRuleOptions opt;
  opt.points = 10;
  opt.extra_levels = 4;
  // f_c(y) = int_c (u - y)_+^{a-1} du is singular only as y approaches a cell
  // edge from the left, so each y-panel is graded toward its right end.
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  const Eigen::Index block = 32;
  for (Eigen::Index p0 = 0; p0 < n1; p0 += block) {
    std::vector<GradedNode> nodes;
    for (Eigen::Index p = p0; p < std::min(n1, p0 + block); ++p) {
      const auto part = graded_rule(e(p), e(p + 1), EndBehaviour{}, EndBehaviour{a}, opt);
      nodes.insert(nodes.end(), part.begin(), part.end());
    }
    const Eigen::Index ny = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd F(ny, n);
    for (Eigen::Index k = 0; k < ny; ++k) {
      const auto& nd = nodes[k];
      const double sw = std::sqrt(nd.weight);
      for (Eigen::Index c = 0; c < n; ++c)
        F(k, c) = sw * cell_primitive(a, (e(c + 1) - nd.base) - nd.offset, (e(c) - nd.base) - nd.offset);
    }
    R.selfadjointView<Eigen::Lower>().rankUpdate(F.transpose());
  }
  R = R.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd isq = grid->weights.array().rsqrt();
  // Modes with a vanishing Galerkin eigenvalue carry no loading in W.
  const Eigen::VectorXd il = (lambda.array() > 0.0).select(lambda.array().rsqrt(), 0.0);
  const Eigen::MatrixXd V = isq.asDiagonal() * U * il.asDiagonal();
  Q.noalias() = V.transpose() * R * V;
  Q = 0.5 * (Q + Q.transpose()).eval();
}

const Eigen::MatrixXd& ChaosSystem::restricted_gram() const
{
  if (!has_unit_restriction())
    throw std::logic_error("restricted_gram: 1 is not a cell edge of this grid");
  std::call_once(impl_->q_once, [this] { impl_->build_restricted_gram(); });
  return impl_->Q;
}

Spectrum ChaosSystem::restricted_derivative_spectrum(const RetentionPolicy& policy) const
{
  const auto& Q = restricted_gram();
  const SecondChaosMatrix M1 = chaos_matrix(1.0);
  const Eigen::MatrixXd G = M1.M * Q * M1.M;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("restricted_derivative_spectrum: eigensolver did not converge");
  return make_spectrum(es.eigenvalues().cwiseMax(0.0), Eigen::MatrixXd(), Spectrum::Order::value, policy);
}

} // namespace rosenblatt
