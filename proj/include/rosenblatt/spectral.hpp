#pragma once

#include "rosenblatt/hurst.hpp"
#include "rosenblatt/kernel.hpp"
#include "rosenblatt/quadrature.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rosenblatt {

struct RetentionPolicy
{
  Eigen::Index j_max = 0;        // 0 keeps every mode allowed by coverage
  double coverage_target = 1.0;  // stop once sum of retained lambda^2 reaches this fraction
};

//! Sorted eigen-decomposition of a discretized integral operator.
struct Spectrum
{
  enum class Order
  {
    value,
    magnitude
  };

  Eigen::VectorXd eigenvalues;  // retained modes
  Eigen::MatrixXd eigenvectors; // columns, orthonormal in the weighted inner product; may be empty
  double coverage = 1.0;        // retained sum lambda^2 / discrete sum lambda^2
  double total_sq = 0.0;        // discrete sum lambda^2
  double total_sum = 0.0;       // discrete sum lambda (trace)
  Eigen::Index full_size = 0;   // number of discrete eigenvalues before truncation
  Order order = Order::value;

  // Extrapolated continuum tail: discrete modes are trusted up to tail_start,
  // tail_sq estimates sum lambda_j^2 over j > tail_start.
  Eigen::Index tail_start = 0;
  double tail_sq = 0.0;
  double head_sq = 0.0; // discrete sum lambda^2 over j <= tail_start

  Eigen::Index size() const { return eigenvalues.size(); }
  double retained_sq() const { return eigenvalues.squaredNorm(); }
  double discarded_sq() const { return std::max(0.0, total_sq - retained_sq()); }
  bool extrapolated() const { return tail_start > 0; }
  //! Variance 2 sum lambda^2 including the extrapolated tail when present.
  double extrapolated_variance() const;
};

//! Sorts `values` (and matching columns of `vectors`) and applies `policy`.
Spectrum make_spectrum(const Eigen::VectorXd& values,
                       const Eigen::MatrixXd& vectors,
                       Spectrum::Order order,
                       const RetentionPolicy& policy = {});

using KernelFn = std::function<double(double, double)>;

struct NystromOptions
{
  RetentionPolicy retention;
  Spectrum::Order order = Spectrum::Order::value;
  bool eigenvectors = true;
  int threads = 1;
};

//! Eigenpairs of [sqrt(w_k) K(x_k, x_l) sqrt(w_l)]; eigenvectors are returned as
//! eigenfunction samples phi(x_k) = u_k / sqrt(w_k).
Spectrum nystrom_eig(const KernelFn& kernel, const QuadratureGrid& grid, const NystromOptions& opt = {});

//! Kernel matrix assembly used by nystrom_eig (upper triangle evaluated, mirrored).
Eigen::MatrixXd kernel_matrix(const KernelFn& kernel, const QuadratureGrid& grid, int threads = 1);

//! Sum of lambda_j^2 for j > start, extrapolated from the Weyl asymptotics
//! lambda_j ~ c t^H (pi (j + delta))^{-H} with delta fitted on the mid spectrum.
//! Returns the fitted start index in `start` (0 when the spectrum is too short).
double weyl_tail_sq(const HurstContext<>& ctx, double t, const Eigen::VectorXd& eigenvalues, Eigen::Index& start);

//! Attaches the extrapolated tail to a Rosenblatt level spectrum.
void extrapolate_tail(const HurstContext<>& ctx, double t, const Eigen::VectorXd& all_values, Spectrum& spectrum);

//! Discrete proxy of L_t: Z_t ~ xi^T M xi - tr M with xi i.i.d. standard normal.
struct SecondChaosMatrix
{
  double t = 0.0;
  Eigen::MatrixXd M;
  std::shared_ptr<const QuadratureGrid> grid;
  double frobenius_deficit = 0.0; // 1 - 2 ||M||_F^2 / t^{2H}
  std::vector<std::string> warnings;

  Eigen::Index dimension() const { return M.rows(); }
  double frobenius_variance() const { return 2.0 * M.squaredNorm(); }
};

//! Eigenvalues of M sorted by magnitude, with coverage of sum lambda^2.
Spectrum series_coefficients(const SecondChaosMatrix& M, const RetentionPolicy& policy = {});

// ---------------------------------------------------------------------------
// Galerkin pieces shared by the reduced chaos system.

//! S_ij = B(H/2, 1-H) int_{c_i} int_{c_j} |u - v|^{H-1} du dv for cells given by `edges`.
Eigen::MatrixXd riesz_gram(const HurstContext<>& ctx, const Eigen::VectorXd& edges);

//! Uniform cells on [0, t]: eigenvalues of the Rosenblatt level matrix M_t
//! (eigenvalues only), with the Weyl tail attached.
Spectrum rosenblatt_level_spectrum(const HurstContext<>& ctx, double t, int cells, const RetentionPolicy& policy = {});

// ---------------------------------------------------------------------------
// Literal truncated-line discretization (diagnostic).

//! Cells on [lower, t]: n_inner uniform cells on [0, t], n_tail geometric cells on [lower, 0].
QuadratureGrid build_line_grid(const HurstContext<>& ctx, double t, double lower, int n_inner, int n_tail);

//! M_kl = (cell-averaged L_t)(c_k, c_l) sqrt(|c_k| |c_l|) on a line grid.
SecondChaosMatrix line_chaos_matrix(const HurstContext<>& ctx, double t, const QuadratureGrid& grid, double tolerance = 0.03);

} // namespace rosenblatt
