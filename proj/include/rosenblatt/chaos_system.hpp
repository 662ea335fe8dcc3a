#pragma once

#include "rosenblatt/kernel.hpp"
#include "rosenblatt/spectral.hpp"

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace rosenblatt {

struct ChaosOptions
{
  int cells_per_unit = 512;
  Eigen::Index j_max = 0; // 0 keeps every Galerkin mode
  double frobenius_tolerance = 0.03;
};

//! Reduced second-chaos discretization on [0, T], T = last partition time.
//!
//! Uses L_t = d A^* 1_[0,t] A with (Af)(u) = int (u - y)_+^{a-1} f(y) dy.
//! A piecewise-constant Galerkin step for A A^* (kernel B |u - v|^{H-1})
//! gives Lambda_k, phi_k, and psi_k = A^* phi_k / sqrt(Lambda_k) is an
//! orthonormal family in L^2(R).  In that basis
//!   M_t = d Lambda^{1/2} U_t^T U_t Lambda^{1/2} = W_t^T W_t,
//! with U the eigenvectors of D^{-1/2} S D^{-1/2} and W = sqrt(d) U Lambda^{1/2}.
class ChaosSystem
{
public:
  ChaosSystem(const HurstContext<>& ctx, const TimePartition& partition, const ChaosOptions& opt = {});

  const HurstContext<>& context() const;
  const TimePartition& partition() const;
  const ChaosOptions& options() const;
  std::shared_ptr<const QuadratureGrid> grid() const;

  Eigen::Index cells() const;
  Eigen::Index dimension() const;
  const Eigen::VectorXd& galerkin_eigenvalues() const;
  //! W: cells x J, row c is the loading of cell c on the noise.
  const Eigen::MatrixXd& noise_map() const;

  //! Number of cells inside [0, t]; t must be a cell edge.
  Eigen::Index cells_before(double t) const;
  Eigen::Index level_cells(int j) const { return cells_before(partition().time(j)); }

  SecondChaosMatrix chaos_matrix(double t) const;
  std::vector<SecondChaosMatrix> level_matrices() const;
  Spectrum level_spectrum(double t, const RetentionPolicy& policy = {}) const;

  //! True when 1 is a cell edge, so norms restricted to [0, 1] are available.
  bool has_unit_restriction() const;
  //! Q_kl = <psi_k, psi_l>_{L^2([0,1])}; computed once on first use.
  const Eigen::MatrixXd& restricted_gram() const;
  //! Eigenvalues mu of M_1 Q M_1: ||D Z_1||^2 restricted to [0,1] equals 4 sum mu_j zeta_j^2.
  Spectrum restricted_derivative_spectrum(const RetentionPolicy& policy = {}) const;

private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

} // namespace rosenblatt
