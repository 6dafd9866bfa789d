#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "forward/patterns.hpp"

namespace spi {

using Vector = Eigen::VectorXd;

// The quadratic data term (mu/2)||A x - b||^2 with A = Phi / sqrt(g) and
// b = y / sqrt(g), where g is the mean squared row norm of Phi. The scaling
// makes mu comparable across pattern ensembles and sizes.
//
// Holds a reference to the pattern rows; the PatternSet must outlive it.
// Not thread-safe (factorizations are cached lazily).
class DataTerm {
 public:
  DataTerm(const PatternSet& patterns, std::span<const double> y);

  std::size_t rows() const { return static_cast<std::size_t>(phi_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(phi_.cols()); }
  double row_scale() const { return scale_; }
  const Vector& target() const { return b_; }

  // out = A x
  void apply(std::span<const double> x, Vector& out) const;
  // out = A^T r
  void apply_adjoint(const Vector& r, std::span<double> out) const;

  // 1/2 ||Ax - b||^2 given Ax.
  double misfit(const Vector& ax) const { return 0.5 * (ax - b_).squaredNorm(); }

  // Cholesky factor of A A^T + kappa I, computed once per kappa.
  const Eigen::LLT<Eigen::MatrixXd>& factor(double kappa);

 private:
  const RowMatrix& phi_;
  double scale_ = 1.0;  // 1/sqrt(g)
  Vector b_;
  Eigen::MatrixXd gram_;  // A A^T, lower triangle
  std::map<double, std::unique_ptr<Eigen::LLT<Eigen::MatrixXd>>> factors_;
};

// prox of (mu/2)||A p - b||^2 with penalty rho:
//   p = argmin (mu/2)||A p - b||^2 + (rho/2)||p - w||^2
//     = w + A^T (A A^T + kappa I)^{-1} (b - A w),  kappa = rho/mu.
// A p comes for free as b - kappa (A A^T + kappa I)^{-1} (b - A w).
class DataProx {
 public:
  DataProx(DataTerm& term, double mu, double rho);

  void apply(std::span<const double> w, const Vector& aw, std::span<double> p, Vector& ap);

 private:
  DataTerm& term_;
  double kappa_;
  const Eigen::LLT<Eigen::MatrixXd>& llt_;
  Vector zeta_;
};

}  // namespace spi
