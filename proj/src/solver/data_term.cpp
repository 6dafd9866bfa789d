#include "solver/data_term.hpp"

#include <cmath>

#include "core/error.hpp"

namespace spi {

DataTerm::DataTerm(const PatternSet& patterns, std::span<const double> y) : phi_(patterns.rows) {
  require(phi_.rows() > 0 && phi_.cols() > 0, ErrorCode::Dimension, "empty pattern set");
  require(static_cast<std::size_t>(phi_.rows()) == y.size(), ErrorCode::Dimension,
          "measurement length " + std::to_string(y.size()) + " does not match " +
              std::to_string(phi_.rows()) + " patterns");
  const double g = phi_.squaredNorm() / static_cast<double>(phi_.rows());
  require(g > 0.0 && std::isfinite(g), ErrorCode::Numeric, "patterns are all zero");
  scale_ = 1.0 / std::sqrt(g);
  b_ = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size())) * scale_;
  require(b_.allFinite(), ErrorCode::Numeric, "non-finite measurement values");
}

void DataTerm::apply(std::span<const double> x, Vector& out) const {
  const Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  out.noalias() = phi_ * xv;
  out *= scale_;
}

void DataTerm::apply_adjoint(const Vector& r, std::span<double> out) const {
  Eigen::Map<Vector> ov(out.data(), static_cast<Eigen::Index>(out.size()));
  ov.noalias() = phi_.transpose() * r;
  ov *= scale_;
}

const Eigen::LLT<Eigen::MatrixXd>& DataTerm::factor(double kappa) {
  require(kappa > 0.0, ErrorCode::InvalidArgument, "kappa must be > 0");
  auto it = factors_.find(kappa);
  if (it != factors_.end()) return *it->second;
  if (gram_.size() == 0) {
    const Eigen::Index m = phi_.rows();
    gram_ = Eigen::MatrixXd::Zero(m, m);
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(phi_, scale_ * scale_);
  }
  Eigen::MatrixXd shifted = gram_;
  shifted.diagonal().array() += kappa;
  auto llt = std::make_unique<Eigen::LLT<Eigen::MatrixXd>>();
  llt->compute(shifted.selfadjointView<Eigen::Lower>());
  require(llt->info() == Eigen::Success, ErrorCode::Numeric, "data-term factorization failed");
  return *factors_.emplace(kappa, std::move(llt)).first->second;
}

DataProx::DataProx(DataTerm& term, double mu, double rho)
    : term_(term), kappa_(rho / mu), llt_(term.factor(rho / mu)) {}

void DataProx::apply(std::span<const double> w, const Vector& aw, std::span<double> p, Vector& ap) {
  zeta_ = term_.target() - aw;
  llt_.solveInPlace(zeta_);
  term_.apply_adjoint(zeta_, p);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += w[i];
  ap = term_.target() - kappa_ * zeta_;
}

}  // namespace spi
