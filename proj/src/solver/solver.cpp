#include "solver/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/error.hpp"
#include "dictionary/spectral.hpp"
#include "transforms/dct.hpp"
#include "transforms/fft.hpp"
#include "transforms/operators.hpp"

namespace spi {

std::string_view to_string(Prior p) { return p == Prior::TV ? "TV" : "DCT"; }

Prior parse_prior(std::string_view text) {
  if (text == "TV" || text == "tv") return Prior::TV;
  if (text == "DCT" || text == "dct") return Prior::DCT;
  fail(ErrorCode::InvalidArgument, "unknown prior '" + std::string(text) + "'");
}

void validate(const SolverConfig& cfg) {
  require(cfg.rho > 0.0, ErrorCode::InvalidArgument, "rho must be > 0");
  require(!cfg.mu || *cfg.mu > 0.0, ErrorCode::InvalidArgument, "mu must be > 0");
  require(cfg.mu_noiseless > 0.0 && cfg.mu_gain > 0.0, ErrorCode::InvalidArgument,
          "mu_noiseless and mu_gain must be > 0");
  require(cfg.max_iterations >= 1, ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  require(cfg.tolerance > 0.0, ErrorCode::InvalidArgument, "tolerance must be > 0");
  if (cfg.use_csc) {
    require(cfg.lambda > 0.0, ErrorCode::InvalidArgument, "lambda must be > 0");
    require(cfg.dictionary != nullptr, ErrorCode::InvalidArgument, "CSC solver needs a dictionary");
  }
}

double resolve_mu(const SolverConfig& cfg, const Measurement& m, const DataTerm& data) {
  if (cfg.mu) return *cfg.mu;
  if (!m.noise.snr_db) return cfg.mu_noiseless;
  const double power = data.target().squaredNorm() / static_cast<double>(data.rows());
  const double sigma2 = power / std::pow(10.0, *m.noise.snr_db / 10.0) /
                        static_cast<double>(std::max<std::uint32_t>(1, m.noise.samplings));
  if (!(sigma2 > 0.0)) return 1e6;
  return std::clamp(cfg.mu_gain / sigma2, 1.0, 1e6);
}

namespace {

double sum_squares(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double sum_abs(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double diff_squares(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

void soft(std::span<const double> in, double tau, std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double mag = std::abs(in[i]) - tau;
    out[i] = mag > 0.0 ? std::copysign(mag, in[i]) : 0.0;
  }
}

// Sparsifying analysis operator Psi (stacked periodic differences, or the
// orthonormal DCT) and solves with I + Psi^T Psi, which is Fourier-diagonal
// for both.
class Analysis {
 public:
  Analysis(Prior prior, std::size_t rows, std::size_t cols)
      : prior_(prior), rows_(rows), cols_(cols), n_(rows * cols) {
    if (prior_ == Prior::TV) {
      weight_ = laplacian_symbol(rows, cols);
      for (double& w : weight_) w += 1.0;
    } else {
      weight_.assign(rows * (cols / 2 + 1), 2.0);
    }
  }

  std::size_t size() const { return prior_ == Prior::TV ? 2 * n_ : n_; }
  const std::vector<double>& weight() const { return weight_; }

  void forward(const Grid& x, std::vector<double>& out) const {
    out.resize(size());
    if (prior_ == Prior::TV) {
      const GradientStack g = gradient(x);
      std::copy(g.gx.values.begin(), g.gx.values.end(), out.begin());
      std::copy(g.gy.values.begin(), g.gy.values.end(), out.begin() + static_cast<std::ptrdiff_t>(n_));
    } else {
      const Grid c = dct2_forward(x);
      std::copy(c.values.begin(), c.values.end(), out.begin());
    }
  }

  Grid adjoint(std::span<const double> v) const {
    if (prior_ == Prior::TV) {
      GradientStack g{Grid(rows_, cols_, std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_))),
                      Grid(rows_, cols_, std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(n_), v.end()))};
      Grid out = divergence(g);
      for (double& x : out.values) x = -x;
      return out;
    }
    return dct2_inverse(Grid(rows_, cols_, std::vector<double>(v.begin(), v.end())));
  }

  Grid solve_normal(const Grid& rhs) const {
    if (prior_ == Prior::DCT) {
      Grid x = rhs;
      for (double& v : x.values) v *= 0.5;
      return x;
    }
    Spectrum s = fft2(rhs);
    for (std::size_t b = 0; b < s.size(); ++b) s.bins[b] /= weight_[b];
    return ifft2(s);
  }

 private:
  Prior prior_;
  std::size_t rows_, cols_, n_;
  std::vector<double> weight_;
};

void check_dimensions(const Measurement& m, const DataTerm& data, std::size_t rows, std::size_t cols) {
  require(data.cols() == rows * cols, ErrorCode::Dimension, "pattern size does not match the image size");
  require(m.values.size() == data.rows(), ErrorCode::Dimension,
          "measurement length does not match the pattern count");
}

void check_finite(double value, int iteration) {
  require(std::isfinite(value), ErrorCode::Numeric,
          "non-finite value at ADMM iteration " + std::to_string(iteration));
}

ReconResult finish(ReconResult r, Grid grid) {
  r.image = Image::clamped(grid);
  r.grid = std::move(grid);
  return r;
}

}  // namespace

ReconResult reconstruct_ls(const Measurement& m, const PatternSet& patterns) {
  const RowMatrix& A = patterns.rows;
  require(static_cast<std::size_t>(A.rows()) == m.values.size(), ErrorCode::Dimension,
          "measurement length does not match the pattern count");
  require(A.rows() > 0 && A.cols() > 0, ErrorCode::Dimension, "empty pattern set");
  const Eigen::Map<const Vector> y(m.values.data(), A.rows());
  require(y.allFinite(), ErrorCode::Numeric, "non-finite measurement values");

  ReconResult result;
  const double ynorm = y.norm();
  Vector z = Vector::Zero(A.rows());
  if (ynorm > 0.0) {
    Vector r = y, d = r, q, t;
    double rs = r.squaredNorm();
    const int max_iterations = std::max<int>(1000, 20 * static_cast<int>(A.rows()));
    for (int it = 1; it <= max_iterations; ++it) {
      t.noalias() = A.transpose() * d;
      q.noalias() = A * t;
      const double dq = d.dot(q);
      if (!(dq > 0.0)) break;  // search direction in the null space
      const double alpha = rs / dq;
      z += alpha * d;
      // Periodic residual replacement keeps the recursion honest on badly
      // conditioned systems.
      if (it % 50 == 0) {
        t.noalias() = A.transpose() * z;
        r = y - A * t;
      } else {
        r -= alpha * q;
      }
      const double rs_new = r.squaredNorm();
      check_finite(rs_new, it);
      result.iterations = it;
      result.primal_residuals.push_back(std::sqrt(rs_new) / ynorm);
      result.objective_history.push_back(0.5 * rs_new);
      if (std::sqrt(rs_new) <= 1e-10 * ynorm) {
        result.converged = true;
        break;
      }
      d = r + (rs_new / rs) * d;
      rs = rs_new;
    }
  } else {
    result.converged = true;
  }
  Grid x(patterns.ref.height, patterns.ref.width);
  Eigen::Map<Vector>(x.data(), static_cast<Eigen::Index>(x.size())).noalias() = A.transpose() * z;
  result.data_residuals = result.primal_residuals;
  return finish(std::move(result), std::move(x));
}

ReconResult reconstruct_global(const Measurement& m, const PatternSet& patterns,
                               const SolverConfig& cfg) {
  DataTerm data(patterns, m.values);
  return reconstruct_global(m, data, patterns.ref.height, patterns.ref.width, cfg);
}

ReconResult reconstruct_global(const Measurement& m, DataTerm& data, std::size_t rows,
                               std::size_t cols, const SolverConfig& cfg_in) {
  validate(cfg_in);
  check_dimensions(m, data, rows, cols);
  SolverConfig cfg = cfg_in;
  cfg.use_csc = false;
  const double mu = resolve_mu(cfg, m, data);
  cfg.mu = mu;
  const double rho = cfg.rho;
  const Analysis psi(cfg.prior, rows, cols);
  DataProx prox(data, mu, rho);

  const std::size_t n = rows * cols;
  Grid x(rows, cols), p(rows, cols), e(rows, cols), w(rows, cols), p_old;
  std::vector<double> v, b(psi.size()), psix, psip, v_old, tmp(psi.size());
  Vector ax, ap, ae = Vector::Zero(static_cast<Eigen::Index>(data.rows())), aw;

  // p starts at the minimum-norm data-consistent point, v at zero.
  prox.apply(w.span(), Vector::Zero(static_cast<Eigen::Index>(data.rows())), p.span(), ap);
  v.assign(psi.size(), 0.0);

  ReconResult result;
  double best = std::numeric_limits<double>::infinity();
  Grid best_x = p;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = v[i] - b[i];
    Grid rhs = psi.adjoint(tmp);
    for (std::size_t i = 0; i < n; ++i) rhs.values[i] += p.values[i] - e.values[i];
    x = psi.solve_normal(rhs);

    psi.forward(x, psix);
    data.apply(x.span(), ax);

    v_old = v;
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = psix[i] + b[i];
    soft(tmp, 1.0 / rho, v);
    p_old = p;
    for (std::size_t i = 0; i < n; ++i) w.values[i] = x.values[i] + e.values[i];
    aw = ax + ae;
    prox.apply(w.span(), aw, p.span(), ap);

    for (std::size_t i = 0; i < b.size(); ++i) b[i] += psix[i] - v[i];
    for (std::size_t i = 0; i < n; ++i) e.values[i] += x.values[i] - p.values[i];
    ae += ax - ap;

    // Evaluated at the data-side iterate p, which stays near the measurement
    // manifold; at x the mu-weighted misfit dominates and oscillates.
    psi.forward(p, psip);
    const double objective = sum_abs(psip) + mu * data.misfit(ap);
    check_finite(objective, it);

    const double r_prior = diff_squares(psix, v);
    const double primal = std::sqrt(r_prior + diff_squares(x.span(), p.span()));
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = v[i] - v_old[i];
    Grid dual_vec = psi.adjoint(tmp);
    for (std::size_t i = 0; i < n; ++i) dual_vec.values[i] += p.values[i] - p_old.values[i];
    const double dual = rho * std::sqrt(sum_squares(dual_vec.span()));
    // The dual parts are scaled separately: x carries no objective term, so
    // their sum vanishes at a solution.
    const double dual_sq = sum_squares(psi.adjoint(b).span()) + sum_squares(e.span());
    const double eps_pri = cfg.tolerance * std::sqrt(std::max(sum_squares(psix) + sum_squares(x.span()),
                                                              sum_squares(v) + sum_squares(p.span())));
    const double eps_dual = cfg.tolerance * rho * std::sqrt(dual_sq);

    result.iterations = it;
    result.objective_history.push_back(objective);
    result.primal_residuals.push_back(primal);
    result.dual_residuals.push_back(dual);
    result.data_residuals.push_back((ax - data.target()).norm());
    result.prior_residuals.push_back(std::sqrt(r_prior));
    if (objective < best) {
      best = objective;
      best_x = p;
    }
    if (primal <= eps_pri && dual <= eps_dual) {
      result.converged = true;
      break;
    }
  }
  result.config = cfg;
  Grid out = result.converged ? std::move(x) : std::move(best_x);
  return finish(std::move(result), std::move(out));
}

ReconResult reconstruct_csc(const Measurement& m, const PatternSet& patterns,
                            const SolverConfig& cfg) {
  DataTerm data(patterns, m.values);
  return reconstruct_csc(m, data, patterns.ref.height, patterns.ref.width, cfg);
}

ReconResult reconstruct_csc(const Measurement& m, DataTerm& data, std::size_t rows,
                            std::size_t cols, const SolverConfig& cfg_in) {
  SolverConfig cfg = cfg_in;
  cfg.use_csc = true;
  validate(cfg);
  check_dimensions(m, data, rows, cols);
  const Dictionary& dict = *cfg.dictionary;
  validate(dict);
  require(dict.kernel_size <= rows && dict.kernel_size <= cols, ErrorCode::Dimension,
          "dictionary kernels are larger than the image");
  const double mu = resolve_mu(cfg, m, data);
  cfg.mu = mu;
  const double rho = cfg.rho;
  const double lambda = cfg.lambda;
  const Analysis psi(cfg.prior, rows, cols);
  DataProx prox(data, mu, rho);
  const KernelBank bank(dict.kernels, rows, cols);
  const std::size_t K = dict.count();
  const std::size_t n = rows * cols;

  // Block one is (s, c) with x = c + D s. Per frequency the update minimizes
  // |s - r|^2 + w |d^T s - t|^2 with w the symbol of I + Psi^T Psi; at DC the
  // free constant absorbs the fit, which leaves s(0) = r(0).
  std::vector<double> weights = psi.weight();
  weights[0] = 0.0;

  std::vector<Grid> s(K, Grid(rows, cols)), z(K, Grid(rows, cols)), a(K, Grid(rows, cols));
  std::vector<Spectrum> s_hat(K, Spectrum(rows, cols));
  std::vector<Complex> scratch;
  Grid x(rows, cols), xz(rows, cols), p(rows, cols), e(rows, cols), w(rows, cols), r(rows, cols), p_old;
  std::vector<double> v, b(psi.size()), psix, psixz, v_old, tmp(psi.size());
  Vector ax, axz, ap, ae = Vector::Zero(static_cast<Eigen::Index>(data.rows())), aw;
  Spectrum x_hat(rows, cols), target;

  prox.apply(w.span(), Vector::Zero(static_cast<Eigen::Index>(data.rows())), p.span(), ap);
  v.assign(psi.size(), 0.0);

  ReconResult result;
  double best = std::numeric_limits<double>::infinity();
  Grid best_x = p;
  std::vector<Grid> best_z = z;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = v[i] - b[i];
    Grid rhs = psi.adjoint(tmp);
    for (std::size_t i = 0; i < n; ++i) rhs.values[i] += p.values[i] - e.values[i];
    fft2(rhs, target);
    for (std::size_t bin = 0; bin < target.size(); ++bin) target.bins[bin] /= psi.weight()[bin];

    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < n; ++i) r.values[i] = z[k].values[i] - a[k].values[i];
      fft2(r, s_hat[k]);
    }
    solve_rank_one(bank, s_hat, target, weights);
    bank.synthesize(s_hat, x_hat);
    const Complex dc = target.bins[0] - x_hat.bins[0];  // N * c
    x_hat.bins[0] = target.bins[0];
    ifft2(x_hat, x, scratch);
    double s_sq = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      ifft2(s_hat[k], s[k], scratch);
      s_sq += sum_squares(s[k].span());
    }
    psi.forward(x, psix);
    data.apply(x.span(), ax);

    double dz = 0.0, r_maps = 0.0, z_sq = 0.0, a_sq = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double val = s[k].values[i] + a[k].values[i];
        const double mag = std::abs(val) - lambda / rho;
        const double znew = mag > 0.0 ? std::copysign(mag, val) : 0.0;
        dz += (znew - z[k].values[i]) * (znew - z[k].values[i]);
        z[k].values[i] = znew;
        const double res = s[k].values[i] - znew;
        a[k].values[i] += res;
        r_maps += res * res;
        z_sq += znew * znew;
        a_sq += a[k].values[i] * a[k].values[i];
      }
    }
    // The reported image is synthesized from the sparse maps.
    double l1 = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      fft2(z[k], s_hat[k]);
      l1 += sum_abs(z[k].span());
    }
    bank.synthesize(s_hat, x_hat);
    x_hat.bins[0] += dc;
    ifft2(x_hat, xz, scratch);
    psi.forward(xz, psixz);
    data.apply(xz.span(), axz);
    const double objective = sum_abs(psixz) + lambda * l1 + mu * data.misfit(axz);
    check_finite(objective, it);

    v_old = v;
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = psix[i] + b[i];
    soft(tmp, 1.0 / rho, v);
    p_old = p;
    for (std::size_t i = 0; i < n; ++i) w.values[i] = x.values[i] + e.values[i];
    aw = ax + ae;
    prox.apply(w.span(), aw, p.span(), ap);

    for (std::size_t i = 0; i < b.size(); ++i) b[i] += psix[i] - v[i];
    for (std::size_t i = 0; i < n; ++i) e.values[i] += x.values[i] - p.values[i];
    ae += ax - ap;

    const double r_prior = diff_squares(psix, v);
    const double primal = std::sqrt(r_maps + r_prior + diff_squares(x.span(), p.span()));
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = v[i] - v_old[i];
    Grid dual_vec = psi.adjoint(tmp);
    for (std::size_t i = 0; i < n; ++i) dual_vec.values[i] += p.values[i] - p_old.values[i];
    const double dual = rho * std::sqrt(dz + sum_squares(dual_vec.span()));
    // The dual parts are scaled separately: x carries no objective term, so
    // their sum vanishes at a solution.
    const double dual_sq = sum_squares(psi.adjoint(b).span()) + sum_squares(e.span());
    const double eps_pri =
        cfg.tolerance * std::sqrt(std::max(s_sq + sum_squares(psix) + sum_squares(x.span()),
                                           z_sq + sum_squares(v) + sum_squares(p.span())));
    const double eps_dual = cfg.tolerance * rho * std::sqrt(a_sq + dual_sq);

    result.iterations = it;
    result.objective_history.push_back(objective);
    result.primal_residuals.push_back(primal);
    result.dual_residuals.push_back(dual);
    result.data_residuals.push_back((ax - data.target()).norm());
    result.prior_residuals.push_back(std::sqrt(r_prior));
    if (objective < best) {
      best = objective;
      best_x = xz;
      best_z = z;
    }
    if (primal <= eps_pri && dual <= eps_dual) {
      result.converged = true;
      break;
    }
  }
  const std::vector<Grid>& maps = result.converged ? z : best_z;
  std::size_t active = 0;
  for (const Grid& g : maps)
    for (double val : g.values) active += std::abs(val) > 1e-8;
  result.feature_sparsity = static_cast<double>(active) / static_cast<double>(K * n);
  result.config = cfg;
  Grid out = result.converged ? std::move(xz) : std::move(best_x);
  return finish(std::move(result), std::move(out));
}

ReconResult reconstruct(Algorithm algorithm, const Measurement& m, const PatternSet& patterns,
                        DataTerm& data, SolverConfig cfg) {
  const std::size_t rows = patterns.ref.height, cols = patterns.ref.width;
  switch (algorithm) {
    case Algorithm::LS:
      return reconstruct_ls(m, patterns);
    case Algorithm::TV:
    case Algorithm::DCT:
      cfg.prior = algorithm == Algorithm::TV ? Prior::TV : Prior::DCT;
      cfg.use_csc = false;
      return reconstruct_global(m, data, rows, cols, cfg);
    case Algorithm::TV_CSC:
    case Algorithm::DCT_CSC:
      cfg.prior = algorithm == Algorithm::TV_CSC ? Prior::TV : Prior::DCT;
      cfg.use_csc = true;
      return reconstruct_csc(m, data, rows, cols, cfg);
  }
  fail(ErrorCode::Internal, "unhandled algorithm");
}

}  // namespace spi
