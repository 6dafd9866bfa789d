#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "dictionary/coding.hpp"
#include "dictionary/dictionary.hpp"
#include "forward/rng.hpp"

namespace spi {
namespace {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

struct TrainingImage {
  Grid x;             // mean-subtracted
  Spectrum x_hat;
  CodingState state;
  std::vector<Spectrum> z_hat;
  double objective = 0.0;
};

double squared_norm(const std::vector<double>& v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

void transform_maps(const std::vector<Grid>& maps, std::vector<Spectrum>& out) {
  out.resize(maps.size());
  for (std::size_t k = 0; k < maps.size(); ++k) fft2(maps[k], out[k]);
}

// Eq. (1) term of one image given its map spectra.
double image_objective(const KernelBank& bank, const TrainingImage& img,
                       const std::vector<Grid>& maps, const std::vector<Spectrum>& map_hat,
                       double beta) {
  Spectrum synth;
  bank.synthesize(map_hat, synth);
  const Grid recon = ifft2(synth);
  double fit = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    const double d = img.x.values[i] - recon.values[i];
    fit += d * d;
  }
  for (const Grid& m : maps)
    for (double v : m.values) l1 += std::abs(v);
  return 0.5 * fit + beta * l1;
}

double total_objective(const std::vector<TrainingImage>& images) {
  double sum = 0.0;
  for (const auto& img : images) sum += img.objective;
  return sum;
}

// Support (m x m at the corner) then unit ball.
void project_kernel(Grid& padded, std::size_t m) {
  double sq = 0.0;
  for (std::size_t i = 0; i < padded.rows; ++i) {
    for (std::size_t j = 0; j < padded.cols; ++j) {
      double& v = padded(i, j);
      if (i >= m || j >= m) {
        v = 0.0;
      } else {
        sq += v * v;
      }
    }
  }
  const double norm = std::sqrt(sq);
  if (norm > 1.0) {
    for (double& v : padded.values) v /= norm;
  }
}

Grid crop_kernel(const Grid& padded, std::size_t m) {
  Grid k(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) k(i, j) = padded(i, j);
  return k;
}

// Per-frequency normal equations (Z^H Z + rho I) d = rhs of the dictionary
// step, factored once per outer iteration. When there are fewer images than
// kernels the J x J Woodbury form is factored instead.
class DictionarySystem {
 public:
  DictionarySystem(const std::vector<TrainingImage>& images, std::size_t count, double rho)
      : J_(images.size()), K_(count), rho_(rho) {
    bins_ = images.front().x_hat.size();
    woodbury_ = J_ < K_;
    z_.resize(bins_);
    zx_.resize(bins_);
    llt_.resize(bins_);
    for (std::size_t b = 0; b < bins_; ++b) {
      CMatrix Z(J_, K_);
      CVector x(J_);
      for (std::size_t j = 0; j < J_; ++j) {
        for (std::size_t k = 0; k < K_; ++k) Z(j, k) = images[j].z_hat[k].bins[b];
        x(j) = images[j].x_hat.bins[b];
      }
      zx_[b] = Z.adjoint() * x;
      if (woodbury_) {
        CMatrix S = Z * Z.adjoint();
        S.diagonal().array() += rho_;
        llt_[b].compute(S);
        z_[b] = std::move(Z);
      } else {
        CMatrix A = Z.adjoint() * Z;
        A.diagonal().array() += rho_;
        llt_[b].compute(A);
      }
    }
  }

  // d_hat[k].bins[b] <- A_b^{-1} (Z_b^H x_b + rho v_b), v given in d_hat.
  void solve(std::vector<Spectrum>& d_hat) const {
    CVector rhs(K_);
    for (std::size_t b = 0; b < bins_; ++b) {
      for (std::size_t k = 0; k < K_; ++k) rhs(k) = zx_[b](k) + rho_ * d_hat[k].bins[b];
      CVector d;
      if (woodbury_) {
        const CMatrix& Z = z_[b];
        d = (rhs - Z.adjoint() * llt_[b].solve(Z * rhs)) / rho_;
      } else {
        d = llt_[b].solve(rhs);
      }
      for (std::size_t k = 0; k < K_; ++k) d_hat[k].bins[b] = d(k);
    }
  }

 private:
  std::size_t J_, K_, bins_ = 0;
  double rho_;
  bool woodbury_ = false;
  std::vector<CMatrix> z_;
  std::vector<CVector> zx_;
  std::vector<Eigen::LLT<CMatrix>> llt_;
};

struct DictionaryAdmm {
  std::vector<Grid> g;  // constrained copy, padded
  std::vector<Grid> h;  // scaled dual
  double rho = 0.0;
};

// Returns the number of ADMM iterations; `converged` reports the stopping test.
int dictionary_step(const std::vector<TrainingImage>& images, std::size_t m, const LearnConfig& cfg,
                    DictionaryAdmm& admm, bool& converged) {
  const std::size_t K = admm.g.size();
  const std::size_t rows = admm.g[0].rows, cols = admm.g[0].cols;

  // Penalty scaled to the map energy so the split is balanced regardless of
  // how many images or active coefficients there are.
  double energy = 0.0;
  for (const auto& img : images)
    for (const Grid& z : img.state.z) energy += squared_norm(z.values);
  energy /= static_cast<double>(K);
  const double rho = cfg.admm_rho * std::max(energy, 1e-3);
  if (admm.rho > 0.0) {
    for (Grid& h : admm.h)
      for (double& v : h.values) v *= admm.rho / rho;
  }
  admm.rho = rho;

  const DictionarySystem system(images, K, rho);
  std::vector<Spectrum> d_hat(K, Spectrum(rows, cols));
  std::vector<Grid> d(K, Grid(rows, cols)), v(K, Grid(rows, cols));
  std::vector<Complex> scratch;
  converged = false;
  int it = 0;
  while (it < cfg.inner_iterations) {
    ++it;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < v[k].size(); ++i) v[k].values[i] = admm.g[k].values[i] - admm.h[k].values[i];
      fft2(v[k], d_hat[k]);
    }
    system.solve(d_hat);
    double primal = 0.0, dual = 0.0, d_norm = 0.0, g_norm = 0.0, h_norm = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      ifft2(d_hat[k], d[k], scratch);
      Grid& g = admm.g[k];
      Grid& h = admm.h[k];
      const Grid g_old = g;
      for (std::size_t i = 0; i < g.size(); ++i) g.values[i] = d[k].values[i] + h.values[i];
      project_kernel(g, m);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = d[k].values[i] - g.values[i];
        h.values[i] += r;
        primal += r * r;
        dual += (g.values[i] - g_old.values[i]) * (g.values[i] - g_old.values[i]);
        d_norm += d[k].values[i] * d[k].values[i];
        g_norm += g.values[i] * g.values[i];
        h_norm += h.values[i] * h.values[i];
      }
    }
    require(std::isfinite(primal) && std::isfinite(dual), ErrorCode::Numeric,
            "dictionary step diverged");
    if (std::sqrt(primal) <= cfg.inner_tolerance * std::sqrt(std::max(d_norm, g_norm)) &&
        rho * std::sqrt(dual) <= cfg.inner_tolerance * rho * std::sqrt(h_norm)) {
      converged = true;
      break;
    }
  }
  return it;
}

// Re-seeds kernels whose maps vanished on every image with the highest-energy
// m x m residual patches. Such kernels do not contribute to the objective, so
// this never changes it.
std::size_t revive_dead_atoms(std::vector<TrainingImage>& images, const KernelBank& bank,
                              std::vector<Grid>& kernels, std::size_t m) {
  const std::size_t K = kernels.size();
  std::vector<std::size_t> dead;
  for (std::size_t k = 0; k < K; ++k) {
    bool active = false;
    for (const auto& img : images) {
      for (double v : img.state.z[k].values) active = active || v != 0.0;
      if (active) break;
    }
    if (!active) dead.push_back(k);
  }
  if (dead.empty()) return 0;

  struct Patch {
    double energy;
    std::size_t image, row, col;
  };
  std::vector<Patch> patches;
  std::vector<Grid> residuals;
  for (std::size_t j = 0; j < images.size(); ++j) {
    const auto& img = images[j];
    Spectrum synth;
    bank.synthesize(img.z_hat, synth);
    Grid r = ifft2(synth);
    for (std::size_t i = 0; i < r.size(); ++i) r.values[i] = img.x.values[i] - r.values[i];
    const std::size_t H = r.rows, W = r.cols;
    for (std::size_t p = 0; p + m <= H; ++p) {
      for (std::size_t q = 0; q + m <= W; ++q) {
        double e = 0.0;
        for (std::size_t a = 0; a < m; ++a)
          for (std::size_t b = 0; b < m; ++b) e += r(p + a, q + b) * r(p + a, q + b);
        patches.push_back({e, j, p, q});
      }
    }
    residuals.push_back(std::move(r));
  }
  // Largest first; ties broken by position for determinism.
  std::sort(patches.begin(), patches.end(), [](const Patch& a, const Patch& b) {
    if (a.energy != b.energy) return a.energy > b.energy;
    if (a.image != b.image) return a.image < b.image;
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::size_t taken = 0;
  std::vector<Patch> chosen;
  for (const Patch& p : patches) {
    if (taken == dead.size() || p.energy <= 0.0) break;
    // Skip patches overlapping one already used.
    bool overlaps = false;
    for (const Patch& c : chosen) {
      overlaps = overlaps || (c.image == p.image && (c.row > p.row ? c.row - p.row : p.row - c.row) < m &&
                              (c.col > p.col ? c.col - p.col : p.col - c.col) < m);
    }
    if (overlaps) continue;
    chosen.push_back(p);
    Grid& kernel = kernels[dead[taken++]];
    double sq = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        kernel(a, b) = residuals[p.image](p.row + a, p.col + b);
        sq += kernel(a, b) * kernel(a, b);
      }
    }
    for (double& v : kernel.values) v /= std::sqrt(sq);
  }
  return taken;
}

}  // namespace

Dictionary learn(const std::vector<Image>& corpus, std::size_t count, std::size_t size,
                 const LearnConfig& cfg, std::vector<std::string> corpus_ids) {
  validate(cfg);
  require(!corpus.empty(), ErrorCode::InvalidArgument, "empty training corpus");
  const std::size_t H = corpus[0].height(), W = corpus[0].width();
  for (const Image& img : corpus) {
    require(img.height() == H && img.width() == W, ErrorCode::Dimension,
            "training images differ in size");
  }
  require(H >= size && W >= size, ErrorCode::Dimension, "training images smaller than the kernels");
  require(corpus_ids.empty() || corpus_ids.size() == corpus.size(), ErrorCode::InvalidArgument,
          "corpus id count does not match the corpus");

  Dictionary dict = init_dictionary(count, size, cfg.seed);
  std::vector<TrainingImage> images(corpus.size());
  for (std::size_t j = 0; j < corpus.size(); ++j) {
    TrainingImage& img = images[j];
    img.x = corpus[j].grid();
    const double mean = std::accumulate(img.x.values.begin(), img.x.values.end(), 0.0) /
                        static_cast<double>(img.x.size());
    for (double& v : img.x.values) v -= mean;
    img.x_hat = fft2(img.x);
    img.state = zero_coding_state(count, H, W);
    transform_maps(img.state.z, img.z_hat);
    img.objective = 0.5 * squared_norm(img.x.values);
  }

  TrainingMeta& meta = dict.meta;
  meta.corpus_ids = std::move(corpus_ids);
  meta.beta = cfg.beta;
  meta.iterations = cfg.outer_iterations;
  meta.objective_history.push_back(total_objective(images));

  DictionaryAdmm admm;
  for (const Grid& k : dict.kernels) {
    admm.g.push_back(pad_kernel(k, H, W));
    admm.h.emplace_back(H, W);
  }

  for (int outer = 0; outer < cfg.outer_iterations; ++outer) {
    // Sparse coding, one independent problem per image.
    const KernelBank bank(dict.kernels, H, W);
    std::vector<int> coding_its(images.size(), 0);
    std::vector<char> coding_ok(images.size(), 1);
    parallel_for(images.size(), cfg.jobs, [&](std::size_t j) {
      TrainingImage& img = images[j];
      const double before = image_objective(bank, img, img.state.z, img.z_hat, cfg.beta);
      CodingState trial = img.state;
      const CodingStats stats = sparse_code(bank, img.x_hat, cfg.beta, cfg.admm_rho,
                                            cfg.inner_iterations, cfg.inner_tolerance, trial);
      coding_its[j] = stats.iterations;
      coding_ok[j] = stats.converged;
      std::vector<Spectrum> trial_hat;
      transform_maps(trial.z, trial_hat);
      const double after = image_objective(bank, img, trial.z, trial_hat, cfg.beta);
      if (after <= before) {
        img.state = std::move(trial);
        img.z_hat = std::move(trial_hat);
        img.objective = after;
      } else {
        // Keep the previous maps; the duals still advance so the next
        // attempt does not repeat this one.
        img.state.u = std::move(trial.u);
        img.objective = before;
      }
    });
    meta.coding_iterations.push_back(*std::max_element(coding_its.begin(), coding_its.end()));
    for (char ok : coding_ok) meta.inner_converged = meta.inner_converged && ok;

    // Dictionary update with the maps fixed.
    const double before = total_objective(images);
    const std::vector<Grid> previous = dict.kernels;
    bool dict_ok = false;
    meta.dictionary_iterations.push_back(dictionary_step(images, size, cfg, admm, dict_ok));
    meta.inner_converged = meta.inner_converged && dict_ok;
    for (std::size_t k = 0; k < count; ++k) dict.kernels[k] = crop_kernel(admm.g[k], size);
    {
      const KernelBank updated(dict.kernels, H, W);
      std::vector<double> objective(images.size());
      parallel_for(images.size(), cfg.jobs, [&](std::size_t j) {
        objective[j] = image_objective(updated, images[j], images[j].state.z, images[j].z_hat, cfg.beta);
      });
      if (std::accumulate(objective.begin(), objective.end(), 0.0) <= before) {
        for (std::size_t j = 0; j < images.size(); ++j) images[j].objective = objective[j];
      } else {
        dict.kernels = previous;
        for (std::size_t k = 0; k < count; ++k) {
          admm.g[k] = pad_kernel(previous[k], H, W);
          std::fill(admm.h[k].values.begin(), admm.h[k].values.end(), 0.0);
        }
      }
    }

    const KernelBank current(dict.kernels, H, W);
    std::vector<Grid> revived = dict.kernels;
    if (revive_dead_atoms(images, current, revived, size) > 0) {
      for (std::size_t k = 0; k < count; ++k) {
        if (revived[k] == dict.kernels[k]) continue;
        dict.kernels[k] = revived[k];
        admm.g[k] = pad_kernel(revived[k], H, W);
        std::fill(admm.h[k].values.begin(), admm.h[k].values.end(), 0.0);
      }
    }
    meta.objective_history.push_back(total_objective(images));
  }
  validate(dict);
  return dict;
}

}  // namespace spi
