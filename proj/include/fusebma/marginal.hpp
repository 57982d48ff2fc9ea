#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <unordered_map>

#include "fusebma/model_space.hpp"

namespace fusebma {

/// Centered response and column-standardized design: mean(y) = 0,
/// mean(X.col(j)) = 0 and X.col(j).squaredNorm() = n for every column.
/// col_scale/col_mean record the applied affine map so coefficients can be
/// taken back to the raw column scale (theta_raw_j = col_scale_j * theta_j).
struct RegressionData {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::VectorXd col_scale;
  Eigen::VectorXd col_mean;
  double y_mean = 0.0;
  int n = 0;
  int p = 0;
};

/// Center y, center and rescale each column of X to squared norm n.
/// Throws on a zero-variance column, naming the column.
RegressionData standardize(const Eigen::VectorXd& y_raw,
                           const Eigen::MatrixXd& X_raw);

/// Inverse-gamma hyperparameters of the error variance and the slab scale
/// multiplier tau.
struct ModelHyper {
  double alpha = 1.0;
  double psi = 1.0;
  double tau = 1.0;
};

enum class SlabKind { FusionPMOM, NormalSlab };

/// Monte Carlo settings for the t-expectation inside the marginal likelihood.
struct McConfig {
  int n_samples = 2048;
  std::uint64_t seed = 0;
};

/// Per-model posterior building blocks:
///   A = X_d' X_d + I/tau,  beta_tilde = A^{-1} X_d' y,
///   R = y'y - beta_tilde' A beta_tilde,
///   nu = n + 2 p_delta + 2 |Lambda| + 2 alpha,  s2 = (R + 2 psi) / nu.
struct PosteriorQuantities {
  Eigen::MatrixXd A;
  Eigen::MatrixXd chol_L;  // lower Cholesky factor of A
  Eigen::VectorXd beta_tilde;
  double R = 0.0;
  double nu = 0.0;
  double s2 = 0.0;
  double log_det_A = 0.0;
  int p_delta = 0;
  int lambda_size = 0;
  int n = 0;
};

PosteriorQuantities posterior_quantities(const RegressionData& data,
                                         const ModelStructure& st,
                                         const ModelHyper& hyper);

inline PosteriorQuantities posterior_quantities(const RegressionData& data,
                                                const IndicatorVector& delta,
                                                const ModelHyper& hyper) {
  return posterior_quantities(data, model_structure(delta), hyper);
}

struct LogEstimate {
  double value = 0.0;
  double se = 0.0;
};

/// log E_t[Q_delta(theta)] with theta drawn from the multivariate t with
/// mean beta_tilde, scale s2 * A^{-1} and nu degrees of freedom; plain Monte
/// Carlo with antithetic Gaussian pairs, accumulated by streaming
/// log-sum-exp. Exact (0, 0) for the null model.
LogEstimate estimate_log_EtQ(const ModelStructure& st,
                             const PosteriorQuantities& pq, const McConfig& mc);

/// log m(y | delta). For the fusion slab this is the closed form times the
/// Monte Carlo t-expectation; for the normal-slab ablation it is fully
/// closed form (se = 0). Deterministic given mc.seed.
LogEstimate log_marginal_likelihood(const RegressionData& data,
                                    const ModelStructure& st,
                                    const ModelHyper& hyper, const McConfig& mc,
                                    SlabKind slab = SlabKind::FusionPMOM);

inline LogEstimate log_marginal_likelihood(const RegressionData& data,
                                           const IndicatorVector& delta,
                                           const ModelHyper& hyper,
                                           const McConfig& mc,
                                           SlabKind slab = SlabKind::FusionPMOM) {
  return log_marginal_likelihood(data, model_structure(delta), hyper, mc, slab);
}

/// Memo table for per-model marginal likelihoods within one chain run.
/// Each model's Monte Carlo stream is seeded by hashing the model code into
/// the root seed, so a cached value and a recomputed one are bit-identical
/// and the cache can be dropped at any time (it is cleared wholesale when
/// the entry cap is hit).
class MarginalCache {
 public:
  MarginalCache(const RegressionData& data, ModelHyper hyper, int mc_samples,
                std::uint64_t root_seed, SlabKind slab,
                std::size_t capacity = 200000)
      : data_(&data),
        hyper_(hyper),
        mc_samples_(mc_samples),
        root_seed_(root_seed),
        slab_(slab),
        capacity_(capacity) {}

  LogEstimate get(const IndicatorVector& delta);

  std::size_t size() const { return map_.size(); }

 private:
  const RegressionData* data_;
  ModelHyper hyper_;
  int mc_samples_;
  std::uint64_t root_seed_;
  SlabKind slab_;
  std::size_t capacity_;
  std::unordered_map<std::string, LogEstimate> map_;
};

}  // namespace fusebma
