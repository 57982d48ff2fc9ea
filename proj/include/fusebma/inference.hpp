#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "fusebma/marginal.hpp"
#include "fusebma/sampler.hpp"

namespace fusebma {

struct PosteriorSummary {
  std::map<std::vector<std::int8_t>, double> model_probs;
  Eigen::VectorXd theta_mean;  // length-p model-averaged posterior mean
  Eigen::MatrixXd theta_ci;    // p x 2 equal-tailed interval bounds
  IndicatorVector map_model;   // most visited model, ties broken lexicographically
  double ci_level = 0.95;
};

/// Model-averaged summary of a finished chain. Throws on an empty chain.
PosteriorSummary summarize(const ChainOutput& chain, double ci_level = 0.95);

/// Posterior over all admissible models by exact enumeration under the
/// uniform chain prior; per-model conditional means and pooled intervals
/// come from short per-model (theta, sigma2) Gibbs runs.
struct ExactPosteriorConfig {
  ModelHyper hyper;
  McConfig mc;                  // t-expectation samples per model
  SlabKind slab = SlabKind::FusionPMOM;
  std::uint64_t seed = 0;
  int cap = 16;                 // enumeration cap
  int conditional_draws = 600;  // per-model mini-chain length
  int conditional_burn = 100;
  int theta_scans = 4;
  double ci_level = 0.95;
};

PosteriorSummary exact_posterior(const RegressionData& data,
                                 const ExactPosteriorConfig& config);

/// Per-model enumeration row, used by the CLI export.
struct EnumeratedModel {
  IndicatorVector delta;
  double log_marginal = 0.0;
  double log_prior = 0.0;
  double posterior_prob = 0.0;
};

std::vector<EnumeratedModel> enumerate_posterior(const RegressionData& data,
                                                 const ExactPosteriorConfig& config);

struct MetricReport {
  double mse = 0.0;
  double pse = 0.0;
  double p_b_paper = 0.0;       // (N_selection + N_fusion) / p
  double p_b_normalized = 0.0;  // divided by the attainable maximum
  int n_selection = 0;
  int n_fusion = 0;
  int p_b_denominator = 0;  // attainable maximum of N_selection + N_fusion
  int p = 0;
};

/// MSE/PSE from the model-averaged mean; selection and fusion counts from
/// the most-visited model's exact zeros and ties. theta_mean must be on the
/// same scale as theta_star.
MetricReport metrics(const PosteriorSummary& summary,
                     const Eigen::VectorXd& theta_star,
                     const Eigen::MatrixXd& Sigma);

/// Total variation distance between two model-probability tables.
double total_variation(const std::map<std::vector<std::int8_t>, double>& p,
                       const std::map<std::vector<std::int8_t>, double>& q);

// ---------------------------------------------------------------------------
// Empirical Bayes-factor rate experiment.
// ---------------------------------------------------------------------------

struct RateConfig {
  std::vector<int> n_grid = {50, 100, 200, 400, 800};
  int replications = 50;
  std::uint64_t seed = 0;
  IndicatorVector true_delta = {-1, 0, 0};
  IndicatorVector overfit_delta = {-1, -1, 0};
  Eigen::VectorXd theta_star;  // defaults to (2, 0, 0) when empty
  double sigma = 1.0;
  double rho = 0.0;
  ModelHyper hyper;
  McConfig mc;
  int bootstrap = 1000;
  bool decay_slopes = true;  // also fit posterior-mean decay slopes
};

struct RateResult {
  std::vector<int> n_grid;
  std::vector<double> mean_log_bf_fusion;  // per grid point
  std::vector<double> mean_log_bf_normal;
  // replication-level values, indexed [n][rep]
  std::vector<std::vector<double>> log_bf_fusion;
  std::vector<std::vector<double>> log_bf_normal;
  double slope_fusion = 0.0;  // OLS slope of mean log BF on log n
  double slope_normal = 0.0;
  double bootstrap_frac_fusion_steeper = 0.0;
  // decay of |E(theta_i | y)| and |E(Delta_j | y)| for a truly-zero
  // coordinate / adjacent difference, fitted on log-log scale
  std::vector<double> mean_abs_theta_zero;
  std::vector<double> mean_abs_delta_zero;
  double slope_theta_decay = 0.0;
  double slope_delta_decay = 0.0;
};

/// For each n: average log BF of the one-extra-parameter overfit model
/// against the true model across seeded replications, under both the fusion
/// slab and the normal-slab ablation on identical data; OLS slopes against
/// log n and a paired bootstrap comparison of the two slopes.
RateResult bf_rate_experiment(const RateConfig& config);

/// OLS slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fusebma
