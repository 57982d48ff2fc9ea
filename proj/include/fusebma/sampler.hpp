#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "fusebma/marginal.hpp"
#include "fusebma/model_space.hpp"
#include "fusebma/rng.hpp"

namespace fusebma {

struct SamplerConfig {
  int iterations = 8000;
  int burn_in = 2000;
  int thin = 1;
  std::uint64_t seed = 0;
  ModelHyper hyper;
  double conc_a = 1.0;  // Dirichlet concentration A
  double conc_b = 1.0;  // Beta concentration B
  int step1_mc_samples = 512;  // t-expectation samples inside the indicator sweep
  int theta_scans = 10;        // latent-threshold scans per coefficient draw
  SlabKind slab = SlabKind::FusionPMOM;
  std::size_t cache_capacity = 200000;
};

/// One Gibbs iterate.
struct SamplerState {
  IndicatorVector delta;
  Eigen::VectorXd theta;  // length p_delta(delta)
  double sigma2 = 1.0;
  ChainParams trans;  // current omega/kappa draws; pi stays at the prior
};

struct ChainDiagnostics {
  Eigen::VectorXd rhat_theta;  // split-chain PSRF per expanded coordinate
  double rhat_sigma2 = 1.0;
};

struct ChainOutput {
  std::vector<IndicatorVector> deltas;           // stored post-burn-in states
  std::vector<Eigen::VectorXd> theta_full;       // expanded to length p
  std::vector<double> sigma2;
  std::map<std::vector<std::int8_t>, long> model_counts;
  ChainDiagnostics diagnostics;
  int p = 0;
  int iterations = 0;
  int burn_in = 0;
  int thin = 1;
};

/// One draw whose stationary law is proportional to
/// phi(theta; mu, Sigma) * Q_delta(theta): latent thresholds
/// lambda_j = sqrt(U(0, theta_j^2)), eta_j = sqrt(U(0, diff_j^2)) followed
/// by coordinate-wise truncated-normal scans over the complement of the
/// excluded intervals. `scans` latent/scan rounds are applied; when `init`
/// is null (or unusable) the walk starts from an unconstrained N(mu, Sigma)
/// draw.
Eigen::VectorXd sample_fusion_pmom_posterior(const Eigen::VectorXd& mu,
                                             const Eigen::MatrixXd& Sigma,
                                             const ModelStructure& st, Rng& rng,
                                             int scans = 10,
                                             const Eigen::VectorXd* init = nullptr);

/// Same draw parameterized by the precision matrix P = Sigma^{-1}.
Eigen::VectorXd sample_fusion_pmom_posterior_prec(const Eigen::VectorXd& mu,
                                                  const Eigen::MatrixXd& precision,
                                                  const ModelStructure& st,
                                                  Rng& rng, int scans,
                                                  const Eigen::VectorXd* init);

/// One draw from N(mean, sd^2) restricted to the complement of a union of
/// open intervals. `current` must lie in the support; it is returned
/// unchanged if every allowed interval has numerically zero mass.
double sample_truncated_normal_union(
    double mean, double sd, const std::vector<std::pair<double, double>>& excluded,
    double current, Rng& rng);

/// Collapsed indicator sweep j = p..1 (step 1). Candidate weights are
/// m(y | delta with position j set to x) times the chain-prior factors from
/// the current transition parameters; structurally forbidden candidates get
/// weight zero.
void update_indicators(SamplerState& state, const RegressionData& data,
                       const ChainPrior& prior, MarginalCache& cache, Rng& rng);

/// sigma^2 full conditional (step 3).
double update_sigma2(const SamplerState& state, const RegressionData& data,
                     const ModelHyper& hyper, SlabKind slab, Rng& rng);

/// omega/kappa full conditionals (steps 4-5).
void update_transition_params(SamplerState& state, const ChainPrior& prior,
                              Rng& rng);

/// Run the five-step collapsed Gibbs sampler; fully reproducible from
/// config.seed.
ChainOutput run_chain(const RegressionData& data, const ChainPrior& prior,
                      const SamplerConfig& config);

/// Split-chain potential scale reduction of one scalar draw sequence.
double split_rhat(const std::vector<double>& draws);

}  // namespace fusebma
