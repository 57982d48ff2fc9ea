#include "fusebma/marginal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fusebma/chain_moments.hpp"
#include "fusebma/nonlocal.hpp"
#include "fusebma/rng.hpp"

namespace fusebma {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

RegressionData standardize(const Eigen::VectorXd& y_raw,
                           const Eigen::MatrixXd& X_raw) {
  const int n = static_cast<int>(X_raw.rows());
  const int p = static_cast<int>(X_raw.cols());
  if (y_raw.size() != n)
    throw std::invalid_argument("standardize: y and X row counts differ");
  if (n < 2) throw std::invalid_argument("standardize: need n >= 2");
  RegressionData d;
  d.n = n;
  d.p = p;
  d.y_mean = y_raw.mean();
  d.y = y_raw.array() - d.y_mean;
  d.X.resize(n, p);
  d.col_mean.resize(p);
  d.col_scale.resize(p);
  for (int j = 0; j < p; ++j) {
    double m = X_raw.col(j).mean();
    Eigen::VectorXd c = X_raw.col(j).array() - m;
    double sq = c.squaredNorm();
    if (sq <= 0.0)
      throw std::invalid_argument("standardize: column " + std::to_string(j) +
                                  " has zero variance");
    double s = std::sqrt(static_cast<double>(n) / sq);
    d.X.col(j) = c * s;
    d.col_mean[j] = m;
    d.col_scale[j] = s;
  }
  return d;
}

PosteriorQuantities posterior_quantities(const RegressionData& data,
                                         const ModelStructure& st,
                                         const ModelHyper& hyper) {
  if (!(hyper.alpha > 0.0) || !(hyper.psi > 0.0) || !(hyper.tau > 0.0))
    throw std::invalid_argument("posterior_quantities: hyperparameters must be positive");
  PosteriorQuantities pq;
  pq.p_delta = st.p_delta;
  pq.lambda_size = st.lambda_size;
  pq.n = data.n;
  pq.nu = data.n + 2.0 * st.p_delta + 2.0 * st.lambda_size + 2.0 * hyper.alpha;
  double yty = data.y.squaredNorm();
  if (st.p_delta == 0) {
    pq.A.resize(0, 0);
    pq.chol_L.resize(0, 0);
    pq.beta_tilde.resize(0);
    pq.R = yty;
    pq.log_det_A = 0.0;
  } else {
    Eigen::MatrixXd Xd = collapse_design(data.X, st);
    pq.A = Xd.transpose() * Xd;
    pq.A.diagonal().array() += 1.0 / hyper.tau;
    Eigen::LLT<Eigen::MatrixXd> llt(pq.A);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("posterior_quantities: A not positive definite");
    pq.chol_L = llt.matrixL();
    Eigen::VectorXd Xty = Xd.transpose() * data.y;
    pq.beta_tilde = llt.solve(Xty);
    pq.R = yty - Xty.dot(pq.beta_tilde);
    if (pq.R < 0.0) pq.R = 0.0;
    pq.log_det_A = 2.0 * pq.chol_L.diagonal().array().log().sum();
  }
  pq.s2 = (pq.R + 2.0 * hyper.psi) / pq.nu;
  return pq;
}

LogEstimate estimate_log_EtQ(const ModelStructure& st,
                             const PosteriorQuantities& pq, const McConfig& mc) {
  if (st.p_delta == 0) return {0.0, 0.0};
  if (mc.n_samples < 2)
    throw std::invalid_argument("estimate_log_EtQ: n_samples too small");
  if (!(pq.nu > 2.0)) throw std::invalid_argument("estimate_log_EtQ: nu <= 2");
  const int d = st.p_delta;
  const int n_pairs = mc.n_samples / 2;
  Rng rng(mc.seed);
  const double s = std::sqrt(pq.s2);

  // one antithetic pair per chi-square draw; values kept on the log scale
  std::vector<double> log_pair(static_cast<std::size_t>(n_pairs));
  Eigen::VectorXd z(d), x(d), theta(d);
  double max_lp = kNegInf;
  for (int i = 0; i < n_pairs; ++i) {
    for (int k = 0; k < d; ++k) z[k] = rng.normal();
    double w = rng.chi_squared(pq.nu);
    double scale = s * std::sqrt(pq.nu / w);
    // x ~ N(0, A^{-1}) from the Cholesky factor of A
    x = pq.chol_L.transpose().triangularView<Eigen::Upper>().solve(z);
    theta = pq.beta_tilde + scale * x;
    double lq1 = log_q_factor(theta, st);
    theta = pq.beta_tilde - scale * x;
    double lq2 = log_q_factor(theta, st);
    double lp;
    if (lq1 == kNegInf && lq2 == kNegInf)
      lp = kNegInf;
    else if (lq1 >= lq2)
      lp = lq1 + std::log1p(std::exp(lq2 - lq1)) - std::log(2.0);
    else
      lp = lq2 + std::log1p(std::exp(lq1 - lq2)) - std::log(2.0);
    log_pair[static_cast<std::size_t>(i)] = lp;
    if (lp > max_lp) max_lp = lp;
  }
  if (max_lp == kNegInf) return {kNegInf, 0.0};
  double sum = 0.0, sum2 = 0.0;
  for (double lp : log_pair) {
    double v = std::exp(lp - max_lp);
    sum += v;
    sum2 += v * v;
  }
  double mean = sum / n_pairs;
  double var = (sum2 - sum * sum / n_pairs) / std::max(1, n_pairs - 1);
  double log_e = max_lp + std::log(mean);
  // delta-method standard error of the log estimate
  double se = std::sqrt(std::max(0.0, var / n_pairs)) / mean;
  return {log_e, se};
}

LogEstimate log_marginal_likelihood(const RegressionData& data,
                                    const ModelStructure& st,
                                    const ModelHyper& hyper, const McConfig& mc,
                                    SlabKind slab) {
  PosteriorQuantities pq = posterior_quantities(data, st, hyper);
  const double n = data.n;
  const double p = st.p_delta;
  const double lam = st.lambda_size;
  if (slab == SlabKind::NormalSlab) {
    double lm = -0.5 * n * std::log(2.0 * M_PI) - 0.5 * p * std::log(hyper.tau) -
                0.5 * pq.log_det_A + hyper.alpha * std::log(hyper.psi) -
                std::lgamma(hyper.alpha) + std::lgamma(0.5 * n + hyper.alpha) -
                (0.5 * n + hyper.alpha) * std::log(0.5 * pq.R + hyper.psi);
    return {lm, 0.0};
  }
  LogEstimate etq = estimate_log_EtQ(st, pq, mc);
  double lm = log_normalizing_constant(st) -
              0.5 * (n + p) * std::log(2.0 * M_PI) -
              (1.5 * p + lam) * std::log(hyper.tau) +
              hyper.alpha * std::log(hyper.psi) - std::lgamma(hyper.alpha) +
              0.5 * (pq.nu + p) * std::log(2.0) + 0.5 * p * std::log(M_PI) -
              0.5 * pq.log_det_A - 0.5 * pq.nu * std::log(pq.nu * pq.s2) +
              std::lgamma(0.5 * pq.nu) + etq.value;
  return {lm, etq.se};
}

LogEstimate MarginalCache::get(const IndicatorVector& delta) {
  std::string key(delta.entries.begin(), delta.entries.end());
  auto it = map_.find(key);
  if (it != map_.end()) return it->second;
  McConfig mc;
  mc.n_samples = mc_samples_;
  mc.seed = derive_seed(root_seed_, fnv1a(key.data(), key.size()));
  LogEstimate est =
      log_marginal_likelihood(*data_, model_structure(delta), hyper_, mc, slab_);
  if (map_.size() >= capacity_) map_.clear();
  map_.emplace(std::move(key), est);
  return est;
}

}  // namespace fusebma
