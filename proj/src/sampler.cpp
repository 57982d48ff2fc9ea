#include "fusebma/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fusebma {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool in_slab_support(const Eigen::VectorXd& theta, const ModelStructure& st) {
  for (int j = 0; j < st.p_delta; ++j)
    if (theta[j] == 0.0) return false;
  for (int j : st.lambda_set)
    if (theta[j] - theta[j - 1] == 0.0) return false;
  return true;
}
}  // namespace

double sample_truncated_normal_union(
    double mean, double sd, const std::vector<std::pair<double, double>>& excluded,
    double current, Rng& rng) {
  // merge overlapping exclusions
  std::vector<std::pair<double, double>> ex = excluded;
  std::sort(ex.begin(), ex.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& iv : ex) {
    if (!(iv.second > iv.first)) continue;
    if (!merged.empty() && iv.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, iv.second);
    else
      merged.push_back(iv);
  }
  // allowed closed intervals between exclusions, in standardized units
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> allowed;
  double lo = -inf;
  for (const auto& iv : merged) {
    allowed.emplace_back(lo, iv.first);
    lo = iv.second;
  }
  allowed.emplace_back(lo, inf);

  std::vector<double> w(allowed.size());
  double total = 0.0;
  for (std::size_t i = 0; i < allowed.size(); ++i) {
    double a = (allowed[i].first - mean) / sd;
    double b = (allowed[i].second - mean) / sd;
    w[i] = norm_interval_mass(a, b);
    total += w[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) return current;  // numeric underflow
  double u = rng.uniform() * total;
  std::size_t pick = allowed.size() - 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < allowed.size(); ++i) {
    acc += w[i];
    if (u <= acc) {
      pick = i;
      break;
    }
  }
  double a = (allowed[pick].first - mean) / sd;
  double b = (allowed[pick].second - mean) / sd;
  return mean + sd * sample_trunc_std_normal(a, b, rng);
}

Eigen::VectorXd sample_fusion_pmom_posterior_prec(const Eigen::VectorXd& mu,
                                                  const Eigen::MatrixXd& precision,
                                                  const ModelStructure& st,
                                                  Rng& rng, int scans,
                                                  const Eigen::VectorXd* init) {
  const int d = st.p_delta;
  if (mu.size() != d)
    throw std::invalid_argument("sample_fusion_pmom_posterior: mu length != p_delta");
  if (d == 0) return Eigen::VectorXd(0);
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("sample_fusion_pmom_posterior: precision not SPD");

  std::vector<char> linked(static_cast<std::size_t>(d), 0);
  for (int j : st.lambda_set) linked[static_cast<std::size_t>(j)] = 1;

  Eigen::VectorXd theta;
  if (init != nullptr && init->size() == d && in_slab_support(*init, st)) {
    theta = *init;
  } else {
    // unconstrained draw; exact zeros have probability zero but retry anyway
    Eigen::VectorXd z(d);
    for (int tries = 0; tries < 100; ++tries) {
      for (int k = 0; k < d; ++k) z[k] = rng.normal();
      theta = mu + llt.matrixU().solve(z);
      if (in_slab_support(theta, st)) break;
    }
  }

  std::vector<double> lambda(static_cast<std::size_t>(d));
  std::vector<double> eta(static_cast<std::size_t>(d), 0.0);
  std::vector<std::pair<double, double>> excluded;
  for (int scan = 0; scan < scans; ++scan) {
    for (int j = 0; j < d; ++j) {
      lambda[static_cast<std::size_t>(j)] =
          std::sqrt(rng.uniform() * theta[j] * theta[j]);
      if (linked[static_cast<std::size_t>(j)]) {
        double diff = theta[j] - theta[j - 1];
        eta[static_cast<std::size_t>(j)] = std::sqrt(rng.uniform() * diff * diff);
      }
    }
    for (int c = 0; c < d; ++c) {
      double pcc = precision(c, c);
      double r = precision.row(c).dot(theta - mu) - pcc * (theta[c] - mu[c]);
      double cond_mean = mu[c] - r / pcc;
      double cond_sd = std::sqrt(1.0 / pcc);
      excluded.clear();
      double lam = lambda[static_cast<std::size_t>(c)];
      excluded.emplace_back(-lam, lam);
      if (linked[static_cast<std::size_t>(c)]) {
        double e = eta[static_cast<std::size_t>(c)];
        excluded.emplace_back(theta[c - 1] - e, theta[c - 1] + e);
      }
      if (c + 1 < d && linked[static_cast<std::size_t>(c + 1)]) {
        double e = eta[static_cast<std::size_t>(c + 1)];
        excluded.emplace_back(theta[c + 1] - e, theta[c + 1] + e);
      }
      theta[c] =
          sample_truncated_normal_union(cond_mean, cond_sd, excluded, theta[c], rng);
    }
  }
  return theta;
}

Eigen::VectorXd sample_fusion_pmom_posterior(const Eigen::VectorXd& mu,
                                             const Eigen::MatrixXd& Sigma,
                                             const ModelStructure& st, Rng& rng,
                                             int scans,
                                             const Eigen::VectorXd* init) {
  if (st.p_delta == 0) return Eigen::VectorXd(0);
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("sample_fusion_pmom_posterior: Sigma not SPD");
  Eigen::MatrixXd precision =
      llt.solve(Eigen::MatrixXd::Identity(Sigma.rows(), Sigma.cols()));
  return sample_fusion_pmom_posterior_prec(mu, precision, st, rng, scans, init);
}

void update_indicators(SamplerState& state, const RegressionData& data,
                       const ChainPrior& prior, MarginalCache& cache, Rng& rng) {
  const int p = prior.p;
  if (data.p != p || state.delta.size() != p)
    throw std::invalid_argument("update_indicators: dimension mismatch");
  IndicatorVector cand = state.delta;
  for (int j = p; j >= 1; --j) {
    double lw[3];
    for (int xi = 0; xi < 3; ++xi) {
      int x = xi - 1;
      double left = (j == 1) ? state.trans.initial(x)
                             : state.trans.transition(j, state.delta[j - 2], x);
      double right =
          (j == p) ? 1.0 : state.trans.transition(j + 1, x, state.delta[j]);
      double factor = left * right;
      if (factor <= 0.0) {
        lw[xi] = kNegInf;
        continue;
      }
      cand.entries[static_cast<std::size_t>(j - 1)] = static_cast<std::int8_t>(x);
      lw[xi] = cache.get(cand).value + std::log(factor);
    }
    double m = std::max({lw[0], lw[1], lw[2]});
    if (m == kNegInf)
      throw std::logic_error("update_indicators: all candidate weights vanished");
    double w0 = std::exp(lw[0] - m);
    double w1 = std::exp(lw[1] - m);
    double w2 = std::exp(lw[2] - m);
    double u = rng.uniform() * (w0 + w1 + w2);
    int x = (u <= w0) ? -1 : (u <= w0 + w1 ? 0 : 1);
    state.delta.entries[static_cast<std::size_t>(j - 1)] =
        static_cast<std::int8_t>(x);
    cand.entries[static_cast<std::size_t>(j - 1)] =
        static_cast<std::int8_t>(x);
  }
}

double update_sigma2(const SamplerState& state, const RegressionData& data,
                     const ModelHyper& hyper, SlabKind slab, Rng& rng) {
  ModelStructure st = model_structure(state.delta);
  if (state.theta.size() != st.p_delta)
    throw std::invalid_argument("update_sigma2: theta inconsistent with delta");
  double rss;
  if (st.p_delta == 0) {
    rss = data.y.squaredNorm();
  } else {
    Eigen::MatrixXd Xd = collapse_design(data.X, st);
    rss = (data.y - Xd * state.theta).squaredNorm();
  }
  double shape, rate;
  double quad = state.theta.squaredNorm() / hyper.tau;
  if (slab == SlabKind::FusionPMOM) {
    shape = hyper.alpha + 0.5 * (data.n + 3.0 * st.p_delta) + st.lambda_size;
  } else {
    shape = hyper.alpha + 0.5 * (data.n + st.p_delta);
  }
  rate = hyper.psi + 0.5 * (rss + quad);
  return rng.inverse_gamma(shape, rate);
}

void update_transition_params(SamplerState& state, const ChainPrior& prior,
                              Rng& rng) {
  const double A = prior.conc_a;
  const double B = prior.conc_b;
  for (int j = 2; j <= prior.p; ++j) {
    std::size_t i = static_cast<std::size_t>(j - 2);
    const auto& a = prior.dirichlet_mean[i];
    const auto& cd = prior.beta_mean[i];
    int prev = state.delta[j - 2];
    int curr = state.delta[j - 1];
    std::vector<double> conc = {A * a[0], A * a[1], A * a[2]};
    double bc = B * cd[0], bd = B * cd[1];
    if (prev != 0) {
      conc[static_cast<std::size_t>(curr + 1)] += 1.0;
    } else {
      if (curr == -1) bc += 1.0;
      if (curr == 0) bd += 1.0;
    }
    std::vector<double> w = rng.dirichlet(conc);
    state.trans.omega[i] = {w[0], w[1], w[2]};
    double k = rng.beta(bc, bd);
    state.trans.kappa[i] = {k, 1.0 - k};
  }
}

double split_rhat(const std::vector<double>& draws) {
  std::size_t L = draws.size() / 2;
  if (L < 2) return 1.0;
  auto moments = [&](std::size_t lo) {
    double m = 0.0;
    for (std::size_t i = 0; i < L; ++i) m += draws[lo + i];
    m /= static_cast<double>(L);
    double v = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      double d = draws[lo + i] - m;
      v += d * d;
    }
    v /= static_cast<double>(L - 1);
    return std::make_pair(m, v);
  };
  auto [m1, v1] = moments(0);
  auto [m2, v2] = moments(draws.size() - L);
  double W = 0.5 * (v1 + v2);
  if (W <= 0.0) return 1.0;
  double g = 0.5 * (m1 + m2);
  double B = static_cast<double>(L) * ((m1 - g) * (m1 - g) + (m2 - g) * (m2 - g));
  double var_plus =
      (static_cast<double>(L - 1) / static_cast<double>(L)) * W + B / static_cast<double>(L);
  return std::sqrt(var_plus / W);
}

ChainOutput run_chain(const RegressionData& data, const ChainPrior& prior,
                      const SamplerConfig& config) {
  if (prior.p != data.p)
    throw std::invalid_argument("run_chain: prior dimension != data dimension");
  if (config.iterations <= config.burn_in || config.burn_in < 0)
    throw std::invalid_argument("run_chain: need iterations > burn_in >= 0");
  if (config.thin < 1) throw std::invalid_argument("run_chain: thin < 1");

  Rng rng(derive_seed(config.seed, 0x636861696eull));  // chain stream
  MarginalCache cache(data, config.hyper, config.step1_mc_samples,
                      derive_seed(config.seed, 0x6d617267ull), config.slab,
                      config.cache_capacity);

  SamplerState state;
  state.delta =
      IndicatorVector(std::vector<std::int8_t>(static_cast<std::size_t>(data.p), 0));
  state.theta.resize(0);
  state.sigma2 = std::max(data.y.squaredNorm() / data.n, 1e-12);
  state.trans = static_cast<const ChainParams&>(prior);

  ChainOutput out;
  out.p = data.p;
  out.iterations = config.iterations;
  out.burn_in = config.burn_in;
  out.thin = config.thin;

  for (int k = 0; k < config.iterations; ++k) {
    update_indicators(state, data, prior, cache, rng);
    ModelStructure st = model_structure(state.delta);
    PosteriorQuantities pq = posterior_quantities(data, st, config.hyper);
    if (st.p_delta == 0) {
      state.theta.resize(0);
    } else if (config.slab == SlabKind::FusionPMOM) {
      // precision of sigma2 * A^{-1} is A / sigma2
      Eigen::MatrixXd precision = pq.A / state.sigma2;
      state.theta = sample_fusion_pmom_posterior_prec(
          pq.beta_tilde, precision, st, rng, config.theta_scans, nullptr);
    } else {
      Eigen::VectorXd z(st.p_delta);
      for (int i = 0; i < st.p_delta; ++i) z[i] = rng.normal();
      state.theta =
          pq.beta_tilde + std::sqrt(state.sigma2) *
                              pq.chol_L.transpose().triangularView<Eigen::Upper>().solve(z);
    }
    state.sigma2 = update_sigma2(state, data, config.hyper, config.slab, rng);
    if (!std::isfinite(state.sigma2) || !state.theta.allFinite())
      throw std::runtime_error("run_chain: non-finite state at iteration " +
                               std::to_string(k));
    update_transition_params(state, prior, rng);

    if (k >= config.burn_in && (k - config.burn_in) % config.thin == 0) {
      Eigen::VectorXd full = Eigen::VectorXd::Zero(data.p);
      for (int b = 0; b < st.p_delta; ++b)
        for (int idx : st.blocks[static_cast<std::size_t>(b)]) full[idx] = state.theta[b];
      out.deltas.push_back(state.delta);
      out.theta_full.push_back(std::move(full));
      out.sigma2.push_back(state.sigma2);
      out.model_counts[state.delta.entries] += 1;
    }
  }

  // split-chain PSRF on sigma2 and each expanded coordinate
  out.diagnostics.rhat_sigma2 = split_rhat(out.sigma2);
  out.diagnostics.rhat_theta.resize(data.p);
  std::vector<double> coord(out.theta_full.size());
  for (int j = 0; j < data.p; ++j) {
    for (std::size_t i = 0; i < out.theta_full.size(); ++i)
      coord[i] = out.theta_full[i][j];
    out.diagnostics.rhat_theta[j] = split_rhat(coord);
  }
  return out;
}

}  // namespace fusebma
