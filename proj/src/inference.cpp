#include "fusebma/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fusebma {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double weighted_quantile(std::vector<std::pair<double, double>>& vw, double q) {
  if (vw.empty()) return 0.0;
  std::sort(vw.begin(), vw.end());
  double total = 0.0;
  for (const auto& e : vw) total += e.second;
  double target = q * total;
  double acc = 0.0;
  for (const auto& e : vw) {
    acc += e.second;
    if (acc >= target) return e.first;
  }
  return vw.back().first;
}

}  // namespace

PosteriorSummary summarize(const ChainOutput& chain, double ci_level) {
  if (chain.theta_full.empty()) throw std::invalid_argument("summarize: empty chain");
  PosteriorSummary s;
  s.ci_level = ci_level;
  const double total = static_cast<double>(chain.theta_full.size());
  long best_count = -1;
  for (const auto& [key, count] : chain.model_counts) {
    s.model_probs[key] = static_cast<double>(count) / total;
    if (count > best_count) {
      best_count = count;
      s.map_model = IndicatorVector(key);
    }
  }
  s.theta_mean = Eigen::VectorXd::Zero(chain.p);
  for (const auto& draw : chain.theta_full) s.theta_mean += draw;
  s.theta_mean /= total;

  s.theta_ci.resize(chain.p, 2);
  std::vector<double> coord(chain.theta_full.size());
  double lo_q = 0.5 * (1.0 - ci_level), hi_q = 1.0 - lo_q;
  for (int j = 0; j < chain.p; ++j) {
    for (std::size_t i = 0; i < chain.theta_full.size(); ++i)
      coord[i] = chain.theta_full[i][j];
    std::sort(coord.begin(), coord.end());
    s.theta_ci(j, 0) = quantile_sorted(coord, lo_q);
    s.theta_ci(j, 1) = quantile_sorted(coord, hi_q);
  }
  return s;
}

std::vector<EnumeratedModel> enumerate_posterior(const RegressionData& data,
                                                 const ExactPosteriorConfig& config) {
  std::vector<IndicatorVector> models = enumerate_models(data.p, config.cap);
  ChainPrior prior = uniform_chain_prior(data.p);
  std::vector<EnumeratedModel> out(models.size());
  std::vector<double> log_post(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    McConfig mc = config.mc;
    mc.seed = derive_seed(config.seed,
                          fnv1a(models[k].entries.data(), models[k].entries.size()));
    out[k].delta = models[k];
    out[k].log_marginal =
        log_marginal_likelihood(data, models[k], config.hyper, mc, config.slab).value;
    out[k].log_prior = log_prior_prob(models[k], prior);
    log_post[k] = out[k].log_marginal + out[k].log_prior;
  }
  double m = *std::max_element(log_post.begin(), log_post.end());
  double z = 0.0;
  for (double lp : log_post) z += std::exp(lp - m);
  for (std::size_t k = 0; k < models.size(); ++k)
    out[k].posterior_prob = std::exp(log_post[k] - m) / z;
  return out;
}

namespace {

// short (theta, sigma2) Gibbs run with delta fixed; returns expanded draws
struct ConditionalDraws {
  std::vector<Eigen::VectorXd> theta_full;
  Eigen::VectorXd mean;
};

ConditionalDraws conditional_chain(const RegressionData& data,
                                   const ModelStructure& st,
                                   const ExactPosteriorConfig& config,
                                   std::uint64_t seed) {
  ConditionalDraws out;
  Rng rng(seed);
  const int d = st.p_delta;
  const int keep = config.conditional_draws - config.conditional_burn;
  out.theta_full.reserve(static_cast<std::size_t>(std::max(keep, 0)));
  out.mean = Eigen::VectorXd::Zero(data.p);
  if (d == 0) {
    // null model: theta is empty, draws are all-zero vectors
    for (int k = 0; k < keep; ++k)
      out.theta_full.push_back(Eigen::VectorXd::Zero(data.p));
    return out;
  }
  PosteriorQuantities pq = posterior_quantities(data, st, config.hyper);
  Eigen::MatrixXd Xd = collapse_design(data.X, st);
  Eigen::MatrixXd G = Xd.transpose() * Xd;
  Eigen::VectorXd Xty = Xd.transpose() * data.y;
  double yty = data.y.squaredNorm();

  double sigma2 = pq.s2;
  Eigen::VectorXd theta(d);
  for (int k = 0; k < config.conditional_draws; ++k) {
    if (config.slab == SlabKind::FusionPMOM) {
      Eigen::MatrixXd precision = pq.A / sigma2;
      const Eigen::VectorXd* init = (k == 0) ? nullptr : &theta;
      theta = sample_fusion_pmom_posterior_prec(pq.beta_tilde, precision, st, rng,
                                                config.theta_scans, init);
    } else {
      Eigen::VectorXd z(d);
      for (int i = 0; i < d; ++i) z[i] = rng.normal();
      theta = pq.beta_tilde +
              std::sqrt(sigma2) *
                  pq.chol_L.transpose().triangularView<Eigen::Upper>().solve(z);
    }
    double rss = std::max(0.0, yty - 2.0 * theta.dot(Xty) + theta.dot(G * theta));
    double shape = (config.slab == SlabKind::FusionPMOM)
                       ? config.hyper.alpha + 0.5 * (data.n + 3.0 * d) + st.lambda_size
                       : config.hyper.alpha + 0.5 * (data.n + d);
    double rate =
        config.hyper.psi + 0.5 * (rss + theta.squaredNorm() / config.hyper.tau);
    sigma2 = rng.inverse_gamma(shape, rate);
    if (k >= config.conditional_burn) {
      Eigen::VectorXd full = Eigen::VectorXd::Zero(data.p);
      for (int b = 0; b < d; ++b)
        for (int idx : st.blocks[static_cast<std::size_t>(b)]) full[idx] = theta[b];
      out.mean += full;
      out.theta_full.push_back(std::move(full));
    }
  }
  if (keep > 0) out.mean /= static_cast<double>(keep);
  return out;
}

}  // namespace

PosteriorSummary exact_posterior(const RegressionData& data,
                                 const ExactPosteriorConfig& config) {
  std::vector<EnumeratedModel> table = enumerate_posterior(data, config);
  PosteriorSummary s;
  s.ci_level = config.ci_level;
  s.theta_mean = Eigen::VectorXd::Zero(data.p);
  double best = -1.0;
  std::vector<std::vector<std::pair<double, double>>> pool(
      static_cast<std::size_t>(data.p));
  for (const auto& row : table) {
    s.model_probs[row.delta.entries] = row.posterior_prob;
    if (row.posterior_prob > best) {
      best = row.posterior_prob;
      s.map_model = row.delta;
    }
    if (row.posterior_prob < 1e-12) continue;  // negligible weight
    std::uint64_t seed = derive_seed(
        config.seed, fnv1a(row.delta.entries.data(), row.delta.entries.size()), 0xc0);
    ConditionalDraws draws =
        conditional_chain(data, model_structure(row.delta), config, seed);
    s.theta_mean += row.posterior_prob * draws.mean;
    double w = row.posterior_prob / static_cast<double>(draws.theta_full.size());
    for (const auto& full : draws.theta_full)
      for (int j = 0; j < data.p; ++j)
        pool[static_cast<std::size_t>(j)].emplace_back(full[j], w);
  }
  s.theta_ci.resize(data.p, 2);
  double lo_q = 0.5 * (1.0 - config.ci_level);
  for (int j = 0; j < data.p; ++j) {
    s.theta_ci(j, 0) = weighted_quantile(pool[static_cast<std::size_t>(j)], lo_q);
    s.theta_ci(j, 1) = weighted_quantile(pool[static_cast<std::size_t>(j)], 1.0 - lo_q);
  }
  return s;
}

MetricReport metrics(const PosteriorSummary& summary,
                     const Eigen::VectorXd& theta_star,
                     const Eigen::MatrixXd& Sigma) {
  const int p = static_cast<int>(theta_star.size());
  if (summary.theta_mean.size() != p || summary.map_model.size() != p)
    throw std::invalid_argument("metrics: dimension mismatch");
  if (Sigma.rows() != p || Sigma.cols() != p)
    throw std::invalid_argument("metrics: Sigma dimension mismatch");
  MetricReport r;
  r.p = p;
  Eigen::VectorXd err = summary.theta_mean - theta_star;
  r.mse = err.squaredNorm();
  r.pse = err.dot(Sigma * err);

  const IndicatorVector& map = summary.map_model;
  int denom = 0;
  for (int j = 0; j < p; ++j) {
    if (theta_star[j] == 0.0) {
      ++denom;
      if (map[j] == 0) ++r.n_selection;
    }
  }
  for (int j = 1; j < p; ++j) {
    if (theta_star[j] != 0.0 && theta_star[j] == theta_star[j - 1]) {
      ++denom;
      if (map[j] == 1) ++r.n_fusion;  // exact tie in the map model
    }
  }
  r.p_b_denominator = denom;
  r.p_b_paper = static_cast<double>(r.n_selection + r.n_fusion) / p;
  r.p_b_normalized =
      denom > 0 ? static_cast<double>(r.n_selection + r.n_fusion) / denom : 1.0;
  return r;
}

double total_variation(const std::map<std::vector<std::int8_t>, double>& p,
                       const std::map<std::vector<std::int8_t>, double>& q) {
  double acc = 0.0;
  auto it_p = p.begin();
  auto it_q = q.begin();
  while (it_p != p.end() || it_q != q.end()) {
    if (it_q == q.end() || (it_p != p.end() && it_p->first < it_q->first)) {
      acc += std::abs(it_p->second);
      ++it_p;
    } else if (it_p == p.end() || it_q->first < it_p->first) {
      acc += std::abs(it_q->second);
      ++it_q;
    } else {
      acc += std::abs(it_p->second - it_q->second);
      ++it_p;
      ++it_q;
    }
  }
  return 0.5 * acc;
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("ols_slope: need matching vectors of length >= 2");
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("ols_slope: degenerate grid");
  return sxy / sxx;
}

namespace {

void validate_rate_models(const IndicatorVector& true_delta,
                          const IndicatorVector& overfit_delta) {
  if (true_delta.size() != overfit_delta.size())
    throw std::invalid_argument("bf_rate_experiment: model dimensions differ");
  ModelStructure st_t = model_structure(true_delta);
  ModelStructure st_k = model_structure(overfit_delta);
  if (st_k.p_delta - st_t.p_delta != 1)
    throw std::invalid_argument("bf_rate_experiment: need p_k - p_t = 1");
  // supermodel check: every overfit block stays within one true block or
  // within the true zero set
  std::vector<int> owner(static_cast<std::size_t>(true_delta.size()), -1);
  for (std::size_t b = 0; b < st_t.blocks.size(); ++b)
    for (int idx : st_t.blocks[b]) owner[static_cast<std::size_t>(idx)] = static_cast<int>(b);
  for (const auto& block : st_k.blocks) {
    int first_owner = owner[static_cast<std::size_t>(block.front())];
    for (int idx : block)
      if (owner[static_cast<std::size_t>(idx)] != first_owner)
        throw std::invalid_argument(
            "bf_rate_experiment: overfit model does not contain the true model");
  }
  // every true-active column must stay active
  for (std::size_t j = 0; j < owner.size(); ++j)
    if (owner[j] >= 0 && overfit_delta[static_cast<int>(j)] == 0)
      throw std::invalid_argument(
          "bf_rate_experiment: overfit model drops a true coefficient");
}

}  // namespace

RateResult bf_rate_experiment(const RateConfig& config) {
  if (config.n_grid.size() < 4)
    throw std::invalid_argument("bf_rate_experiment: need at least 4 grid points");
  validate_rate_models(config.true_delta, config.overfit_delta);
  const int p = config.true_delta.size();

  Eigen::VectorXd theta_star = config.theta_star;
  if (theta_star.size() == 0) {
    theta_star = Eigen::VectorXd::Zero(p);
    ModelStructure st_t = model_structure(config.true_delta);
    for (std::size_t b = 0; b < st_t.blocks.size(); ++b)
      for (int idx : st_t.blocks[b])
        theta_star[idx] = 2.0 + static_cast<double>(b);
  }
  if (theta_star.size() != p)
    throw std::invalid_argument("bf_rate_experiment: theta_star length != p");

  // equicorrelated covariance factor
  Eigen::MatrixXd Sigma = Eigen::MatrixXd::Constant(p, p, config.rho);
  Sigma.diagonal().setOnes();
  Eigen::LLT<Eigen::MatrixXd> sig_llt(Sigma);
  if (sig_llt.info() != Eigen::Success)
    throw std::invalid_argument("bf_rate_experiment: equicorrelation matrix not SPD");
  Eigen::MatrixXd Lsig = sig_llt.matrixL();

  int zero_coord = -1, zero_diff = -1;
  for (int j = 0; j < p; ++j)
    if (theta_star[j] == 0.0 && zero_coord < 0) zero_coord = j;
  for (int j = 1; j < p; ++j)
    if (theta_star[j] - theta_star[j - 1] == 0.0 && zero_diff < 0) zero_diff = j;

  RateResult res;
  res.n_grid = config.n_grid;
  const std::size_t G = config.n_grid.size();
  res.log_bf_fusion.assign(G, std::vector<double>(static_cast<std::size_t>(config.replications)));
  res.log_bf_normal.assign(G, std::vector<double>(static_cast<std::size_t>(config.replications)));
  std::vector<std::vector<double>> abs_theta(G), abs_delta(G);

  for (std::size_t gi = 0; gi < G; ++gi) {
    int n = config.n_grid[gi];
    for (int r = 0; r < config.replications; ++r) {
      std::uint64_t rep_seed = derive_seed(config.seed, gi, static_cast<std::uint64_t>(r));
      Rng rng(derive_seed(rep_seed, 0xda7a));
      Eigen::MatrixXd X(n, p);
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd z(p);
        for (int j = 0; j < p; ++j) z[j] = rng.normal();
        X.row(i) = (Lsig * z).transpose();
      }
      Eigen::VectorXd y = X * theta_star;
      for (int i = 0; i < n; ++i) y[i] += config.sigma * rng.normal();
      RegressionData data = standardize(y, X);

      auto lm = [&](const IndicatorVector& delta, SlabKind slab, std::uint64_t tag) {
        McConfig mc = config.mc;
        mc.seed = derive_seed(rep_seed, tag,
                              fnv1a(delta.entries.data(), delta.entries.size()));
        return log_marginal_likelihood(data, delta, config.hyper, mc, slab).value;
      };
      res.log_bf_fusion[gi][static_cast<std::size_t>(r)] =
          lm(config.overfit_delta, SlabKind::FusionPMOM, 1) -
          lm(config.true_delta, SlabKind::FusionPMOM, 1);
      res.log_bf_normal[gi][static_cast<std::size_t>(r)] =
          lm(config.overfit_delta, SlabKind::NormalSlab, 2) -
          lm(config.true_delta, SlabKind::NormalSlab, 2);

      if (config.decay_slopes && (zero_coord >= 0 || zero_diff >= 1)) {
        ExactPosteriorConfig ec;
        ec.hyper = config.hyper;
        ec.mc = config.mc;
        ec.seed = derive_seed(rep_seed, 0xe8ac7);
        PosteriorSummary s = exact_posterior(data, ec);
        if (zero_coord >= 0)
          abs_theta[gi].push_back(std::abs(s.theta_mean[zero_coord]));
        if (zero_diff >= 1)
          abs_delta[gi].push_back(
              std::abs(s.theta_mean[zero_diff] - s.theta_mean[zero_diff - 1]));
      }
    }
  }

  std::vector<double> log_n(G);
  for (std::size_t gi = 0; gi < G; ++gi)
    log_n[gi] = std::log(static_cast<double>(config.n_grid[gi]));

  auto mean_of = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  res.mean_log_bf_fusion.resize(G);
  res.mean_log_bf_normal.resize(G);
  for (std::size_t gi = 0; gi < G; ++gi) {
    res.mean_log_bf_fusion[gi] = mean_of(res.log_bf_fusion[gi]);
    res.mean_log_bf_normal[gi] = mean_of(res.log_bf_normal[gi]);
  }
  res.slope_fusion = ols_slope(log_n, res.mean_log_bf_fusion);
  res.slope_normal = ols_slope(log_n, res.mean_log_bf_normal);

  if (config.decay_slopes && !abs_theta[0].empty()) {
    res.mean_abs_theta_zero.resize(G);
    std::vector<double> log_abs(G);
    for (std::size_t gi = 0; gi < G; ++gi) {
      res.mean_abs_theta_zero[gi] = mean_of(abs_theta[gi]);
      log_abs[gi] = std::log(res.mean_abs_theta_zero[gi]);
    }
    res.slope_theta_decay = ols_slope(log_n, log_abs);
  }
  if (config.decay_slopes && !abs_delta[0].empty()) {
    res.mean_abs_delta_zero.resize(G);
    std::vector<double> log_abs(G);
    for (std::size_t gi = 0; gi < G; ++gi) {
      res.mean_abs_delta_zero[gi] = mean_of(abs_delta[gi]);
      log_abs[gi] = std::log(res.mean_abs_delta_zero[gi]);
    }
    res.slope_delta_decay = ols_slope(log_n, log_abs);
  }

  // paired bootstrap over replications
  Rng boot_rng(derive_seed(config.seed, 0xb007));
  int steeper = 0;
  std::vector<double> mf(G), mn(G);
  for (int b = 0; b < config.bootstrap; ++b) {
    std::vector<int> idx(static_cast<std::size_t>(config.replications));
    for (int& v : idx)
      v = static_cast<int>(boot_rng.uniform() * config.replications);
    for (std::size_t gi = 0; gi < G; ++gi) {
      double sf = 0.0, sn = 0.0;
      for (int v : idx) {
        sf += res.log_bf_fusion[gi][static_cast<std::size_t>(v)];
        sn += res.log_bf_normal[gi][static_cast<std::size_t>(v)];
      }
      mf[gi] = sf / config.replications;
      mn[gi] = sn / config.replications;
    }
    if (ols_slope(log_n, mf) < ols_slope(log_n, mn)) ++steeper;
  }
  res.bootstrap_frac_fusion_steeper =
      config.bootstrap > 0 ? static_cast<double>(steeper) / config.bootstrap : 0.0;
  return res;
}

}  // namespace fusebma
