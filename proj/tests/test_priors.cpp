#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fusebma/chain_moments.hpp"
#include "fusebma/nonlocal.hpp"
#include "fusebma/rng.hpp"
#include "oracles.hpp"

using namespace fusebma;

TEST_CASE("chain moment recursion values") {
  CHECK(phi_chain_moment(1) == 1.0);
  CHECK(phi_chain_moment(2) == 6.0);
  CHECK(phi_chain_moment(3) == 42.0);
  CHECK_THROWS_AS(phi_chain_moment(0), std::invalid_argument);
  CHECK_THROWS_AS(phi_chain_moment(65), std::length_error);
  ChainMomentTable t = chain_moment_table(4);
  CHECK(t.psi[0] == 3.0);
  CHECK(t.psi[1] == 24.0);  // 15*1 + 3*3
}

TEST_CASE("recursion agrees with the closed form up to k = 30") {
  for (int k = 1; k <= 30; ++k) {
    double rec = phi_chain_moment(k);
    double closed = phi_closed_form(k);
    CHECK(std::abs(rec - closed) <= 1e-10 * closed);
  }
}

TEST_CASE("Phi_2 matches a direct Monte Carlo moment") {
  Rng rng(71);
  const int n = 10'000'000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double z1 = rng.normal(), z2 = rng.normal();
    double q = z1 * z1 * z2 * z2 * (z2 - z1) * (z2 - z1);
    s += q;
    s2 += q * q;
  }
  double mean = s / n;
  double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - 6.0) <= 3.0 * se);
}

TEST_CASE("chain moment factorizes over runs for random structures") {
  Rng rng(1234);
  int tested = 0;
  int p = 8;
  auto models = enumerate_models(p);
  while (tested < 10) {
    const IndicatorVector& delta =
        models[static_cast<std::size_t>(rng.uniform() * models.size())];
    ModelStructure st = model_structure(delta);
    if (st.p_delta < 1 || st.p_delta > 6) continue;
    // runs past length 4 give Q a coefficient of variation in the hundreds;
    // plain Monte Carlo cannot resolve those at this sample size
    bool short_runs = true;
    for (int len : run_lengths(st))
      if (len > 4) short_runs = false;
    if (!short_runs) continue;
    ++tested;
    double target = 1.0;
    for (int len : run_lengths(st)) target *= phi_chain_moment(len);
    // batch means keep the standard error honest under the heavy-tailed Q
    const int n_batches = 200, batch_len = 10000;
    std::vector<double> bm(n_batches);
    Eigen::VectorXd z(st.p_delta);
    for (int b = 0; b < n_batches; ++b) {
      double s = 0.0;
      for (int i = 0; i < batch_len; ++i) {
        for (int k = 0; k < st.p_delta; ++k) z[k] = rng.normal();
        double q = 1.0;
        for (int k = 0; k < st.p_delta; ++k) q *= z[k] * z[k];
        for (int lb : st.lambda_set) {
          double d = z[lb] - z[lb - 1];
          q *= d * d;
        }
        s += q;
      }
      bm[static_cast<std::size_t>(b)] = s / batch_len;
    }
    double mean = oracle::mean(bm);
    double se = oracle::sample_sd(bm) / std::sqrt(static_cast<double>(n_batches));
    CHECK(std::abs(mean - target) <= 3.0 * se);
  }
}

TEST_CASE("normalizing constant decomposes over runs") {
  // full chain of length 4
  ModelStructure full = model_structure(IndicatorVector{-1, -1, -1, -1});
  CHECK(log_normalizing_constant(full) ==
        doctest::Approx(-std::log(phi_chain_moment(4))).epsilon(1e-14));
  // isolated blocks: Phi_1 = 1 each
  ModelStructure iso = model_structure(IndicatorVector{-1, 0, -1, 0, -1});
  CHECK(log_normalizing_constant(iso) == 0.0);
  // runs of lengths 2 and 1
  ModelStructure mixed = model_structure(IndicatorVector{-1, -1, 0, -1});
  CHECK(run_lengths(mixed) == std::vector<int>{2, 1});
  CHECK(log_normalizing_constant(mixed) ==
        doctest::Approx(-std::log(6.0)).epsilon(1e-14));
  // null model
  CHECK(log_normalizing_constant(model_structure(IndicatorVector{0, 0})) == 0.0);
}

TEST_CASE("fusion density vanishes on the spike sets and matches pMOM at p=1") {
  ModelStructure st1 = model_structure(IndicatorVector{-1});
  SlabHyper hyper;  // tau = sigma2 = 1
  Eigen::VectorXd zero1(1);
  zero1 << 0.0;
  CHECK(log_fusion_pmom_density(zero1, st1, hyper) ==
        -std::numeric_limits<double>::infinity());

  Eigen::VectorXd one(1);
  one << 1.0;
  double val = std::exp(log_fusion_pmom_density(one, st1, hyper));
  CHECK(val == doctest::Approx(0.2420).epsilon(2e-4));
  CHECK(val == doctest::Approx(reference_density1(ReferencePrior::pMOM, 1.0, 1.0))
                   .epsilon(1e-12));

  ModelStructure st2 = model_structure(IndicatorVector{-1, -1});
  Eigen::VectorXd tied(2);
  tied << 1.3, 1.3;
  CHECK(log_fusion_pmom_density(tied, st2, hyper) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("fusion density integrates to one for p_delta <= 2") {
  SlabHyper hyper;
  hyper.sigma2 = 1.4;
  ModelStructure st1 = model_structure(IndicatorVector{-1});
  auto f1 = [&](double t) {
    Eigen::VectorXd v(1);
    v << t;
    double lf = log_fusion_pmom_density(v, st1, hyper);
    return std::isfinite(lf) ? std::exp(lf) : 0.0;
  };
  double sd = std::sqrt(hyper.sigma2);
  CHECK(oracle::simpson(f1, -14.0 * sd, 14.0 * sd, 4001) ==
        doctest::Approx(1.0).epsilon(1e-6));

  ModelStructure st2 = model_structure(IndicatorVector{-1, -1});
  auto f2 = [&](double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    double lf = log_fusion_pmom_density(v, st2, hyper);
    return std::isfinite(lf) ? std::exp(lf) : 0.0;
  };
  CHECK(oracle::simpson2d(f2, -12.0 * sd, 12.0 * sd, -12.0 * sd, 12.0 * sd, 801) ==
        doctest::Approx(1.0).epsilon(1e-5));

  // unlinked two-block structure: product of two pMOM factors
  ModelStructure st2b = model_structure(IndicatorVector{-1, 0, -1});
  auto f2b = [&](double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    double lf = log_fusion_pmom_density(v, st2b, hyper);
    return std::isfinite(lf) ? std::exp(lf) : 0.0;
  };
  CHECK(oracle::simpson2d(f2b, -12.0 * sd, 12.0 * sd, -12.0 * sd, 12.0 * sd, 801) ==
        doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("scale equivariance pins the sigma exponent") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    auto models = enumerate_models(6);
    const IndicatorVector& delta =
        models[static_cast<std::size_t>(rng.uniform() * models.size())];
    ModelStructure st = model_structure(delta);
    if (st.p_delta == 0) continue;
    Eigen::VectorXd theta(st.p_delta);
    for (int k = 0; k < st.p_delta; ++k) theta[k] = rng.normal() + 0.1;
    SlabHyper h1;
    h1.tau = 0.7;
    h1.sigma2 = 1.9;
    for (double c : {0.5, 2.0, 7.0}) {
      SlabHyper h2 = h1;
      h2.sigma2 = c * c * h1.sigma2;
      double lhs = log_fusion_pmom_density(c * theta, st, h2);
      double rhs = log_fusion_pmom_density(theta, st, h1) - st.p_delta * std::log(c);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
  }
}

TEST_CASE("reference densities are normalized, even, and vanish at zero") {
  CHECK(reference_density1(ReferencePrior::pMOM, 0.0, 1.0) == 0.0);
  CHECK(reference_density1(ReferencePrior::piMOM, 0.0, 1.0) == 0.0);
  CHECK(reference_density1(ReferencePrior::peMOM, 0.0, 1.0) == 0.0);
  CHECK(reference_density1(ReferencePrior::pMOM, 1.0, 1.0) ==
        doctest::Approx(0.2420).epsilon(2e-4));

  // piMOM normalizer has the closed form sigma / sqrt(pi)
  for (double sigma2 : {0.5, 1.0, 2.3}) {
    double sigma = std::sqrt(sigma2);
    for (double t : {0.3, 1.0, -2.2}) {
      double expected =
          sigma / std::sqrt(M_PI) * std::exp(-sigma2 / (t * t)) / (t * t);
      CHECK(reference_density1(ReferencePrior::piMOM, t, sigma2) ==
            doctest::Approx(expected).epsilon(1e-7));
    }
  }
  // peMOM normalizer is exp(-sqrt(2)) independent of sigma2
  for (double sigma2 : {0.5, 1.0, 2.3}) {
    double t = 0.9;
    double kernel = std::exp(-sigma2 / (t * t)) *
                    std::exp(-0.5 * t * t / sigma2) /
                    std::sqrt(2.0 * M_PI * sigma2);
    double expected = kernel / std::exp(-std::sqrt(2.0));
    CHECK(reference_density1(ReferencePrior::peMOM, t, sigma2) ==
          doctest::Approx(expected).epsilon(1e-7));
  }

  for (double t : {0.17, 0.9, 3.4}) {
    for (auto which :
         {ReferencePrior::pMOM, ReferencePrior::piMOM, ReferencePrior::peMOM}) {
      CHECK(reference_density1(which, t, 1.0) ==
            doctest::Approx(reference_density1(which, -t, 1.0)).epsilon(1e-14));
    }
  }

  // total mass one by direct quadrature
  for (auto which :
       {ReferencePrior::pMOM, ReferencePrior::piMOM, ReferencePrior::peMOM}) {
    auto f = [&](double t) { return reference_density1(which, t, 1.0); };
    double mass = oracle::simpson(f, -50.0, 50.0, 20001);
    if (which == ReferencePrior::piMOM) {
      // heavy 1/t^2 tails: add the analytic tail beyond the box
      double z = std::sqrt(M_PI);  // kernel normalizer at sigma2 = 1
      mass += 2.0 / 50.0 / z;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
  }

  CHECK(reference_density(ReferencePrior::pMOM, Eigen::Vector2d(1.0, 1.0), 1.0) ==
        doctest::Approx(0.2420 * 0.2420).epsilon(4e-4));
  CHECK_THROWS_AS(reference_density1(ReferencePrior::pMOM, 1.0, -1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(reference_prior_from_name("cauchy"), std::invalid_argument);
}

TEST_CASE("density grid reproduces the comparison curves") {
  std::vector<double> grid = parse_grid_spec("-4:4:0.01");
  CHECK(grid.size() == 801);
  auto rows = density_grid(grid, 1.0);
  REQUIRE(rows.size() == 801);
  // value at zero: normal positive, nonlocal priors zero
  const auto& mid = rows[400];
  CHECK(mid.theta == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mid.normal == doctest::Approx(0.3989).epsilon(1e-4));
  CHECK(mid.pmom == 0.0);
  CHECK(mid.pimom == 0.0);
  CHECK(mid.pemom == 0.0);
  // symmetry across the grid
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& a = rows[i];
    const auto& b = rows[rows.size() - 1 - i];
    CHECK(a.pmom == doctest::Approx(b.pmom).epsilon(1e-12));
    CHECK(a.pimom == doctest::Approx(b.pimom).epsilon(1e-12));
    CHECK(a.pemom == doctest::Approx(b.pemom).epsilon(1e-12));
    CHECK(a.normal == doctest::Approx(b.normal).epsilon(1e-12));
  }
  CHECK_THROWS_AS(density_grid({}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid_spec("1:2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid_spec("2:1:0.1"), std::invalid_argument);
}
