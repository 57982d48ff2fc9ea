#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "fusebma/model_space.hpp"
#include "fusebma/rng.hpp"
#include "oracles.hpp"

using namespace fusebma;

TEST_CASE("admissibility rules") {
  CHECK_FALSE(is_admissible(IndicatorVector{0, 1}));
  CHECK(is_admissible(IndicatorVector{-1, 1, 1}));
  CHECK_FALSE(is_admissible(IndicatorVector{1, -1}));
  CHECK(is_admissible(IndicatorVector{0}));
  CHECK(is_admissible(IndicatorVector{-1}));
  CHECK(is_admissible(IndicatorVector{-1, 0, -1, 1}));
  CHECK_FALSE(is_admissible(IndicatorVector{-1, 0, 1}));
  CHECK_THROWS_AS(is_admissible(IndicatorVector{-1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(is_admissible(std::vector<std::int8_t>{}), std::invalid_argument);
}

TEST_CASE("indicator vector string round trip") {
  IndicatorVector d{-1, 1, 0};
  CHECK(d.str() == "-1,1,0");
  CHECK(IndicatorVector::parse("-1,1,0") == d);
  CHECK_THROWS_AS(IndicatorVector::parse("-1,2"), std::invalid_argument);
  CHECK_THROWS_AS(IndicatorVector::parse("tea"), std::exception);
}

TEST_CASE("enumeration matches the Fibonacci count and brute force") {
  auto m1 = enumerate_models(1);
  REQUIRE(m1.size() == 2);
  CHECK(m1[0] == IndicatorVector{-1});
  CHECK(m1[1] == IndicatorVector{0});

  auto m2 = enumerate_models(2);
  REQUIRE(m2.size() == 5);
  CHECK(m2[0] == IndicatorVector{-1, -1});
  CHECK(m2[1] == IndicatorVector{-1, 0});
  CHECK(m2[2] == IndicatorVector{-1, 1});
  CHECK(m2[3] == IndicatorVector{0, -1});
  CHECK(m2[4] == IndicatorVector{0, 0});

  CHECK(enumerate_models(3).size() == 13);

  for (int p = 1; p <= 10; ++p) {
    auto models = enumerate_models(p);
    auto brute = oracle::brute_force_models(p);
    CHECK(models.size() == static_cast<std::size_t>(fibonacci(2 * p + 1)));
    REQUIRE(models.size() == brute.size());
    std::set<std::vector<std::int8_t>> seen;
    for (const auto& m : models) seen.insert(m.entries);
    for (const auto& b : brute) CHECK(seen.count(b) == 1);
    // lexicographic order
    for (std::size_t k = 1; k < models.size(); ++k)
      CHECK(models[k - 1].entries < models[k].entries);
  }
}

TEST_CASE("enumeration cap produces a named size error") {
  CHECK_THROWS_AS(enumerate_models(17), std::length_error);
  CHECK_THROWS_AS(enumerate_models(5, 4), std::length_error);
  CHECK_NOTHROW(enumerate_models(5, 5));
}

TEST_CASE("model structure decomposition") {
  ModelStructure st = model_structure(IndicatorVector{-1, 1, -1});
  CHECK(st.blocks == std::vector<std::vector<int>>{{0, 1}, {2}});
  CHECK(st.lambda_set == std::vector<int>{1});
  CHECK(st.p_delta == 2);
  CHECK(st.lambda_size == 1);

  st = model_structure(IndicatorVector{-1, 0, -1});
  CHECK(st.blocks == std::vector<std::vector<int>>{{0}, {2}});
  CHECK(st.lambda_set.empty());

  st = model_structure(IndicatorVector{0, 0});
  CHECK(st.blocks.empty());
  CHECK(st.p_delta == 0);

  CHECK_THROWS_AS(model_structure(IndicatorVector{0, 1}), std::invalid_argument);
}

TEST_CASE("structure invariants over the enumerated space") {
  for (int p = 1; p <= 8; ++p) {
    auto models = enumerate_models(p);
    std::set<std::string> structures;
    for (const auto& delta : models) {
      ModelStructure st = model_structure(delta);
      // p_delta equals the number of -1 codes
      int minus = 0;
      std::set<int> covered;
      for (int j = 0; j < p; ++j)
        if (delta[j] == -1) ++minus;
      CHECK(st.p_delta == minus);
      CHECK(st.lambda_size <= std::max(0, st.p_delta - 1));
      for (const auto& block : st.blocks) {
        for (std::size_t k = 0; k < block.size(); ++k) {
          CHECK(covered.insert(block[k]).second);  // disjoint
          if (k > 0) CHECK(block[k] == block[k - 1] + 1);  // consecutive
        }
      }
      for (int j = 0; j < p; ++j)
        CHECK((delta[j] != 0) == (covered.count(j) == 1));
      for (int b : st.lambda_set)
        CHECK(st.blocks[static_cast<std::size_t>(b)].front() ==
              st.blocks[static_cast<std::size_t>(b - 1)].back() + 1);
      // injectivity: serialize (blocks, lambda) and require distinctness
      std::string key;
      for (const auto& block : st.blocks) {
        for (int j : block) key += std::to_string(j) + ",";
        key += ";";
      }
      key += "|";
      for (int b : st.lambda_set) key += std::to_string(b) + ",";
      CHECK(structures.insert(key).second);
      // block decomposition reconstructs the code
      CHECK(delta_from_blocks(st.blocks, p) == delta);
    }
    CHECK(structures.size() == models.size());
  }
}

TEST_CASE("uniform chain prior parameter values") {
  ChainPrior prior = uniform_chain_prior(2);
  CHECK(prior.pi[0] == doctest::Approx(3.0 / 5.0).epsilon(1e-15));
  CHECK(prior.pi[1] == doctest::Approx(2.0 / 5.0).epsilon(1e-15));
  CHECK(prior.pi[2] == 0.0);
  CHECK(prior.omega[0][0] == doctest::Approx(1.0 / 3.0));
  CHECK(prior.omega[0][1] == doctest::Approx(1.0 / 3.0));
  CHECK(prior.omega[0][2] == doctest::Approx(1.0 / 3.0));
  CHECK(prior.kappa[0][0] == doctest::Approx(0.5));
  CHECK(prior.kappa[0][1] == doctest::Approx(0.5));

  ChainPrior p1 = uniform_chain_prior(1);
  CHECK(p1.pi[0] == doctest::Approx(0.5));
  CHECK(p1.pi[1] == doctest::Approx(0.5));
  CHECK(p1.pi[2] == 0.0);

  // probability rows sum to one
  for (int p = 1; p <= 12; ++p) {
    ChainPrior pr = uniform_chain_prior(p);
    CHECK(pr.pi[0] + pr.pi[1] + pr.pi[2] == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& row : pr.omega)
      CHECK(row[0] + row[1] + row[2] == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& row : pr.kappa)
      CHECK(row[0] + row[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("log prior probability under the uniform chain") {
  ChainPrior prior2 = uniform_chain_prior(2);
  for (const auto& delta : enumerate_models(2))
    CHECK(log_prior_prob(delta, prior2) == doctest::Approx(std::log(0.2)).epsilon(1e-12));

  CHECK(log_prior_prob(IndicatorVector{0, 1}, prior2) ==
        -std::numeric_limits<double>::infinity());

  ChainPrior prior3 = uniform_chain_prior(3);
  for (const auto& delta : enumerate_models(3))
    CHECK(log_prior_prob(delta, prior3) ==
          doctest::Approx(std::log(1.0 / 13.0)).epsilon(1e-12));

  CHECK_THROWS_AS(log_prior_prob(IndicatorVector{0, 0}, prior3),
                  std::invalid_argument);
}

TEST_CASE("chain prior is exactly uniform in rational arithmetic") {
  for (int p = 1; p <= 10; ++p) {
    Rational expected(1, fibonacci(2 * p + 1));
    for (const auto& delta : enumerate_models(p))
      CHECK(chain_prior_prob_exact(delta) == expected);
  }
}

TEST_CASE("no independent componentwise prior is uniform for p = 2") {
  // grid step 1e-3: delta_1 over {-1,0}, delta_2 over the full 2-simplex
  const int steps = 1000;
  const double h = 1.0 / steps;
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    double q2m = i * h;  // P(delta_2 = -1)
    for (int k = 0; k + i <= steps; ++k) {
      double q20 = k * h;
      double q21 = 1.0 - q2m - q20;
      double s = q20 + q21;
      for (int a = 0; a <= steps; ++a) {
        double q10 = a * h;
        double q1m = 1.0 - q10;
        double pr[5] = {q10 * s, q1m * q20, q10 * q2m, q1m * q21, q1m * q2m};
        double lo = pr[0], hi = pr[0];
        for (int t = 1; t < 5; ++t) {
          lo = std::min(lo, pr[t]);
          hi = std::max(hi, pr[t]);
        }
        if (lo > 0.0) min_ratio = std::min(min_ratio, hi / lo);
      }
    }
  }
  CHECK(min_ratio > 1.0 + 1e-6);
}

TEST_CASE("collapse_design sums fused columns") {
  Eigen::MatrixXd X(3, 2);
  X << 1, 2, 3, 4, 5, 6;
  ModelStructure st = model_structure(IndicatorVector{-1, 1});
  Eigen::MatrixXd Xd = collapse_design(X, st);
  REQUIRE(Xd.cols() == 1);
  CHECK(Xd.col(0).isApprox(X.col(0) + X.col(1)));

  ModelStructure null_st = model_structure(IndicatorVector{0, 0});
  Eigen::MatrixXd X0 = collapse_design(X, null_st);
  CHECK(X0.cols() == 0);
  CHECK(X0.rows() == 3);
}

TEST_CASE("collapse_design preserves predictions for block-constant theta") {
  Rng rng(20240811);
  Eigen::MatrixXd X(5, 4);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j) X(i, j) = rng.normal();
  IndicatorVector delta{-1, 1, 0, -1};
  ModelStructure st = model_structure(delta);
  double a = 1.7, b = -0.4;
  Eigen::VectorXd theta_full(4), theta_d(2);
  theta_full << a, a, 0.0, b;
  theta_d << a, b;
  Eigen::MatrixXd Xd = collapse_design(X, st);
  CHECK((X * theta_full - Xd * theta_d).norm() <= 1e-12);

  // property over random structures with random block-constant coefficients
  for (int trial = 0; trial < 30; ++trial) {
    int p = 3 + static_cast<int>(rng.uniform() * 6);
    auto models = enumerate_models(p);
    const IndicatorVector& d =
        models[static_cast<std::size_t>(rng.uniform() * models.size())];
    ModelStructure s = model_structure(d);
    Eigen::MatrixXd Xr(6, p);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < p; ++j) Xr(i, j) = rng.normal();
    Eigen::VectorXd tfull = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd td(s.p_delta);
    for (int bidx = 0; bidx < s.p_delta; ++bidx) {
      double v = rng.normal();
      td[bidx] = v;
      for (int j : s.blocks[static_cast<std::size_t>(bidx)]) tfull[j] = v;
    }
    Eigen::MatrixXd Xc = collapse_design(Xr, s);
    CHECK((Xr * tfull - Xc * td).norm() <= 1e-11 * (1.0 + tfull.norm()));
  }
}
