#include "fusebma/model_space.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fusebma {

std::string IndicatorVector::str() const {
  std::string out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(static_cast<int>(entries[i]));
  }
  return out;
}

IndicatorVector IndicatorVector::parse(const std::string& text) {
  IndicatorVector delta;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t pos = 0;
    int v = std::stoi(tok, &pos);
    while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
    if (pos != tok.size() || v < -1 || v > 1)
      throw std::invalid_argument("IndicatorVector: bad code '" + tok + "'");
    delta.entries.push_back(static_cast<std::int8_t>(v));
  }
  if (delta.entries.empty())
    throw std::invalid_argument("IndicatorVector: empty code string");
  return delta;
}

bool is_admissible(const std::vector<std::int8_t>& entries) {
  if (entries.empty()) throw std::invalid_argument("is_admissible: empty vector");
  for (std::int8_t v : entries)
    if (v < -1 || v > 1)
      throw std::invalid_argument("is_admissible: code outside {-1,0,1}");
  if (entries[0] == 1) return false;
  for (std::size_t j = 1; j < entries.size(); ++j)
    if (entries[j - 1] == 0 && entries[j] == 1) return false;
  return true;
}

std::vector<IndicatorVector> enumerate_models(int p, int cap) {
  if (p < 1) throw std::invalid_argument("enumerate_models: p < 1");
  if (p > cap)
    throw std::length_error("enumerate_models: p = " + std::to_string(p) +
                            " exceeds enumeration cap " + std::to_string(cap));
  std::vector<IndicatorVector> out;
  out.reserve(static_cast<std::size_t>(fibonacci(2 * p + 1)));
  std::vector<std::int8_t> cur(static_cast<std::size_t>(p));
  // depth-first in code order -1 < 0 < 1 gives lexicographic output
  auto rec = [&](auto&& self, int j) -> void {
    if (j == p) {
      out.emplace_back(cur);
      return;
    }
    for (std::int8_t v : {std::int8_t(-1), std::int8_t(0), std::int8_t(1)}) {
      if (j == 0 && v == 1) continue;
      if (j > 0 && cur[static_cast<std::size_t>(j - 1)] == 0 && v == 1) continue;
      cur[static_cast<std::size_t>(j)] = v;
      self(self, j + 1);
    }
  };
  rec(rec, 0);
  return out;
}

ModelStructure model_structure(const IndicatorVector& delta) {
  if (!is_admissible(delta))
    throw std::invalid_argument("model_structure: inadmissible indicator vector");
  ModelStructure st;
  for (int j = 0; j < delta.size(); ++j) {
    if (delta[j] == -1) {
      st.blocks.push_back({j});
    } else if (delta[j] == 1) {
      st.blocks.back().push_back(j);
    }
  }
  st.p_delta = static_cast<int>(st.blocks.size());
  for (int b = 1; b < st.p_delta; ++b) {
    if (st.blocks[static_cast<std::size_t>(b)].front() ==
        st.blocks[static_cast<std::size_t>(b - 1)].back() + 1)
      st.lambda_set.push_back(b);
  }
  st.lambda_size = static_cast<int>(st.lambda_set.size());
  return st;
}

IndicatorVector delta_from_blocks(const std::vector<std::vector<int>>& blocks, int p) {
  std::vector<std::int8_t> e(static_cast<std::size_t>(p), 0);
  for (const auto& block : blocks) {
    for (std::size_t k = 0; k < block.size(); ++k)
      e[static_cast<std::size_t>(block[k])] = (k == 0) ? std::int8_t(-1) : std::int8_t(1);
  }
  return IndicatorVector(std::move(e));
}

Eigen::MatrixXd collapse_design(const Eigen::MatrixXd& X, const ModelStructure& st) {
  Eigen::MatrixXd out(X.rows(), st.p_delta);
  for (int b = 0; b < st.p_delta; ++b) {
    const auto& block = st.blocks[static_cast<std::size_t>(b)];
    if (block.empty()) throw std::invalid_argument("collapse_design: empty block");
    Eigen::VectorXd col = Eigen::VectorXd::Zero(X.rows());
    for (int j : block) {
      if (j < 0 || j >= X.cols())
        throw std::invalid_argument("collapse_design: block index outside design");
      col += X.col(j);
    }
    out.col(b) = col;
  }
  return out;
}

double ChainParams::transition(int j, int from, int to) const {
  const auto& ow = omega[static_cast<std::size_t>(j - 2)];
  const auto& kp = kappa[static_cast<std::size_t>(j - 2)];
  if (from == 0) {
    if (to == -1) return kp[0];
    if (to == 0) return kp[1];
    return 0.0;  // K_j(0,1) = 0, structural
  }
  return ow[static_cast<std::size_t>(to + 1)];
}

ChainPrior uniform_chain_prior(int p) {
  if (p < 1) throw std::invalid_argument("uniform_chain_prior: p < 1");
  ChainPrior prior;
  prior.p = p;
  double f2p1 = static_cast<double>(fibonacci(2 * p + 1));
  prior.pi = {static_cast<double>(fibonacci(2 * p)) / f2p1,
              static_cast<double>(fibonacci(2 * p - 1)) / f2p1,
              0.0};
  prior.omega.resize(static_cast<std::size_t>(p - 1));
  prior.kappa.resize(static_cast<std::size_t>(p - 1));
  for (int j = 2; j <= p; ++j) {
    int r = p - j + 1;
    double f2r = static_cast<double>(fibonacci(2 * r));
    double f2rm1 = static_cast<double>(fibonacci(2 * r - 1));
    double f2rp1 = static_cast<double>(fibonacci(2 * r + 1));
    double f2rp2 = static_cast<double>(fibonacci(2 * r + 2));
    prior.omega[static_cast<std::size_t>(j - 2)] = {f2r / f2rp2, f2rm1 / f2rp2,
                                                    f2r / f2rp2};
    prior.kappa[static_cast<std::size_t>(j - 2)] = {f2r / f2rp1, f2rm1 / f2rp1};
  }
  prior.dirichlet_mean = prior.omega;
  prior.beta_mean = prior.kappa;
  prior.conc_a = 1.0;
  prior.conc_b = 1.0;
  return prior;
}

double log_prior_prob(const IndicatorVector& delta, const ChainParams& prior) {
  if (delta.size() != prior.p)
    throw std::invalid_argument("log_prior_prob: dimension mismatch");
  double acc = 0.0;
  double p0 = prior.initial(delta[0]);
  if (p0 <= 0.0) return -std::numeric_limits<double>::infinity();
  acc = std::log(p0);
  for (int j = 2; j <= prior.p; ++j) {
    double t = prior.transition(j, delta[j - 2], delta[j - 1]);
    if (t <= 0.0) return -std::numeric_limits<double>::infinity();
    acc += std::log(t);
  }
  return acc;
}

Rational chain_prior_prob_exact(const IndicatorVector& delta) {
  if (!is_admissible(delta))
    throw std::invalid_argument("chain_prior_prob_exact: inadmissible vector");
  int p = delta.size();
  Rational prob =
      delta[0] == -1
          ? Rational(fibonacci(2 * p), fibonacci(2 * p + 1))
          : Rational(fibonacci(2 * p - 1), fibonacci(2 * p + 1));
  for (int j = 2; j <= p; ++j) {
    int r = p - j + 1;
    int from = delta[j - 2], to = delta[j - 1];
    Rational t;
    if (from == 0) {
      t = (to == -1) ? Rational(fibonacci(2 * r), fibonacci(2 * r + 1))
                     : Rational(fibonacci(2 * r - 1), fibonacci(2 * r + 1));
    } else {
      t = (to == 0) ? Rational(fibonacci(2 * r - 1), fibonacci(2 * r + 2))
                    : Rational(fibonacci(2 * r), fibonacci(2 * r + 2));
    }
    prob = prob * t;
  }
  return prob;
}

}  // namespace fusebma
