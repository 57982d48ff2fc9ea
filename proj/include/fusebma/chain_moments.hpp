#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fusebma/model_space.hpp"

namespace fusebma {

/// Gaussian chain moments for the fusion slab normalizer. With Z_j iid
/// standard normal,
///   Phi_k = E[ prod_j Z_j^2 * prod_{j>=2} (Z_j - Z_{j-1})^2 ]
///   Psi_k = same with the last factor Z_k^4,
/// satisfying Phi_1 = 1, Psi_1 = 3 and the recursion
///   Phi_k = 3 Phi_{k-1} + Psi_{k-1},  Psi_k = 15 Phi_{k-1} + 3 Psi_{k-1}.
struct ChainMomentTable {
  std::vector<double> phi;  // phi[k-1] = Phi_k
  std::vector<double> psi;
};

inline ChainMomentTable chain_moment_table(int kmax) {
  if (kmax < 1) throw std::invalid_argument("chain_moment_table: kmax < 1");
  ChainMomentTable t;
  t.phi.resize(static_cast<std::size_t>(kmax));
  t.psi.resize(static_cast<std::size_t>(kmax));
  t.phi[0] = 1.0;  // E[Z^2]
  t.psi[0] = 3.0;  // E[Z^4]
  for (int k = 2; k <= kmax; ++k) {
    double ph = t.phi[static_cast<std::size_t>(k - 2)];
    double ps = t.psi[static_cast<std::size_t>(k - 2)];
    t.phi[static_cast<std::size_t>(k - 1)] = 3.0 * ph + ps;
    t.psi[static_cast<std::size_t>(k - 1)] = 15.0 * ph + 3.0 * ps;
  }
  return t;
}

inline constexpr int kChainMomentCap = 64;

inline double phi_chain_moment(int k) {
  static const ChainMomentTable table = chain_moment_table(kChainMomentCap);
  if (k < 1) throw std::invalid_argument("phi_chain_moment: k < 1");
  if (k > kChainMomentCap)
    throw std::length_error("phi_chain_moment: k exceeds table cap");
  return table.phi[static_cast<std::size_t>(k - 1)];
}

inline double phi_closed_form(int k) {
  double s = std::sqrt(15.0);
  return (std::pow(3.0 + s, k) - std::pow(3.0 - s, k)) / (2.0 * s);
}

/// Maximal chains of blocks linked through the fusion-candidate set; the
/// slab normalizer factorizes over these runs.
inline std::vector<int> run_lengths(const ModelStructure& st) {
  std::vector<int> runs;
  int b = 0;
  std::size_t li = 0;
  while (b < st.p_delta) {
    int len = 1;
    while (li < st.lambda_set.size() && st.lambda_set[li] == b + len) {
      ++len;
      ++li;
    }
    runs.push_back(len);
    b += len;
  }
  return runs;
}

/// log C_delta = -sum over runs of log Phi_{run length}; 0 for the null model.
inline double log_normalizing_constant(const ModelStructure& st) {
  double acc = 0.0;
  for (int len : run_lengths(st)) acc -= std::log(phi_chain_moment(len));
  return acc;
}

}  // namespace fusebma
