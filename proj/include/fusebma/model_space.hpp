#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fusebma/rational.hpp"

namespace fusebma {

/// Ternary model code, one entry per ordered covariate:
///   -1  free coefficient (starts a new block)
///    0  excluded (coefficient exactly zero)
///    1  fused with the previous coefficient
/// Admissible vectors have entries[0] != 1 and no (0,1) adjacent pair.
struct IndicatorVector {
  std::vector<std::int8_t> entries;

  IndicatorVector() = default;
  explicit IndicatorVector(std::vector<std::int8_t> e) : entries(std::move(e)) {}
  IndicatorVector(std::initializer_list<int> e) {
    entries.reserve(e.size());
    for (int v : e) entries.push_back(static_cast<std::int8_t>(v));
  }

  int size() const { return static_cast<int>(entries.size()); }
  std::int8_t operator[](int j) const { return entries[static_cast<std::size_t>(j)]; }

  bool operator==(const IndicatorVector& o) const { return entries == o.entries; }
  bool operator<(const IndicatorVector& o) const { return entries < o.entries; }

  /// Serialize as comma-separated integers, e.g. "-1,1,0".
  std::string str() const;
  static IndicatorVector parse(const std::string& text);
};

/// True iff the code sequence is an admissible model. Throws on values
/// outside {-1,0,1}.
bool is_admissible(const std::vector<std::int8_t>& entries);
inline bool is_admissible(const IndicatorVector& delta) {
  return is_admissible(delta.entries);
}

/// All admissible vectors of length p in lexicographic order (-1 < 0 < 1).
/// The count is the Fibonacci number F_{2p+1}. Throws when p exceeds the cap.
std::vector<IndicatorVector> enumerate_models(int p, int cap = 16);

/// Structural view of an admissible vector: active coefficient blocks, the
/// fusion-candidate set, and their sizes.
struct ModelStructure {
  // ordered original column indices per block; one free coefficient each
  std::vector<std::vector<int>> blocks;
  // block indices j >= 1 whose block is adjacent to block j-1 with no
  // excluded column in between (the set of unfused-but-fusable pairs)
  std::vector<int> lambda_set;
  int p_delta = 0;
  int lambda_size = 0;
};

ModelStructure model_structure(const IndicatorVector& delta);

/// Rebuild the indicator vector of length p from its block decomposition.
IndicatorVector delta_from_blocks(const std::vector<std::vector<int>>& blocks, int p);

/// Collapse an n x p design to n x p_delta by summing fused columns and
/// dropping excluded ones, so that X theta = X_delta theta_delta whenever
/// theta is block-constant and zero outside the blocks.
Eigen::MatrixXd collapse_design(const Eigen::MatrixXd& X, const ModelStructure& st);

// ---------------------------------------------------------------------------
// Markov-chain prior over the model space.
// ---------------------------------------------------------------------------

/// Initial probabilities and per-position transition rows. Transitions at
/// position j (j = 2..p) are stored at index j-2:
///   from state -1 or 1: (omega_{j,-1}, omega_{j,0}, omega_{j,1})
///   from state 0:       (kappa_{j,-1}, kappa_{j,0}, 0)   [structural zero]
struct ChainParams {
  int p = 0;
  std::array<double, 3> pi = {0, 0, 0};  // (pi_{-1}, pi_0, pi_1)
  std::vector<std::array<double, 3>> omega;
  std::vector<std::array<double, 2>> kappa;

  double transition(int j, int from, int to) const;  // j in 2..p
  double initial(int state) const { return pi[static_cast<std::size_t>(state + 1)]; }
};

/// ChainParams plus the Dirichlet/Beta hyperparameters of the hierarchical
/// specification: per-position means a_{j,.}, (c_{j,0}, d_{j,0}) and the
/// concentrations A, B.
struct ChainPrior : ChainParams {
  std::vector<std::array<double, 3>> dirichlet_mean;  // a_{j,-1}, a_{j,0}, a_{j,1}
  std::vector<std::array<double, 2>> beta_mean;       // c_{j,0}, d_{j,0}
  double conc_a = 1.0;
  double conc_b = 1.0;
};

/// Fibonacci-ratio parameters that give every admissible model the same
/// prior probability 1/F_{2p+1}. With r_j = p-j+1:
///   omega_{j,-1} = F_{2r_j}/F_{2r_j+2}, omega_{j,0} = F_{2r_j-1}/F_{2r_j+2},
///   omega_{j,1}  = F_{2r_j}/F_{2r_j+2},
///   kappa_{j,-1} = F_{2r_j}/F_{2r_j+1}, kappa_{j,0} = F_{2r_j-1}/F_{2r_j+1},
///   pi = (F_{2p}/F_{2p+1}, F_{2p-1}/F_{2p+1}, 0).
ChainPrior uniform_chain_prior(int p);

/// log pi_{delta_1} + sum_j log K_j(delta_{j-1}, delta_j); -inf for
/// structurally forbidden transitions. Throws on dimension mismatch.
double log_prior_prob(const IndicatorVector& delta, const ChainParams& prior);

/// Chain probability of an admissible vector under the uniform prior,
/// computed in exact rational arithmetic.
Rational chain_prior_prob_exact(const IndicatorVector& delta);

}  // namespace fusebma
