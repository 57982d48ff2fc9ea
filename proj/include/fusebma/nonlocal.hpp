#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fusebma/model_space.hpp"

namespace fusebma {

/// Scale knobs of the fusion slab. The density is parameterized by the
/// product tau * sigma2; tau defaults to 1 and is exposed for sensitivity
/// runs only.
struct SlabHyper {
  double tau = 1.0;
  double sigma2 = 1.0;
};

/// Log density of the fusion slab at theta (length p_delta):
///   log C_delta + sum_j log theta_j^2
///   + sum_{j in Lambda} log (theta_j - theta_{j-1})^2
///   - (p_delta/2) log(2 pi tau sigma2) - (p_delta + |Lambda|) log(tau sigma2)
///   - theta' theta / (2 tau sigma2).
/// Exact zeros in a coordinate or a Lambda-difference give -inf, never throw.
double log_fusion_pmom_density(const Eigen::VectorXd& theta,
                               const ModelStructure& st, const SlabHyper& hyper);

/// log of the nonlocal factor prod theta_j^2 * prod_Lambda (diff)^2;
/// -inf on the zero set.
double log_q_factor(const Eigen::VectorXd& theta, const ModelStructure& st);

enum class ReferencePrior { pMOM, piMOM, peMOM };

ReferencePrior reference_prior_from_name(const std::string& name);

/// Normalized one-dimensional reference density at theta. piMOM and peMOM
/// normalizers are computed by adaptive quadrature to relative 1e-8 and
/// cached per sigma2.
double reference_density1(ReferencePrior which, double theta, double sigma2);

/// Product density over the coordinates of theta.
double reference_density(ReferencePrior which, const Eigen::VectorXd& theta,
                         double sigma2);

struct DensityGridRow {
  double theta;
  double pmom;
  double pimom;
  double pemom;
  double normal;
};

/// Rows for the density comparison grid. Throws on an empty grid.
std::vector<DensityGridRow> density_grid(const std::vector<double>& grid,
                                         double sigma2);

/// Parse a grid spec "lo:hi:step" into explicit grid points.
std::vector<double> parse_grid_spec(const std::string& spec);

}  // namespace fusebma
