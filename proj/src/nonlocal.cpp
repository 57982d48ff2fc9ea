#include "fusebma/nonlocal.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include "fusebma/chain_moments.hpp"
#include "fusebma/quadrature.hpp"

namespace fusebma {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_pdf(double x, double var) {
  return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * M_PI * var);
}
}  // namespace

double log_q_factor(const Eigen::VectorXd& theta, const ModelStructure& st) {
  if (theta.size() != st.p_delta)
    throw std::invalid_argument("log_q_factor: theta length != p_delta");
  double acc = 0.0;
  for (int j = 0; j < st.p_delta; ++j) {
    if (theta[j] == 0.0) return kNegInf;
    acc += 2.0 * std::log(std::abs(theta[j]));
  }
  for (int j : st.lambda_set) {
    double d = theta[j] - theta[j - 1];
    if (d == 0.0) return kNegInf;
    acc += 2.0 * std::log(std::abs(d));
  }
  return acc;
}

double log_fusion_pmom_density(const Eigen::VectorXd& theta,
                               const ModelStructure& st, const SlabHyper& hyper) {
  if (!(hyper.sigma2 > 0.0) || !(hyper.tau > 0.0))
    throw std::invalid_argument("log_fusion_pmom_density: nonpositive scale");
  if (st.p_delta == 0) return 0.0;
  double lq = log_q_factor(theta, st);
  if (lq == kNegInf) return kNegInf;
  double ts = hyper.tau * hyper.sigma2;
  return log_normalizing_constant(st) + lq -
         0.5 * st.p_delta * std::log(2.0 * M_PI * ts) -
         (st.p_delta + st.lambda_size) * std::log(ts) -
         0.5 * theta.squaredNorm() / ts;
}

ReferencePrior reference_prior_from_name(const std::string& name) {
  if (name == "pmom" || name == "pMOM") return ReferencePrior::pMOM;
  if (name == "pimom" || name == "piMOM") return ReferencePrior::piMOM;
  if (name == "pemom" || name == "peMOM") return ReferencePrior::peMOM;
  throw std::invalid_argument("unknown reference prior '" + name + "'");
}

namespace {

// piMOM kernel |t|^{-2} exp(-sigma2/t^2); its mass equals the Gaussian
// integral 2 * int_0^inf exp(-sigma2 u^2) du after u = 1/t.
double pimom_normalizer(double sigma2) {
  double ucap = 40.0 / std::sqrt(sigma2);
  auto f = [&](double u) { return std::exp(-sigma2 * u * u); };
  return 2.0 * adaptive_simpson(f, 0.0, ucap, 1e-12 * ucap);
}

// peMOM kernel exp(-sigma2/t^2) phi(t; 0, sigma2). Integrated over
// unit-sd panels: a single coarse pass sees only endpoints where the kernel
// vanishes and would stop at zero.
double pemom_normalizer(double sigma2) {
  double sd = std::sqrt(sigma2);
  auto f = [&](double t) {
    if (t == 0.0) return 0.0;
    return std::exp(-sigma2 / (t * t)) * normal_pdf(t, sigma2);
  };
  double acc = 0.0;
  for (int k = 0; k < 40; ++k)
    acc += adaptive_simpson(f, k * sd, (k + 1) * sd, 1e-13);
  return 2.0 * acc;
}

double cached_normalizer(ReferencePrior which, double sigma2) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(static_cast<int>(which), sigma2);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  double z = (which == ReferencePrior::piMOM) ? pimom_normalizer(sigma2)
                                              : pemom_normalizer(sigma2);
  cache.emplace(key, z);
  return z;
}

}  // namespace

double reference_density1(ReferencePrior which, double theta, double sigma2) {
  if (!(sigma2 > 0.0))
    throw std::invalid_argument("reference_density: sigma2 <= 0");
  switch (which) {
    case ReferencePrior::pMOM:
      // int t^2 phi(t;0,sigma2) dt = sigma2, so the normalizer is 1/sigma2
      return theta * theta / sigma2 * normal_pdf(theta, sigma2);
    case ReferencePrior::piMOM: {
      if (theta == 0.0) return 0.0;
      double z = cached_normalizer(which, sigma2);
      return std::exp(-sigma2 / (theta * theta)) / (theta * theta) / z;
    }
    case ReferencePrior::peMOM: {
      if (theta == 0.0) return 0.0;
      double z = cached_normalizer(which, sigma2);
      return std::exp(-sigma2 / (theta * theta)) * normal_pdf(theta, sigma2) / z;
    }
  }
  throw std::logic_error("reference_density: unreachable");
}

double reference_density(ReferencePrior which, const Eigen::VectorXd& theta,
                         double sigma2) {
  double acc = 1.0;
  for (int i = 0; i < theta.size(); ++i)
    acc *= reference_density1(which, theta[i], sigma2);
  return acc;
}

std::vector<DensityGridRow> density_grid(const std::vector<double>& grid,
                                         double sigma2) {
  if (grid.empty()) throw std::invalid_argument("density_grid: empty grid");
  std::vector<DensityGridRow> rows;
  rows.reserve(grid.size());
  for (double t : grid) {
    DensityGridRow r;
    r.theta = t;
    r.pmom = reference_density1(ReferencePrior::pMOM, t, sigma2);
    r.pimom = reference_density1(ReferencePrior::piMOM, t, sigma2);
    r.pemom = reference_density1(ReferencePrior::peMOM, t, sigma2);
    r.normal = normal_pdf(t, sigma2);
    rows.push_back(r);
  }
  return rows;
}

std::vector<double> parse_grid_spec(const std::string& spec) {
  double lo, hi, step;
  std::size_t pos1 = spec.find(':');
  std::size_t pos2 = spec.rfind(':');
  if (pos1 == std::string::npos || pos2 == pos1)
    throw std::invalid_argument("grid spec must be lo:hi:step, got '" + spec + "'");
  try {
    lo = std::stod(spec.substr(0, pos1));
    hi = std::stod(spec.substr(pos1 + 1, pos2 - pos1 - 1));
    step = std::stod(spec.substr(pos2 + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("grid spec must be lo:hi:step, got '" + spec + "'");
  }
  if (!(step > 0.0) || hi < lo)
    throw std::invalid_argument("grid spec must have step > 0 and hi >= lo");
  std::vector<double> grid;
  long count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  grid.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) grid.push_back(lo + static_cast<double>(i) * step);
  return grid;
}

}  // namespace fusebma
