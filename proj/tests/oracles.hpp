// Test-side oracles, independent of the library implementation paths they
// check: brute-force model enumeration, composite quadrature, Gauss-Hermite
// rules built from the Jacobi matrix, and the multivariate t density.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <vector>

#include "fusebma/model_space.hpp"

namespace oracle {

// every sequence in {-1,0,1}^p that is admissible, by explicit filtering
inline std::vector<std::vector<std::int8_t>> brute_force_models(int p) {
  std::vector<std::vector<std::int8_t>> out;
  long total = 1;
  for (int i = 0; i < p; ++i) total *= 3;
  for (long code = 0; code < total; ++code) {
    long c = code;
    std::vector<std::int8_t> v(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) {
      v[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(c % 3 - 1);
      c /= 3;
    }
    bool ok = v[0] != 1;
    for (int i = 1; ok && i < p; ++i)
      if (v[static_cast<std::size_t>(i - 1)] == 0 && v[static_cast<std::size_t>(i)] == 1)
        ok = false;
    if (ok) out.push_back(std::move(v));
  }
  return out;
}

// composite Simpson with an odd number of nodes
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int nodes = 2001) {
  if (nodes % 2 == 0) ++nodes;
  double h = (b - a) / (nodes - 1);
  double acc = f(a) + f(b);
  for (int i = 1; i < nodes - 1; ++i)
    acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

inline double simpson2d(const std::function<double(double, double)>& f, double ax,
                        double bx, double ay, double by, int nodes = 401) {
  auto inner = [&](double x) {
    return simpson([&](double y) { return f(x, y); }, ay, by, nodes);
  };
  return simpson(inner, ax, bx, nodes);
}

// Gauss-Hermite rule for integral of exp(-x^2) f(x), via Golub-Welsch
struct HermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

inline HermiteRule gauss_hermite(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = std::sqrt(k / 2.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  HermiteRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double v = es.eigenvectors()(0, i);
    rule.weights[i] = v * v * std::sqrt(M_PI);
  }
  return rule;
}

// log density of the multivariate t with mean mu, scale matrix S, df nu
inline double mvt_log_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                          const Eigen::MatrixXd& S, double nu) {
  const int d = static_cast<int>(x.size());
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  Eigen::VectorXd z = llt.matrixL().solve(x - mu);
  double quad = z.squaredNorm();
  double log_det = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  return std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) -
         0.5 * d * std::log(nu * M_PI) - 0.5 * log_det -
         0.5 * (nu + d) * std::log1p(quad / nu);
}

// conservative MCMC standard error via batch means
inline double batch_means_se(const std::vector<double>& x, int n_batches = 50) {
  int L = static_cast<int>(x.size()) / n_batches;
  std::vector<double> means;
  for (int b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (int i = 0; i < L; ++i) s += x[static_cast<std::size_t>(b * L + i)];
    means.push_back(s / L);
  }
  double m = 0.0;
  for (double v : means) m += v;
  m /= n_batches;
  double var = 0.0;
  for (double v : means) var += (v - m) * (v - m);
  var /= (n_batches - 1);
  return std::sqrt(var / n_batches);
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sample_sd(const std::vector<double>& x) {
  double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

}  // namespace oracle
