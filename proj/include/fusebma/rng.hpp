#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace fusebma {

// Seed derivation. Substreams are derived from a root seed by hashing,
// never by jumping the engine, so any consumer can reproduce the layout:
//   child = mix64(mix64(root) ^ mix64(tag))
// where mix64 is the splitmix64 finalizer. Engines are std::mt19937_64
// seeded with the derived value.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag) {
  return mix64(mix64(root) ^ mix64(tag));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag1,
                                 std::uint64_t tag2) {
  return derive_seed(derive_seed(root, tag1), tag2);
}

// FNV-1a over raw bytes; used to key per-model seed substreams.
inline std::uint64_t fnv1a(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

// Standard normal CDF and its complement, stable in both tails.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }
inline double norm_cdf_upper(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }

inline double norm_log_pdf(double x) {
  return -0.5 * x * x - 0.5 * std::log(2.0 * M_PI);
}

inline double norm_log_cdf(double x) {
  if (x > -1.0) return std::log(norm_cdf(x));
  // log(erfc(u)/2) with u = -x/sqrt(2); erfc keeps full relative accuracy
  // down to the denormal range, so the log is safe for x >= -37.
  double v = norm_cdf(x);
  if (v > 0.0) return std::log(v);
  // asymptotic expansion for the extreme tail
  double x2 = x * x;
  return -0.5 * x2 - 0.5 * std::log(2.0 * M_PI) - std::log(-x) +
         std::log1p(-1.0 / x2);
}

/// Inverse standard normal CDF. Rational initial guess (Wichura-style)
/// polished by log-space Newton steps; accurate over the full double range
/// of p, including far tails.
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("norm_quantile: p outside (0,1)");
  bool flip = p > 0.5;
  double q = flip ? 1.0 - p : p;  // q in (0, 0.5]
  double x;
  if (q > 0.02425) {
    // central region: rational approximation in t = q - 1/2
    double t = q - 0.5;
    double s = t * t;
    x = t * (2.506628277459239 + s * (-30.66479806614716 + s * (138.3577518672690 + s * (-275.9285104469687 + s * (220.9460984245205 + s * -39.69683028665376))))) /
        (1.0 + s * (-13.28068155288572 + s * (66.80131188771972 + s * (-155.6989798598866 + s * (161.5858368580409 + s * -54.47609879822406)))));
  } else {
    double r = std::sqrt(-2.0 * std::log(q));
    x = -(2.938163982698783 + r * (4.374664141464968 + r * (-2.549732539343734 + r * (-2.400758277161838 + r * (-0.3223964580411365 + r * -0.007784894002430293))))) /
        (1.0 + r * (3.754408661907416 + r * (2.445134137142996 + r * (0.3224671290700398 + r * 0.007784695709041462))));
  }
  // Newton on g(x) = log Phi(x) - log q  (x < 0 branch, q <= 1/2)
  for (int it = 0; it < 3; ++it) {
    double lc = norm_log_cdf(x);
    double step = (lc - std::log(q)) * std::exp(lc - norm_log_pdf(x));
    if (!std::isfinite(step)) break;
    x -= step;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(x))) break;
  }
  return flip ? -x : x;
}

/// Seeded random stream: mt19937_64 plus hand-rolled variate generators so
/// draws do not depend on the C++ standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  // uniform on [0,1), 53-bit mantissa
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, cosine branch only: one normal consumes exactly two uniforms.
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Marsaglia-Tsang; shapes below one boosted through gamma(shape+1).
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::domain_error("gamma: shape <= 0");
    if (shape < 1.0) {
      double u = uniform_pos();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform_pos();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double gamma(double shape, double rate) { return gamma(shape) / rate; }

  double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }

  // draw with density psi^a / Gamma(a) x^{-(a+1)} exp(-psi/x)
  double inverse_gamma(double shape, double rate) { return rate / gamma(shape); }

  double beta(double a, double b) {
    double g1 = gamma(a);
    double g2 = gamma(b);
    return g1 / (g1 + g2);
  }

  std::vector<double> dirichlet(const std::vector<double>& alpha) {
    std::vector<double> g(alpha.size());
    double s = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      g[i] = gamma(alpha[i]);
      s += g[i];
    }
    for (double& v : g) v /= s;
    return g;
  }

 private:
  std::mt19937_64 eng_;
};

/// One draw from N(0,1) restricted to [lo, hi] (endpoints may be infinite)
/// by inverse CDF, computed in whichever tail keeps the CDF differences well
/// conditioned.
inline double sample_trunc_std_normal(double lo, double hi, Rng& rng) {
  if (!(lo < hi)) throw std::invalid_argument("sample_trunc_std_normal: empty interval");
  if (lo >= 0.0) {
    // work in the upper tail: Phi_c is decreasing
    double pu_lo = std::isinf(hi) ? 0.0 : norm_cdf_upper(hi);
    double pu_hi = norm_cdf_upper(lo);
    double u = rng.uniform(pu_lo, pu_hi);
    if (u <= 0.0) u = std::numeric_limits<double>::min();
    if (u >= 1.0) u = 1.0 - 1e-16;
    return -norm_quantile(u);
  }
  if (hi <= 0.0) return -sample_trunc_std_normal(-hi, -lo, rng);
  double p_lo = std::isinf(lo) ? 0.0 : norm_cdf(lo);
  double p_hi = std::isinf(hi) ? 1.0 : norm_cdf(hi);
  double u = rng.uniform(p_lo, p_hi);
  if (u <= 0.0) u = std::numeric_limits<double>::min();
  if (u >= 1.0) u = 1.0 - 1e-16;
  return norm_quantile(u);
}

// Phi(b) - Phi(a), evaluated in the better-conditioned tail.
inline double norm_interval_mass(double a, double b) {
  if (a >= b) return 0.0;
  if (a >= 0.0) return norm_cdf_upper(a) - norm_cdf_upper(b);
  if (b <= 0.0) return norm_cdf(b) - norm_cdf(a);
  return norm_cdf(b) - norm_cdf(a);
}

}  // namespace fusebma
