#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fusebma {

// Exact fraction over 64-bit integers, reduced after every operation.
// Intermediate products go through __int128 and are range-checked, which is
// ample for chain-prior products up to the enumeration cap.
struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n, long long d = 1) : num(n), den(d) { reduce(); }

  void reduce() {
    if (den == 0) throw std::domain_error("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  static long long checked(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN)
      throw std::overflow_error("Rational: 64-bit overflow");
    return static_cast<long long>(v);
  }

  Rational operator*(const Rational& o) const {
    long long g1 = std::gcd(num < 0 ? -num : num, o.den);
    long long g2 = std::gcd(o.num < 0 ? -o.num : o.num, den);
    Rational r;
    r.num = checked(static_cast<__int128>(num / g1) * (o.num / g2));
    r.den = checked(static_cast<__int128>(den / g2) * (o.den / g1));
    r.reduce();
    return r;
  }

  Rational operator+(const Rational& o) const {
    Rational r;
    r.num = checked(static_cast<__int128>(num) * o.den +
                    static_cast<__int128>(o.num) * den);
    r.den = checked(static_cast<__int128>(den) * o.den);
    r.reduce();
    return r;
  }

  bool operator==(const Rational& o) const {
    return num == o.num && den == o.den;
  }
  bool operator!=(const Rational& o) const { return !(*this == o); }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  std::string str() const {
    return std::to_string(num) + "/" + std::to_string(den);
  }
};

// Fibonacci numbers with F_1 = F_2 = 1. Exact up to F_92.
inline long long fibonacci(int n) {
  if (n < 1 || n > 92) throw std::domain_error("fibonacci: n outside [1, 92]");
  long long a = 1, b = 1;
  for (int i = 3; i <= n; ++i) {
    long long c = a + b;
    a = b;
    b = c;
  }
  return b;
}

}  // namespace fusebma
