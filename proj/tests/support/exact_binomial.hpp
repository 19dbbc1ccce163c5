#pragma once

// Exact binomial-tail reference for the FEC planner, used only by tests.
// Doubles are converted to the exact rational they represent, every term of
// the tail is an integer over the common denominator q^n, and the threshold
// comparison is an exact integer comparison, so there is no rounding anywhere.

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace twrtest {

using BigInt = boost::multiprecision::cpp_int;

struct ExactRational {
  BigInt num;
  BigInt den;  // > 0, a power of two for values that come from doubles
};

inline ExactRational rational_of_double(double x) {
  if (!(x >= 0) || !std::isfinite(x)) throw std::invalid_argument("need a finite value >= 0");
  if (x == 0) return {0, 1};
  int exp = 0;
  double m = std::frexp(x, &exp);
  long long mant = static_cast<long long>(std::ldexp(m, 53));
  exp -= 53;
  ExactRational r{mant, 1};
  if (exp >= 0)
    r.num <<= exp;
  else
    r.den <<= -exp;
  return r;
}

inline std::vector<BigInt> binomial_row(int n) {
  std::vector<BigInt> row(n + 1);
  row[0] = 1;
  for (int k = 1; k <= n; ++k) row[k] = row[k - 1] * (n - k + 1) / k;
  return row;
}

// P(at least s of n packets arrive) as the nearest-enough double: the exact
// tail is scaled into a 64-bit-plus window before the one rounding division,
// so the result carries far more correct digits than the tolerances any test
// uses.
inline double oracle_success_prob(int n, int s, double per) {
  if (n < 0 || s < 0 || s > n) throw std::invalid_argument("need 0 <= s <= n");
  ExactRational p = rational_of_double(per);
  if (p.num > p.den) throw std::invalid_argument("per must be <= 1");
  const BigInt q = p.den, a = p.num, good = q - a;
  std::vector<BigInt> row = binomial_row(n);

  BigInt tail = 0, den = 1;
  for (int k = s; k <= n; ++k) {
    BigInt term = row[k];
    for (int i = 0; i < k; ++i) term *= good;
    for (int i = 0; i < n - k; ++i) term *= a;
    tail += term;
  }
  for (int k = 0; k < n; ++k) den *= q;
  if (tail == 0) return 0.0;

  long shift = 64 + static_cast<long>(boost::multiprecision::msb(den)) -
               static_cast<long>(boost::multiprecision::msb(tail));
  if (shift < 0) shift = 0;
  BigInt scaled = (tail << shift) / den;
  return std::ldexp(scaled.convert_to<double>(), -static_cast<int>(shift));
}

// Largest s in [0, n] with 1 - P(at least s of n arrive) <= tau, by linear
// scan over exact tail sums. Loss probability per packet is `per`.
inline int oracle_max_source_packets(int n, double per, double tau) {
  if (n < 0) throw std::invalid_argument("n must be >= 0");
  ExactRational p = rational_of_double(per);
  ExactRational t = rational_of_double(tau);
  if (p.num > p.den) throw std::invalid_argument("per must be <= 1");

  // Common denominator q^n with p = a/q: term k is C(n,k) (q-a)^k a^(n-k).
  const BigInt q = p.den, a = p.num, good = q - a;
  std::vector<BigInt> row = binomial_row(n);

  std::vector<BigInt> pow_good(n + 1), pow_a(n + 1);
  pow_good[0] = 1;
  pow_a[0] = 1;
  for (int k = 1; k <= n; ++k) {
    pow_good[k] = pow_good[k - 1] * good;
    pow_a[k] = pow_a[k - 1] * a;
  }
  BigInt den = 1;
  for (int k = 0; k < n; ++k) den *= q;

  // success_num(s) = sum_{k=s}^{n} C(n,k) good^k a^(n-k); suffix sums.
  BigInt tail = 0;
  int best = 0;
  for (int s = n; s >= 0; --s) {
    tail += row[s] * pow_good[s] * pow_a[n - s];
    // 1 - tail/den <= tau  <=>  (den - tail) * t.den <= t.num * den
    if ((den - tail) * t.den <= t.num * den) {
      best = s;
      break;  // scanning downward, the first feasible s is the largest
    }
  }
  return best;
}

}  // namespace twrtest
