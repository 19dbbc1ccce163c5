#include "twr/fec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace twr {

namespace {

using BigInt = boost::multiprecision::cpp_int;

void check_domain(int n, double p, double tau_or_unused, bool check_tau) {
  if (n < 0) throw std::domain_error("packet count must be non-negative");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("loss probability must be in [0, 1]");
  if (check_tau && !(tau_or_unused >= 0.0 && tau_or_unused <= 1.0))
    throw std::domain_error("residual failure target must be in [0, 1]");
}

double lchoose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// The exact dyadic rational num / den a double represents.
struct Dyadic {
  BigInt num;
  BigInt den;
};

Dyadic dyadic_of(double x) {
  if (x == 0.0) return {0, 1};
  int exp = 0;
  double m = std::frexp(x, &exp);
  Dyadic r{static_cast<long long>(std::ldexp(m, 53)), 1};
  exp -= 53;
  if (exp >= 0)
    r.num <<= exp;
  else
    r.den <<= -exp;
  return r;
}

}  // namespace

double fec_success_prob(int n, int s, double p) {
  check_domain(n, p, 0.0, false);
  if (s < 0 || s > n) throw std::domain_error("source packet count must be in [0, n]");
  if (s == 0) return 1.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;  // s >= 1 here

  // Binomial upper tail in the log domain: terms span hundreds of orders of
  // magnitude, so sum exp(log t - log t_max) around the largest term.
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  std::vector<double> lt(n - s + 1);
  double lt_max = -std::numeric_limits<double>::infinity();
  for (int k = s; k <= n; ++k) {
    double v = lchoose(n, k) + (n - k) * lp + k * lq;
    lt[k - s] = v;
    lt_max = std::max(lt_max, v);
  }
  double sum = 0.0, comp = 0.0;  // Kahan
  for (double v : lt) {
    double term = std::exp(v - lt_max);
    double y = term - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  double result = std::exp(lt_max) * sum;
  return std::clamp(result, 0.0, 1.0);
}

namespace {

// Decides the plan with exact integer arithmetic so the tau comparison never
// rounds: with p = a/q, the failure probability of s sources is the lower
// binomial tail sum_{k<s} C(n,k) (q-a)^k a^(n-k) over q^n. The tail is
// accumulated term by term; it only grows with s, so the scan stops at the
// first s over budget. A boundary tie (failure exactly tau, which happens
// whenever n = 1 and p equals tau) is accepted, matching the documented
// "equality accepted" contract, where floating-point evaluation would flip
// on sub-ulp rounding. predicted is the exact tail rounded down at 2^-53.
int exact_scan(int n, double p, double tau, double* predicted) {
  if (predicted) *predicted = 0.0;
  if (n == 0) return 0;
  Dyadic pr = dyadic_of(p);
  Dyadic tr = dyadic_of(tau);
  const BigInt& q = pr.den;
  const BigInt& a = pr.num;
  if (a == 0) return n;  // lossless: failure is 0 for every s
  const BigInt g = q - a;

  BigInt den = 1;
  for (int k = 0; k < n; ++k) den *= q;
  const BigInt budget = tr.num * den;

  BigInt term = boost::multiprecision::pow(a, static_cast<unsigned>(n));  // survivors = 0
  BigInt tail = 0, kept = 0;
  int s = 0;
  for (int k = 0; k < n; ++k) {
    if (k > 0) {
      term *= g * (n - k + 1);
      term /= a * k;  // exact: the result is again an integer term
    }
    tail += term;
    if (tail * tr.den > budget) break;
    s = k + 1;
    kept = tail;
  }
  if (predicted) {
    BigInt scaled = (kept << 53) / den;  // floor keeps predicted <= true failure
    *predicted = std::ldexp(scaled.convert_to<double>(), -53);
  }
  return s;
}

}  // namespace

int max_source_packets(int n, double p, double tau) {
  check_domain(n, p, tau, true);
  return exact_scan(n, p, tau, nullptr);
}

FecPlan make_plan(int n, double p, double tau) {
  check_domain(n, p, tau, true);
  FecPlan plan;
  plan.n = n;
  plan.s = exact_scan(n, p, tau, &plan.predicted_failure);
  plan.m = plan.n - plan.s;
  plan.fec_rate = n > 0 ? static_cast<double>(plan.s) / n
                        : std::numeric_limits<double>::quiet_NaN();
  return plan;
}

}  // namespace twr
