#pragma once

namespace twr {

// Erasure-code plan for one direction of one packet generation: s source
// packets are expanded into n transmitted packets; the generation decodes
// iff at least s of the n arrive.
struct FecPlan {
  int n = 0;
  int s = 0;
  int m = 0;                        // redundancy packets, n - s
  double fec_rate = 0.0;            // s / n; NaN marks the undefined n = 0 case
  double predicted_failure = 0.0;   // 1 - P(at least s of n arrive), rounded down
};

// P(at least s of n packets survive independent loss with probability p).
// Floating-point evaluation; good to ~1e-13 relative but not exact.
double fec_success_prob(int n, int s, double p);

// Largest s in [0, n] whose residual failure probability is <= tau, equality
// accepted. The decision is made in exact integer arithmetic on the rationals
// the doubles represent, so a failure probability that lands exactly on tau
// is accepted instead of depending on rounding.
int max_source_packets(int n, double p, double tau);

FecPlan make_plan(int n, double p, double tau);

}  // namespace twr
