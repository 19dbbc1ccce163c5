#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "support/exact_binomial.hpp"
#include "twr/fec.hpp"

using namespace twr;

TEST_CASE("success probability matches hand-computed points") {
  // 3 packets, each surviving with 1/2: P(at least 2 survive) = 4/8.
  CHECK(fec_success_prob(3, 2, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  // P(at least 1 of 2 survives) = 1 - 0.1^2.
  CHECK(fec_success_prob(2, 1, 0.1) == doctest::Approx(0.99).epsilon(1e-12));
  CHECK(fec_success_prob(10, 0, 0.9) == 1.0);
  CHECK(fec_success_prob(10, 10, 0.0) == 1.0);
  CHECK(fec_success_prob(10, 1, 1.0) == 0.0);
}

TEST_CASE("success probability is monotone in s and p") {
  for (double p : {0.01, 0.1, 0.3}) {
    double prev = 1.0;
    for (int s = 0; s <= 40; ++s) {
      double cur = fec_success_prob(40, s, p);
      CHECK(cur <= prev + 1e-15);
      prev = cur;
    }
  }
  for (int s : {1, 10, 25}) {
    double prev = 1.0;
    for (double p = 0.0; p <= 1.0; p += 0.05) {
      double cur = fec_success_prob(40, s, p);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(fec_success_prob(-1, 0, 0.1), std::domain_error);
  CHECK_THROWS_AS(fec_success_prob(5, 6, 0.1), std::domain_error);
  CHECK_THROWS_AS(fec_success_prob(5, 2, -0.1), std::domain_error);
  CHECK_THROWS_AS(fec_success_prob(5, 2, 1.1), std::domain_error);
  CHECK_THROWS_AS(max_source_packets(3, 0.1, -0.5), std::domain_error);
}

TEST_CASE("success probability stays within 1e-10 relative of exact rational") {
  for (int n : {1, 2, 3, 5, 8, 13, 21, 34, 55, 64}) {
    int step = n <= 21 ? 1 : 3;
    for (int s = 0; s <= n; s += step) {
      for (double p : {0.003, 0.01, 0.05, 0.1, 0.17, 0.25, 0.33, 0.5, 0.75, 0.9}) {
        double got = fec_success_prob(n, s, p);
        double want = twrtest::oracle_success_prob(n, s, p);
        CAPTURE(n);
        CAPTURE(s);
        CAPTURE(p);
        if (want > 1e-300) {
          CHECK(std::abs(got - want) <= 1e-10 * want);
        } else {
          CHECK(got <= 1e-300);
        }
      }
    }
  }
}

TEST_CASE("planner matches the exact big-integer reference on a grid") {
  for (int n : {0, 1, 2, 3, 5, 8, 13, 21, 34, 55, 64}) {
    for (double p : {0.0, 0.003, 0.01, 0.05, 0.1, 0.17, 0.25, 0.33, 0.5}) {
      for (double tau : {0.005, 0.05}) {
        int got = max_source_packets(n, p, tau);
        int want = twrtest::oracle_max_source_packets(n, p, tau);
        CAPTURE(n);
        CAPTURE(p);
        CAPTURE(tau);
        CHECK(got == want);
      }
    }
  }
}

TEST_CASE("planner edge behavior") {
  CHECK(max_source_packets(30, 0.0, 0.005) == 30);   // lossless: no redundancy needed
  CHECK(max_source_packets(30, 1.0, 0.005) == 0);    // nothing survives
  CHECK(max_source_packets(30, 0.1, 1.0) == 30);     // any failure rate accepted
  CHECK(max_source_packets(0, 0.1, 0.005) == 0);
}

TEST_CASE("plans are maximal and internally consistent") {
  for (int n : {1, 7, 30, 64}) {
    for (double p : {0.0, 0.02, 0.1, 0.24}) {
      FecPlan plan = make_plan(n, p, 0.005);
      CHECK(plan.n == n);
      CHECK(plan.s + plan.m == n);
      CHECK(plan.s >= 0);
      CHECK(plan.predicted_failure <= 0.005);
      CHECK(plan.predicted_failure == doctest::Approx(1.0 - fec_success_prob(n, plan.s, p)));
      if (plan.s < n) {
        // One more source packet would break the failure budget.
        CHECK(1.0 - fec_success_prob(n, plan.s + 1, p) > 0.005);
      }
      CHECK(plan.fec_rate == doctest::Approx(double(plan.s) / n));
    }
  }
  FecPlan empty = make_plan(0, 0.1, 0.005);
  CHECK(empty.s == 0);
  CHECK(std::isnan(empty.fec_rate));
}
