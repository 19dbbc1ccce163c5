#pragma once

#include <map>
#include <optional>
#include <utility>

#include "twr/config.hpp"
#include "twr/mcper.hpp"
#include "twr/types.hpp"

namespace twr {

// One candidate operating point. Rates that a scheme does not use stay 0.
// relay_off marks the fallback branch of a relay scheme: spend the whole
// window on plain two-phase direct transmission (then t_i is set even for
// schemes that normally have no time split).
struct RatePlan {
  SchemeKind scheme = SchemeKind::direct;
  bool relay_off = false;
  double r12_bps = 0.0;
  double r21_bps = 0.0;
  double rr2_bps = 0.0;  // relay forward rate toward user 2 (rdstc, rdstc_hr)
  double rr1_bps = 0.0;  // relay forward rate toward user 1 (rdstc, rdstc_hr)
  double rr_bps = 0.0;   // shared relay rate (rdstc_nc)
  std::optional<double> t_i;  // fraction of the window for direction 1->2
};

struct SchemeResult {
  bool feasible = false;
  int n12 = 0, n21 = 0;  // transmitted packets per window and direction
  int s12 = 0, s21 = 0;  // source packets the FEC plan protects
  double rv12_bps = 0.0, rv21_bps = 0.0;
  double avg_video_rate_bps = 0.0;
  PerEstimate per_used;
};

// Packets per delivery window. The floor tolerates the sub-ulp rounding of
// products like 0.1 * 24e6 * 0.4 * 0.15 that are exact integers on paper.
int packets_direct(const SystemConfig& cfg, double r_bps, double t_i);
int packets_rdstc(const SystemConfig& cfg, double r_src_bps, double r_relay_bps, double t_i);
int packets_rdstc_hr(const SystemConfig& cfg, double r12_bps, double r21_bps, double rr2_bps,
                     double rr1_bps);
int packets_nc(const SystemConfig& cfg, double r12_bps, double r21_bps, double rr_bps);

// Same values without the floor, for budget-identity checks.
double packets_direct_fractional(const SystemConfig& cfg, double r_bps, double t_i);
double packets_rdstc_fractional(const SystemConfig& cfg, double r_src_bps, double r_relay_bps,
                                double t_i);
double packets_rdstc_hr_fractional(const SystemConfig& cfg, double r12_bps, double r21_bps,
                                   double rr2_bps, double rr1_bps);
double packets_nc_fractional(const SystemConfig& cfg, double r12_bps, double r21_bps,
                             double rr_bps);

double video_rate(int source_packets, const SystemConfig& cfg);

// Cache of FEC plan results keyed by (packet count, PER); tau is fixed by
// the config a given cache is used with.
using FecMemo = std::map<std::pair<int, double>, int>;

// Applies the FEC planner to one candidate. A direction whose PER exceeds
// cfg.per_cap disqualifies the plan. Throws if the estimate's scheme does
// not match the plan (relay_off plans expect a direct estimate).
SchemeResult evaluate_plan(const RatePlan& plan, const PerEstimate& per, const SystemConfig& cfg,
                           FecMemo* memo = nullptr);

struct Optimum {
  RatePlan plan;
  SchemeResult result;
};

// Exhaustive search over the rate table (and time partition grid where the
// scheme has one), including the relay-off fallback branch for relay
// schemes. Ties on the average video rate prefer the lower PHY rate sum,
// then the t_i closest to 1/2, then the lexicographically smallest tuple
// (r12, r21, rr2, rr1, rr, t_i, relay-off last), so the result does not
// depend on enumeration order. When nothing is feasible the result has
// feasible = false and an all-zero plan.
Optimum optimize(SchemeKind scheme, const PerTables& tables, const SystemConfig& cfg);

Optimum optimize_placement(SchemeKind scheme, const NodePlacement& placement,
                           PerTableProvider& provider, const SystemConfig& cfg);

}  // namespace twr
