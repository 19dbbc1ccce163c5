#include "twr/schemes.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "twr/fec.hpp"

namespace twr {

namespace {

// Floors products like 0.1 * 24e6 * 0.4 * 0.15 / 12000 that are integral on
// paper but can land a few ulp below the integer.
int stable_floor(double x) { return static_cast<int>(std::floor(x + 1e-9)); }

void check_rate(double r, const char* what) {
  if (!(r > 0.0) || !std::isfinite(r))
    throw std::invalid_argument(std::string(what) + " must be a positive rate");
}

void check_t(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("time partition outside [0,1]");
}

}  // namespace

double packets_direct_fractional(const SystemConfig& cfg, double r_bps, double t_i) {
  check_rate(r_bps, "rate");
  check_t(t_i);
  return cfg.beta * r_bps * t_i * cfg.t_delay_s / cfg.packet_size_bits;
}

double packets_rdstc_fractional(const SystemConfig& cfg, double r_src_bps, double r_relay_bps,
                                double t_i) {
  check_rate(r_src_bps, "source rate");
  check_rate(r_relay_bps, "relay rate");
  check_t(t_i);
  double harmonic = r_src_bps * r_relay_bps / (r_src_bps + r_relay_bps);
  return cfg.beta * t_i * cfg.t_delay_s * harmonic / cfg.packet_size_bits;
}

double packets_rdstc_hr_fractional(const SystemConfig& cfg, double r12_bps, double r21_bps,
                                   double rr2_bps, double rr1_bps) {
  check_rate(r12_bps, "r12");
  check_rate(r21_bps, "r21");
  check_rate(rr2_bps, "rr2");
  check_rate(rr1_bps, "rr1");
  double airtime = 1.0 / r12_bps + 1.0 / r21_bps + 1.0 / rr2_bps + 1.0 / rr1_bps;
  return cfg.beta * cfg.t_delay_s / (cfg.packet_size_bits * airtime);
}

double packets_nc_fractional(const SystemConfig& cfg, double r12_bps, double r21_bps,
                             double rr_bps) {
  check_rate(r12_bps, "r12");
  check_rate(r21_bps, "r21");
  check_rate(rr_bps, "relay rate");
  double num = cfg.beta * cfg.t_delay_s * r12_bps * r21_bps * rr_bps;
  double den = cfg.packet_size_bits * (r21_bps * rr_bps + r12_bps * rr_bps + r12_bps * r21_bps);
  return num / den;
}

int packets_direct(const SystemConfig& cfg, double r_bps, double t_i) {
  return stable_floor(packets_direct_fractional(cfg, r_bps, t_i));
}

int packets_rdstc(const SystemConfig& cfg, double r_src_bps, double r_relay_bps, double t_i) {
  return stable_floor(packets_rdstc_fractional(cfg, r_src_bps, r_relay_bps, t_i));
}

int packets_rdstc_hr(const SystemConfig& cfg, double r12_bps, double r21_bps, double rr2_bps,
                     double rr1_bps) {
  return stable_floor(packets_rdstc_hr_fractional(cfg, r12_bps, r21_bps, rr2_bps, rr1_bps));
}

int packets_nc(const SystemConfig& cfg, double r12_bps, double r21_bps, double rr_bps) {
  return stable_floor(packets_nc_fractional(cfg, r12_bps, r21_bps, rr_bps));
}

double video_rate(int source_packets, const SystemConfig& cfg) {
  return source_packets * cfg.packet_size_bits / cfg.t_delay_s;
}

namespace {

int planned_source_packets(int n, double per, const SystemConfig& cfg, FecMemo* memo) {
  if (!memo) return make_plan(n, per, cfg.tau).s;
  auto key = std::make_pair(n, per);
  auto it = memo->find(key);
  if (it != memo->end()) return it->second;
  int s = make_plan(n, per, cfg.tau).s;
  memo->emplace(key, s);
  return s;
}

double require_t(const RatePlan& plan) {
  if (!plan.t_i) throw std::invalid_argument("plan needs a time partition");
  return *plan.t_i;
}

}  // namespace

SchemeResult evaluate_plan(const RatePlan& plan, const PerEstimate& per, const SystemConfig& cfg,
                           FecMemo* memo) {
  SchemeKind expected = plan.relay_off ? SchemeKind::direct : plan.scheme;
  if (per.scheme != expected)
    throw std::invalid_argument("estimate scheme does not match the plan");

  int n12 = 0, n21 = 0;
  if (plan.scheme == SchemeKind::direct || plan.relay_off) {
    double t = require_t(plan);
    n12 = packets_direct(cfg, plan.r12_bps, t);
    n21 = packets_direct(cfg, plan.r21_bps, 1.0 - t);
  } else if (plan.scheme == SchemeKind::rdstc) {
    double t = require_t(plan);
    n12 = packets_rdstc(cfg, plan.r12_bps, plan.rr2_bps, t);
    n21 = packets_rdstc(cfg, plan.r21_bps, plan.rr1_bps, 1.0 - t);
  } else if (plan.scheme == SchemeKind::rdstc_hr) {
    n12 = n21 = packets_rdstc_hr(cfg, plan.r12_bps, plan.r21_bps, plan.rr2_bps, plan.rr1_bps);
  } else {
    n12 = n21 = packets_nc(cfg, plan.r12_bps, plan.r21_bps, plan.rr_bps);
  }

  SchemeResult res;
  res.per_used = per;
  res.n12 = n12;
  res.n21 = n21;
  double p12 = per.per(Direction::u1_to_u2);
  double p21 = per.per(Direction::u2_to_u1);
  if (p12 > cfg.per_cap || p21 > cfg.per_cap) return res;

  res.s12 = planned_source_packets(n12, p12, cfg, memo);
  res.s21 = planned_source_packets(n21, p21, cfg, memo);
  res.rv12_bps = video_rate(res.s12, cfg);
  res.rv21_bps = video_rate(res.s21, cfg);
  res.avg_video_rate_bps = 0.5 * (res.rv12_bps + res.rv21_bps);
  res.feasible = true;
  return res;
}

namespace {

// Strict total order over candidates, so the optimum is independent of
// enumeration order. Feasible beats infeasible, then higher average video
// rate, lower PHY rate sum, t closest to 1/2, then lexicographically
// smallest (r12, r21, rr2, rr1, rr, t, relay_off).
struct CandidateRank {
  double avg = -1.0;
  double rate_sum = 0.0;
  double t_dev = 0.0;
  std::array<double, 7> lex{};

  CandidateRank() = default;
  CandidateRank(const RatePlan& p, const SchemeResult& r) {
    avg = r.avg_video_rate_bps;
    rate_sum = p.r12_bps + p.r21_bps + p.rr2_bps + p.rr1_bps + p.rr_bps;
    double t = p.t_i.value_or(0.5);
    t_dev = std::abs(t - 0.5);
    lex = {p.r12_bps, p.r21_bps, p.rr2_bps, p.rr1_bps, p.rr_bps, p.t_i.value_or(-1.0),
           p.relay_off ? 1.0 : 0.0};
  }

  bool better_than(const CandidateRank& o) const {
    if (avg != o.avg) return avg > o.avg;
    if (rate_sum != o.rate_sum) return rate_sum < o.rate_sum;
    if (t_dev != o.t_dev) return t_dev < o.t_dev;
    return lex < o.lex;
  }
};

struct Search {
  const SystemConfig& cfg;
  FecMemo memo;
  Optimum best;
  CandidateRank best_rank;
  bool have_best = false;

  explicit Search(const SystemConfig& c) : cfg(c) {}

  void consider(const RatePlan& plan, const PerEstimate& per) {
    SchemeResult res = evaluate_plan(plan, per, cfg, &memo);
    if (!res.feasible) return;
    CandidateRank rank(plan, res);
    if (!have_best || rank.better_than(best_rank)) {
      best = {plan, res};
      best_rank = rank;
      have_best = true;
    }
  }
};

PerEstimate direct_estimate(const PerTables& t, int a, int b) {
  PerEstimate e;
  e.scheme = SchemeKind::direct;
  e.p12 = t.direct_p12[a];
  e.p21 = t.direct_p21[b];
  e.trials = t.trials;
  return e;
}

// The fallback branch of a relay scheme: spend the whole window on plain
// two-phase transmission. Candidates mirror the direct search but keep the
// relay scheme's tag with relay_off set.
void search_relay_off(Search& search, SchemeKind scheme, const PerTables& tables) {
  const SystemConfig& cfg = search.cfg;
  const int R = static_cast<int>(cfg.rate_table_bps.size());
  for (int a = 0; a < R; ++a) {
    for (int b = 0; b < R; ++b) {
      for (double t : cfg.time_partition_grid) {
        RatePlan plan;
        plan.scheme = scheme;
        plan.relay_off = true;
        plan.r12_bps = cfg.rate_table_bps[a];
        plan.r21_bps = cfg.rate_table_bps[b];
        plan.t_i = t;
        search.consider(plan, direct_estimate(tables, a, b));
      }
    }
  }
}

}  // namespace

Optimum optimize(SchemeKind scheme, const PerTables& tables, const SystemConfig& cfg) {
  const int R = static_cast<int>(cfg.rate_table_bps.size());
  if (tables.num_rates != R)
    throw std::invalid_argument("PER tables were built for a different rate table");

  Search search(cfg);

  if (scheme == SchemeKind::direct) {
    for (int a = 0; a < R; ++a) {
      for (int b = 0; b < R; ++b) {
        for (double t : cfg.time_partition_grid) {
          RatePlan plan;
          plan.scheme = SchemeKind::direct;
          plan.r12_bps = cfg.rate_table_bps[a];
          plan.r21_bps = cfg.rate_table_bps[b];
          plan.t_i = t;
          search.consider(plan, direct_estimate(tables, a, b));
        }
      }
    }
  } else if (scheme == SchemeKind::rdstc) {
    for (int a = 0; a < R; ++a) {
      for (int b = 0; b < R; ++b) {
        for (int rr2 = 0; rr2 < R; ++rr2) {
          for (int rr1 = 0; rr1 < R; ++rr1) {
            PerEstimate e;
            e.scheme = SchemeKind::rdstc;
            e.p12 = tables.rdstc_p12[tables.idx2(a, rr2)];
            e.p21 = tables.rdstc_p21[tables.idx2(b, rr1)];
            e.avg_relay_count = 0.5 * (tables.rdstc_k12[a] + tables.rdstc_k21[b]);
            e.trials = tables.trials;
            for (double t : cfg.time_partition_grid) {
              RatePlan plan;
              plan.scheme = SchemeKind::rdstc;
              plan.r12_bps = cfg.rate_table_bps[a];
              plan.r21_bps = cfg.rate_table_bps[b];
              plan.rr2_bps = cfg.rate_table_bps[rr2];
              plan.rr1_bps = cfg.rate_table_bps[rr1];
              plan.t_i = t;
              search.consider(plan, e);
            }
          }
        }
      }
    }
    search_relay_off(search, scheme, tables);
  } else if (scheme == SchemeKind::rdstc_hr) {
    for (int a = 0; a < R; ++a) {
      for (int b = 0; b < R; ++b) {
        for (int rr2 = 0; rr2 < R; ++rr2) {
          for (int rr1 = 0; rr1 < R; ++rr1) {
            PerEstimate e;
            e.scheme = SchemeKind::rdstc_hr;
            e.p12 = tables.joint_p12[tables.idx3(a, b, rr2)];
            e.p21 = tables.joint_p21[tables.idx3(a, b, rr1)];
            e.avg_relay_count = tables.joint_k[tables.idx2(a, b)];
            e.trials = tables.trials;
            RatePlan plan;
            plan.scheme = SchemeKind::rdstc_hr;
            plan.r12_bps = cfg.rate_table_bps[a];
            plan.r21_bps = cfg.rate_table_bps[b];
            plan.rr2_bps = cfg.rate_table_bps[rr2];
            plan.rr1_bps = cfg.rate_table_bps[rr1];
            search.consider(plan, e);
          }
        }
      }
    }
    search_relay_off(search, scheme, tables);
  } else if (scheme == SchemeKind::rdstc_nc) {
    for (int a = 0; a < R; ++a) {
      for (int b = 0; b < R; ++b) {
        for (int rr = 0; rr < R; ++rr) {
          PerEstimate e;
          e.scheme = SchemeKind::rdstc_nc;
          e.p12 = tables.joint_p12[tables.idx3(a, b, rr)];
          e.p21 = tables.joint_p21[tables.idx3(a, b, rr)];
          e.avg_relay_count = tables.joint_k[tables.idx2(a, b)];
          e.trials = tables.trials;
          RatePlan plan;
          plan.scheme = SchemeKind::rdstc_nc;
          plan.r12_bps = cfg.rate_table_bps[a];
          plan.r21_bps = cfg.rate_table_bps[b];
          plan.rr_bps = cfg.rate_table_bps[rr];
          search.consider(plan, e);
        }
      }
    }
    search_relay_off(search, scheme, tables);
  } else {
    throw std::invalid_argument("unknown scheme");
  }

  if (!search.have_best) {
    Optimum none;
    none.plan.scheme = scheme;
    return none;
  }
  return search.best;
}

Optimum optimize_placement(SchemeKind scheme, const NodePlacement& placement,
                           PerTableProvider& provider, const SystemConfig& cfg) {
  return optimize(scheme, provider.tables_for(placement), cfg);
}

}  // namespace twr
