#include "twr/mcper.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "twr/textio.hpp"

namespace twr {

// Node ids: user1 = 0, user2 = 1, relay i = 2 + i. Every random draw of a
// trial is keyed by (trial, link, purpose), where the "link" of the combined
// space-time coded relay transmission uses a reserved transmitter id. Rates
// never enter a key, so changing a rate reuses the same channel randomness:
// estimates for different schemes and rate tuples are coupled trial-by-trial.
namespace {

constexpr uint64_t kNodeStride = 1u << 20;
constexpr uint64_t kEnsembleTx = kNodeStride - 1;

uint64_t link_code(uint64_t tx, uint64_t rx) { return tx * kNodeStride + rx; }

double fade_gain(const StreamRng& trial_rng, uint64_t tx, uint64_t rx, FadingKind kind) {
  if (kind == FadingKind::none) return 1.0;
  return trial_rng.exponential(link_code(tx, rx) * 4);
}

double decode_u(const StreamRng& trial_rng, uint64_t tx, uint64_t rx) {
  return trial_rng.uniform01(link_code(tx, rx) * 4 + 1);
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

struct Geom {
  double u12_db = 0.0;              // mean SNR of the direct link, either direction
  std::vector<double> d1_db, d2_db; // mean SNR user<->relay i at full power
  std::vector<double> d1_lin, d2_lin;
};

Geom make_geom(const SimModel& model, const NodePlacement& p) {
  Geom g;
  g.u12_db = mean_snr_db(p.user1, p.user2, model.pathloss);
  size_t n = p.relays.size();
  g.d1_db.resize(n);
  g.d2_db.resize(n);
  g.d1_lin.resize(n);
  g.d2_lin.resize(n);
  for (size_t i = 0; i < n; ++i) {
    g.d1_db[i] = mean_snr_db(p.user1, p.relays[i], model.pathloss);
    g.d2_db[i] = mean_snr_db(p.user2, p.relays[i], model.pathloss);
    g.d1_lin[i] = std::pow(10.0, g.d1_db[i] / 10.0);
    g.d2_lin[i] = std::pow(10.0, g.d2_db[i] / 10.0);
  }
  return g;
}

// Link-model curve index for every configured rate; throws when a configured
// rate has no curve.
std::vector<int> map_rates(const SimModel& model) {
  std::vector<int> idx;
  for (double r : model.system.rate_table_bps) {
    int i = model.link.index_of(r);
    if (i < 0)
      throw std::invalid_argument("link model has no curve for rate " + fmt_double(r) + " bps");
    idx.push_back(i);
  }
  return idx;
}

void check_args(const NodePlacement& p, int trials) {
  if (trials <= 0) throw std::invalid_argument("trials must be positive");
  if (p.relays.size() > kNodeStride - 3)
    throw std::invalid_argument("placement has too many relays");
}

double relay_power_fraction(double k_avg) { return 1.0 / std::max(k_avg, 1.0); }

double estimate_ratio(long long count, int trials) {
  return static_cast<double>(count) / static_cast<double>(trials);
}

}  // namespace

double PerEstimate::per(Direction d) const {
  const std::optional<double>& v = d == Direction::u1_to_u2 ? p12 : p21;
  if (!v) throw std::logic_error("estimate does not cover the requested direction");
  return *v;
}

double PerEstimate::stderr_of(Direction d) const {
  double p = per(d);
  return std::sqrt(p * (1.0 - p) / trials);
}

void write_trace_csv(const std::vector<TrialOutcome>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "trial,relay_set_size,decoded_at_1,decoded_at_2\n";
  for (const TrialOutcome& r : rows)
    out << r.trial << ',' << r.relay_set_size << ',' << (r.decoded_at_1 ? 1 : 0) << ','
        << (r.decoded_at_2 ? 1 : 0) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

PerEstimate estimate_direct(const SimModel& model, const NodePlacement& placement, double r12_bps,
                            double r21_bps, int trials, StreamRng base, TrialTrace trace) {
  check_args(placement, trials);
  const Geom geom = make_geom(model, placement);
  const LinkModel& lm = model.link;
  int l12 = lm.index_of(r12_bps), l21 = lm.index_of(r21_bps);
  if (l12 < 0 || l21 < 0) throw std::invalid_argument("rate is not part of the link model");

  long long fail12 = 0, fail21 = 0;
  for (int t = 0; t < trials; ++t) {
    StreamRng rng = base.derive(t);
    bool ok12 = decode_u(rng, 0, 1) >
                link_per_idx(lm, l12, geom.u12_db + to_db(fade_gain(rng, 0, 1, model.fading)));
    bool ok21 = decode_u(rng, 1, 0) >
                link_per_idx(lm, l21, geom.u12_db + to_db(fade_gain(rng, 1, 0, model.fading)));
    fail12 += !ok12;
    fail21 += !ok21;
    if (trace.outcomes) trace.outcomes->push_back({t, 0, ok21, ok12});
    if (trace.hops && t == 0) {
      trace.hops->push_back({0, {0}, {1}});
      trace.hops->push_back({1, {1}, {0}});
    }
  }
  PerEstimate e;
  e.scheme = SchemeKind::direct;
  e.p12 = estimate_ratio(fail12, trials);
  e.p21 = estimate_ratio(fail21, trials);
  e.trials = trials;
  return e;
}

PerEstimate estimate_rdstc(const SimModel& model, const NodePlacement& placement, Direction dir,
                           double r_src_bps, double r_relay_bps, int trials, StreamRng base,
                           TrialTrace trace) {
  check_args(placement, trials);
  const Geom geom = make_geom(model, placement);
  const LinkModel& lm = model.link;
  int lsrc = lm.index_of(r_src_bps), lrel = lm.index_of(r_relay_bps);
  if (lsrc < 0 || lrel < 0) throw std::invalid_argument("rate is not part of the link model");

  const bool fwd = dir == Direction::u1_to_u2;
  const uint64_t src = fwd ? 0 : 1, dst = fwd ? 1 : 0;
  const std::vector<double>& src_db = fwd ? geom.d1_db : geom.d2_db;
  const std::vector<double>& dst_lin = fwd ? geom.d2_lin : geom.d1_lin;
  const size_t n = placement.relays.size();

  // Pass 1: mean relay-set size over the identical trials of pass 2.
  long long k_sum = 0;
  for (int t = 0; t < trials; ++t) {
    StreamRng rng = base.derive(t);
    for (size_t i = 0; i < n; ++i) {
      double snr = src_db[i] + to_db(fade_gain(rng, src, 2 + i, model.fading));
      k_sum += decode_u(rng, src, 2 + i) > link_per_idx(lm, lsrc, snr);
    }
  }
  const double k_avg = estimate_ratio(k_sum, trials);
  const double frac = relay_power_fraction(k_avg);

  long long fail = 0;
  std::vector<double> gather;
  for (int t = 0; t < trials; ++t) {
    StreamRng rng = base.derive(t);
    bool direct_ok =
        decode_u(rng, src, dst) >
        link_per_idx(lm, lsrc, geom.u12_db + to_db(fade_gain(rng, src, dst, model.fading)));
    gather.clear();
    std::vector<int> members;
    for (size_t i = 0; i < n; ++i) {
      double snr = src_db[i] + to_db(fade_gain(rng, src, 2 + i, model.fading));
      if (decode_u(rng, src, 2 + i) > link_per_idx(lm, lsrc, snr)) {
        gather.push_back(dst_lin[i] * fade_gain(rng, 2 + i, dst, model.fading));
        members.push_back(static_cast<int>(2 + i));
      }
    }
    bool relay_ok = false;
    if (!gather.empty()) {
      double eff_db = to_db(rdstc_effective_snr(gather, frac, model.rdstc));
      relay_ok = decode_u(rng, kEnsembleTx, dst) > link_per_idx(lm, lrel, eff_db);
    }
    bool ok = direct_ok || relay_ok;
    fail += !ok;
    if (trace.outcomes)
      trace.outcomes->push_back({t, static_cast<int>(gather.size()), !fwd && ok, fwd && ok});
    if (trace.hops && t == 0) {
      std::vector<int> listeners{static_cast<int>(dst)};
      for (size_t i = 0; i < n; ++i) listeners.push_back(static_cast<int>(2 + i));
      trace.hops->push_back({0, {static_cast<int>(src)}, listeners});
      trace.hops->push_back({1, members, {static_cast<int>(dst)}});
    }
  }

  PerEstimate e;
  e.scheme = SchemeKind::rdstc;
  if (fwd)
    e.p12 = estimate_ratio(fail, trials);
  else
    e.p21 = estimate_ratio(fail, trials);
  e.avg_relay_count = k_avg;
  e.trials = trials;
  return e;
}

namespace {

// Shared worker for the hop-reordered and network-coded schemes: both first
// let the two users transmit, form the relay set from the nodes that decoded
// both packets, and forward with per-relay power 1/max(K,1). The only
// channel-level difference is the relay rate used toward each user, so the
// network-coded estimator passes the same rate for both directions.
PerEstimate estimate_joint_relay(const SimModel& model, const NodePlacement& placement,
                                 double r12_bps, double r21_bps, double to_u2_bps,
                                 double to_u1_bps, int trials, StreamRng base, bool network_coded,
                                 TrialTrace trace) {
  check_args(placement, trials);
  const Geom geom = make_geom(model, placement);
  const LinkModel& lm = model.link;
  int l12 = lm.index_of(r12_bps), l21 = lm.index_of(r21_bps);
  int lr2 = lm.index_of(to_u2_bps), lr1 = lm.index_of(to_u1_bps);
  if (l12 < 0 || l21 < 0 || lr2 < 0 || lr1 < 0)
    throw std::invalid_argument("rate is not part of the link model");
  const size_t n = placement.relays.size();

  long long k_sum = 0;
  for (int t = 0; t < trials; ++t) {
    StreamRng rng = base.derive(t);
    for (size_t i = 0; i < n; ++i) {
      double snr1 = geom.d1_db[i] + to_db(fade_gain(rng, 0, 2 + i, model.fading));
      double snr2 = geom.d2_db[i] + to_db(fade_gain(rng, 1, 2 + i, model.fading));
      k_sum += (decode_u(rng, 0, 2 + i) > link_per_idx(lm, l12, snr1)) &&
               (decode_u(rng, 1, 2 + i) > link_per_idx(lm, l21, snr2));
    }
  }
  const double k_avg = estimate_ratio(k_sum, trials);
  const double frac = relay_power_fraction(k_avg);

  long long fail12 = 0, fail21 = 0;
  std::vector<double> to_u2, to_u1;
  for (int t = 0; t < trials; ++t) {
    StreamRng rng = base.derive(t);
    bool direct12 =
        decode_u(rng, 0, 1) >
        link_per_idx(lm, l12, geom.u12_db + to_db(fade_gain(rng, 0, 1, model.fading)));
    bool direct21 =
        decode_u(rng, 1, 0) >
        link_per_idx(lm, l21, geom.u12_db + to_db(fade_gain(rng, 1, 0, model.fading)));
    to_u2.clear();
    to_u1.clear();
    std::vector<int> members;
    for (size_t i = 0; i < n; ++i) {
      double snr1 = geom.d1_db[i] + to_db(fade_gain(rng, 0, 2 + i, model.fading));
      double snr2 = geom.d2_db[i] + to_db(fade_gain(rng, 1, 2 + i, model.fading));
      if ((decode_u(rng, 0, 2 + i) > link_per_idx(lm, l12, snr1)) &&
          (decode_u(rng, 1, 2 + i) > link_per_idx(lm, l21, snr2))) {
        to_u2.push_back(geom.d2_lin[i] * fade_gain(rng, 2 + i, 1, model.fading));
        to_u1.push_back(geom.d1_lin[i] * fade_gain(rng, 2 + i, 0, model.fading));
        members.push_back(static_cast<int>(2 + i));
      }
    }
    bool relay12 = false, relay21 = false;
    if (!members.empty()) {
      relay12 = decode_u(rng, kEnsembleTx, 1) >
                link_per_idx(lm, lr2, to_db(rdstc_effective_snr(to_u2, frac, model.rdstc)));
      relay21 = decode_u(rng, kEnsembleTx, 0) >
                link_per_idx(lm, lr1, to_db(rdstc_effective_snr(to_u1, frac, model.rdstc)));
    }
    bool ok12 = direct12 || relay12;
    bool ok21 = direct21 || relay21;
    fail12 += !ok12;
    fail21 += !ok21;
    if (trace.outcomes)
      trace.outcomes->push_back({t, static_cast<int>(members.size()), ok21, ok12});
    if (trace.hops && t == 0) {
      std::vector<int> hear1{1}, hear2{0};
      for (size_t i = 0; i < n; ++i) {
        hear1.push_back(static_cast<int>(2 + i));
        hear2.push_back(static_cast<int>(2 + i));
      }
      trace.hops->push_back({0, {0}, hear1});
      trace.hops->push_back({1, {1}, hear2});
      if (network_coded) {
        trace.hops->push_back({2, members, {0, 1}});
      } else {
        trace.hops->push_back({2, members, {1}});
        trace.hops->push_back({3, members, {0}});
      }
    }
  }

  PerEstimate e;
  e.scheme = network_coded ? SchemeKind::rdstc_nc : SchemeKind::rdstc_hr;
  e.p12 = estimate_ratio(fail12, trials);
  e.p21 = estimate_ratio(fail21, trials);
  e.avg_relay_count = k_avg;
  e.trials = trials;
  return e;
}

}  // namespace

PerEstimate estimate_rdstc_hr(const SimModel& model, const NodePlacement& placement,
                              double r12_bps, double r21_bps, double rr2_bps, double rr1_bps,
                              int trials, StreamRng base, TrialTrace trace) {
  return estimate_joint_relay(model, placement, r12_bps, r21_bps, rr2_bps, rr1_bps, trials, base,
                              false, trace);
}

PerEstimate estimate_rdstc_nc(const SimModel& model, const NodePlacement& placement,
                              double r12_bps, double r21_bps, double rr_bps, int trials,
                              StreamRng base, TrialTrace trace) {
  return estimate_joint_relay(model, placement, r12_bps, r21_bps, rr_bps, rr_bps, trials, base,
                              true, trace);
}

namespace {

struct Counters {
  std::vector<long long> direct12_fail, direct21_fail;  // [R]
  std::vector<long long> rdstc12_fail, rdstc21_fail;    // [R*R]
  std::vector<long long> joint12_fail, joint21_fail;    // [R*R*R]

  explicit Counters(int rates)
      : direct12_fail(rates, 0),
        direct21_fail(rates, 0),
        rdstc12_fail(rates * rates, 0),
        rdstc21_fail(rates * rates, 0),
        joint12_fail(static_cast<size_t>(rates) * rates * rates, 0),
        joint21_fail(static_cast<size_t>(rates) * rates * rates, 0) {}

  void merge(const Counters& o) {
    auto add = [](std::vector<long long>& a, const std::vector<long long>& b) {
      for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    add(direct12_fail, o.direct12_fail);
    add(direct21_fail, o.direct21_fail);
    add(rdstc12_fail, o.rdstc12_fail);
    add(rdstc21_fail, o.rdstc21_fail);
    add(joint12_fail, o.joint12_fail);
    add(joint21_fail, o.joint21_fail);
  }
};

struct KCounters {
  std::vector<long long> k12, k21;  // [R]
  std::vector<long long> kj;        // [R*R]

  explicit KCounters(int rates)
      : k12(rates, 0), k21(rates, 0), kj(static_cast<size_t>(rates) * rates, 0) {}

  void merge(const KCounters& o) {
    for (size_t i = 0; i < k12.size(); ++i) k12[i] += o.k12[i];
    for (size_t i = 0; i < k21.size(); ++i) k21[i] += o.k21[i];
    for (size_t i = 0; i < kj.size(); ++i) kj[i] += o.kj[i];
  }
};

struct TrialScratch {
  std::vector<uint8_t> succ1, succ2;  // [n*R] node decoded user packet at rate
  std::vector<uint8_t> succ01, succ10;  // [R] destination decoded directly
  std::vector<double> w1, w2;            // [n] full-power relay->user gain
  double us1 = 0.0, us2 = 0.0;           // combined-transmission decode draws
  std::vector<double> gather1, gather2;
};

// Evaluates all per-link decode events of one trial. Weights are filled only
// when `with_weights` (pass 1 needs none).
void fill_trial(const SimModel& model, const Geom& geom, const std::vector<int>& lidx,
                StreamRng rng, bool with_weights, TrialScratch& s) {
  const LinkModel& lm = model.link;
  const int R = static_cast<int>(lidx.size());
  const size_t n = geom.d1_db.size();
  s.succ1.assign(n * R, 0);
  s.succ2.assign(n * R, 0);
  s.succ01.assign(R, 0);
  s.succ10.assign(R, 0);
  for (size_t i = 0; i < n; ++i) {
    double snr1 = geom.d1_db[i] + to_db(fade_gain(rng, 0, 2 + i, model.fading));
    double u1 = decode_u(rng, 0, 2 + i);
    double snr2 = geom.d2_db[i] + to_db(fade_gain(rng, 1, 2 + i, model.fading));
    double u2 = decode_u(rng, 1, 2 + i);
    for (int a = 0; a < R; ++a) {
      s.succ1[i * R + a] = u1 > link_per_idx(lm, lidx[a], snr1);
      s.succ2[i * R + a] = u2 > link_per_idx(lm, lidx[a], snr2);
    }
  }
  {
    double snr = geom.u12_db + to_db(fade_gain(rng, 0, 1, model.fading));
    double u = decode_u(rng, 0, 1);
    for (int a = 0; a < R; ++a) s.succ01[a] = u > link_per_idx(lm, lidx[a], snr);
  }
  {
    double snr = geom.u12_db + to_db(fade_gain(rng, 1, 0, model.fading));
    double u = decode_u(rng, 1, 0);
    for (int a = 0; a < R; ++a) s.succ10[a] = u > link_per_idx(lm, lidx[a], snr);
  }
  if (with_weights) {
    s.w1.resize(n);
    s.w2.resize(n);
    for (size_t i = 0; i < n; ++i) {
      s.w2[i] = geom.d2_lin[i] * fade_gain(rng, 2 + i, 1, model.fading);
      s.w1[i] = geom.d1_lin[i] * fade_gain(rng, 2 + i, 0, model.fading);
    }
    s.us1 = decode_u(rng, kEnsembleTx, 0);
    s.us2 = decode_u(rng, kEnsembleTx, 1);
  }
}

void accumulate_k(const TrialScratch& s, int R, size_t n, KCounters& k) {
  for (size_t i = 0; i < n; ++i) {
    for (int a = 0; a < R; ++a) {
      k.k12[a] += s.succ1[i * R + a];
      k.k21[a] += s.succ2[i * R + a];
      if (s.succ1[i * R + a]) {
        for (int b = 0; b < R; ++b) k.kj[a * R + b] += s.succ2[i * R + b];
      }
    }
  }
}

void accumulate_fails(const SimModel& model, const std::vector<int>& lidx, const PerTables& t,
                      TrialScratch& s, size_t n, Counters& c) {
  const LinkModel& lm = model.link;
  const int R = static_cast<int>(lidx.size());
  for (int a = 0; a < R; ++a) {
    c.direct12_fail[a] += !s.succ01[a];
    c.direct21_fail[a] += !s.succ10[a];
  }

  // Per-direction relay sets (plain scheme).
  for (int a = 0; a < R; ++a) {
    s.gather2.clear();
    for (size_t i = 0; i < n; ++i)
      if (s.succ1[i * R + a]) s.gather2.push_back(s.w2[i]);
    if (s.gather2.empty()) {
      for (int rr = 0; rr < R; ++rr) c.rdstc12_fail[a * R + rr] += !s.succ01[a];
    } else {
      double eff_db = to_db(
          rdstc_effective_snr(s.gather2, relay_power_fraction(t.rdstc_k12[a]), model.rdstc));
      for (int rr = 0; rr < R; ++rr) {
        bool relay_ok = s.us2 > link_per_idx(lm, lidx[rr], eff_db);
        c.rdstc12_fail[a * R + rr] += !(s.succ01[a] || relay_ok);
      }
    }
    s.gather1.clear();
    for (size_t i = 0; i < n; ++i)
      if (s.succ2[i * R + a]) s.gather1.push_back(s.w1[i]);
    if (s.gather1.empty()) {
      for (int rr = 0; rr < R; ++rr) c.rdstc21_fail[a * R + rr] += !s.succ10[a];
    } else {
      double eff_db = to_db(
          rdstc_effective_snr(s.gather1, relay_power_fraction(t.rdstc_k21[a]), model.rdstc));
      for (int rr = 0; rr < R; ++rr) {
        bool relay_ok = s.us1 > link_per_idx(lm, lidx[rr], eff_db);
        c.rdstc21_fail[a * R + rr] += !(s.succ10[a] || relay_ok);
      }
    }
  }

  // Shared relay set pinned by both source rates (hop-reordered and
  // network-coded schemes).
  for (int a = 0; a < R; ++a) {
    for (int b = 0; b < R; ++b) {
      s.gather2.clear();
      s.gather1.clear();
      for (size_t i = 0; i < n; ++i) {
        if (s.succ1[i * R + a] && s.succ2[i * R + b]) {
          s.gather2.push_back(s.w2[i]);
          s.gather1.push_back(s.w1[i]);
        }
      }
      size_t cell = static_cast<size_t>(a * R + b) * R;
      if (s.gather2.empty()) {
        for (int rr = 0; rr < R; ++rr) {
          c.joint12_fail[cell + rr] += !s.succ01[a];
          c.joint21_fail[cell + rr] += !s.succ10[b];
        }
        continue;
      }
      double frac = relay_power_fraction(t.joint_k[a * R + b]);
      double eff2_db = to_db(rdstc_effective_snr(s.gather2, frac, model.rdstc));
      double eff1_db = to_db(rdstc_effective_snr(s.gather1, frac, model.rdstc));
      for (int rr = 0; rr < R; ++rr) {
        bool relay12 = s.us2 > link_per_idx(lm, lidx[rr], eff2_db);
        bool relay21 = s.us1 > link_per_idx(lm, lidx[rr], eff1_db);
        c.joint12_fail[cell + rr] += !(s.succ01[a] || relay12);
        c.joint21_fail[cell + rr] += !(s.succ10[b] || relay21);
      }
    }
  }
}

}  // namespace

PerTables compute_per_tables(const SimModel& model, const NodePlacement& placement, int trials,
                             StreamRng base, Exec exec) {
  check_args(placement, trials);
  const std::vector<int> lidx = map_rates(model);
  const Geom geom = make_geom(model, placement);
  const int R = static_cast<int>(lidx.size());
  const size_t n = placement.relays.size();

  PerTables t;
  t.num_rates = R;
  t.trials = trials;

  // Pass 1: relay-set sizes, which fix the per-relay power fractions. All
  // accumulators are integers, so the merged totals do not depend on the
  // schedule and the serial and parallel paths agree bit for bit.
  KCounters ksum(R);
  if (exec == Exec::parallel) {
#pragma omp parallel
    {
      KCounters local(R);
      TrialScratch s;
#pragma omp for schedule(static) nowait
      for (int trial = 0; trial < trials; ++trial) {
        fill_trial(model, geom, lidx, base.derive(trial), false, s);
        accumulate_k(s, R, n, local);
      }
#pragma omp critical(twr_pertables_k)
      ksum.merge(local);
    }
  } else {
    TrialScratch s;
    for (int trial = 0; trial < trials; ++trial) {
      fill_trial(model, geom, lidx, base.derive(trial), false, s);
      accumulate_k(s, R, n, ksum);
    }
  }
  t.rdstc_k12.resize(R);
  t.rdstc_k21.resize(R);
  t.joint_k.resize(static_cast<size_t>(R) * R);
  for (int a = 0; a < R; ++a) {
    t.rdstc_k12[a] = estimate_ratio(ksum.k12[a], trials);
    t.rdstc_k21[a] = estimate_ratio(ksum.k21[a], trials);
  }
  for (size_t i = 0; i < t.joint_k.size(); ++i) t.joint_k[i] = estimate_ratio(ksum.kj[i], trials);

  // Pass 2 re-derives the identical draws and counts end-to-end failures.
  Counters fails(R);
  if (exec == Exec::parallel) {
#pragma omp parallel
    {
      Counters local(R);
      TrialScratch s;
#pragma omp for schedule(static) nowait
      for (int trial = 0; trial < trials; ++trial) {
        fill_trial(model, geom, lidx, base.derive(trial), true, s);
        accumulate_fails(model, lidx, t, s, n, local);
      }
#pragma omp critical(twr_pertables_fail)
      fails.merge(local);
    }
  } else {
    TrialScratch s;
    for (int trial = 0; trial < trials; ++trial) {
      fill_trial(model, geom, lidx, base.derive(trial), true, s);
      accumulate_fails(model, lidx, t, s, n, fails);
    }
  }

  auto ratios = [&](const std::vector<long long>& counts) {
    std::vector<double> out(counts.size());
    for (size_t i = 0; i < counts.size(); ++i) out[i] = estimate_ratio(counts[i], trials);
    return out;
  };
  t.direct_p12 = ratios(fails.direct12_fail);
  t.direct_p21 = ratios(fails.direct21_fail);
  t.rdstc_p12 = ratios(fails.rdstc12_fail);
  t.rdstc_p21 = ratios(fails.rdstc21_fail);
  t.joint_p12 = ratios(fails.joint12_fail);
  t.joint_p21 = ratios(fails.joint21_fail);
  return t;
}

namespace {

std::string model_fingerprint(const SimModel& model, int trials, uint64_t root_key) {
  std::string s = "rates:";
  for (double r : model.system.rate_table_bps) s += fmt_double(r) + ",";
  s += ";pl:" + fmt_double(model.pathloss.exponent) + "," + fmt_double(model.pathloss.ref_distance_m) +
       "," + fmt_double(model.pathloss.ref_snr_db);
  s += ";fading:" + std::string(model.fading == FadingKind::rayleigh ? "rayleigh" : "none");
  s += ";rdstc:" + std::to_string(model.rdstc.stc_dimension) + "," +
       std::to_string(model.rdstc.cap_at_stc_dimension ? 1 : 0);
  s += ";trials:" + std::to_string(trials);
  s += ";root:" + std::to_string(root_key);
  s += ";link:";
  for (const RateCurve& c : model.link.curves) {
    s += fmt_double(c.rate_bps) + "[";
    for (size_t i = 0; i < c.snr_db.size(); ++i)
      s += fmt_double(c.snr_db[i]) + ":" + fmt_double(c.per[i]) + ",";
    s += "]";
  }
  return s;
}

constexpr const char* kCacheMagic = "twr-per-tables v1";

bool load_tables_file(const std::filesystem::path& path, int num_rates, int trials,
                      PerTables& out) {
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  if (!std::getline(in, line) || line != kCacheMagic) return false;
  if (!std::getline(in, line)) return false;
  auto meta = split_csv_line(line);
  if (meta.size() != 2) return false;
  if (parse_int(meta[0], "num_rates") != num_rates || parse_int(meta[1], "trials") != trials)
    return false;
  PerTables t;
  t.num_rates = num_rates;
  t.trials = trials;
  size_t r = num_rates, r2 = r * r, r3 = r2 * r;
  t.direct_p12.resize(r);
  t.direct_p21.resize(r);
  t.rdstc_p12.resize(r2);
  t.rdstc_p21.resize(r2);
  t.rdstc_k12.resize(r);
  t.rdstc_k21.resize(r);
  t.joint_p12.resize(r3);
  t.joint_p21.resize(r3);
  t.joint_k.resize(r2);
  auto table = [&](const std::string& name) -> std::vector<double>* {
    if (name == "direct_p12") return &t.direct_p12;
    if (name == "direct_p21") return &t.direct_p21;
    if (name == "rdstc_p12") return &t.rdstc_p12;
    if (name == "rdstc_p21") return &t.rdstc_p21;
    if (name == "rdstc_k12") return &t.rdstc_k12;
    if (name == "rdstc_k21") return &t.rdstc_k21;
    if (name == "joint_p12") return &t.joint_p12;
    if (name == "joint_p21") return &t.joint_p21;
    if (name == "joint_k") return &t.joint_k;
    return nullptr;
  };
  std::vector<size_t> seen(9, 0);
  size_t expected = 2 * r + 2 * r2 + 2 * r + 2 * r3 + r2;
  size_t rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 3) return false;
    std::vector<double>* vec = table(f[0]);
    if (!vec) return false;
    size_t idx = static_cast<size_t>(parse_int(f[1], "index"));
    if (idx >= vec->size()) return false;
    (*vec)[idx] = parse_double(f[2], "value");
    ++rows;
  }
  if (rows != expected) return false;
  out = std::move(t);
  return true;
}

void save_tables_file(const std::filesystem::path& path, const PerTables& t) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) return;
    out << kCacheMagic << '\n' << t.num_rates << ',' << t.trials << '\n';
    auto dump = [&](const char* name, const std::vector<double>& v) {
      for (size_t i = 0; i < v.size(); ++i)
        out << name << ',' << i << ',' << fmt_double(v[i]) << '\n';
    };
    dump("direct_p12", t.direct_p12);
    dump("direct_p21", t.direct_p21);
    dump("rdstc_p12", t.rdstc_p12);
    dump("rdstc_p21", t.rdstc_p21);
    dump("rdstc_k12", t.rdstc_k12);
    dump("rdstc_k21", t.rdstc_k21);
    dump("joint_p12", t.joint_p12);
    dump("joint_p21", t.joint_p21);
    dump("joint_k", t.joint_k);
    if (!out) return;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
}

}  // namespace

PerTableProvider::PerTableProvider(const SimModel& model, int trials, StreamRng root,
                                   std::optional<std::filesystem::path> cache_dir, Exec exec)
    : model_(model),
      trials_(trials),
      root_(root),
      cache_dir_(std::move(cache_dir)),
      exec_(exec),
      model_fingerprint_(model_fingerprint(model, trials, root.key())) {
  if (cache_dir_) std::filesystem::create_directories(*cache_dir_);
}

StreamRng PerTableProvider::base_for(const NodePlacement& placement) const {
  return root_.derive(placement_hash(placement));
}

uint64_t PerTableProvider::cache_key(const NodePlacement& placement) const {
  return fnv1a64(model_fingerprint_, placement_hash(placement) ^ 0xcbf29ce484222325ull);
}

const PerTables& PerTableProvider::tables_for(const NodePlacement& placement) {
  const uint64_t key = cache_key(placement);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }

  const int num_rates = static_cast<int>(model_.system.rate_table_bps.size());
  std::filesystem::path file;
  PerTables fresh;
  bool loaded = false;
  if (cache_dir_) {
    char name[32];
    std::snprintf(name, sizeof(name), "%016llx.csv", static_cast<unsigned long long>(key));
    file = *cache_dir_ / name;
    loaded = load_tables_file(file, num_rates, trials_, fresh);
  }
  if (!loaded) {
    fresh = compute_per_tables(model_, placement, trials_, base_for(placement), exec_);
    if (cache_dir_) save_tables_file(file, fresh);
  }

  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = memo_.emplace(key, std::move(fresh));
  (void)inserted;  // a concurrent insert of the same key computed identical values
  return it->second;
}

}  // namespace twr
