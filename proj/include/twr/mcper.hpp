#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "twr/config.hpp"
#include "twr/linkmodel.hpp"
#include "twr/placement.hpp"
#include "twr/rng.hpp"
#include "twr/types.hpp"

namespace twr {

// Everything the channel simulation needs besides the node layout.
struct SimModel {
  SystemConfig system;
  PathLossModel pathloss;
  LinkModel link;
  FadingKind fading = FadingKind::rayleigh;
  RdstcModel rdstc;
};

// Monte Carlo PER estimate. Directions a given estimator does not simulate
// stay unset. avg_relay_count is the mean number of relays that forwarded a
// packet (the K that the 1/K relay power normalization is based on).
struct PerEstimate {
  SchemeKind scheme = SchemeKind::direct;
  std::optional<double> p12;
  std::optional<double> p21;
  double avg_relay_count = 0.0;
  int trials = 0;

  double per(Direction d) const;
  double stderr_of(Direction d) const;  // sqrt(p(1-p)/trials)
};

struct TrialOutcome {
  int trial = 0;
  int relay_set_size = 0;
  bool decoded_at_1 = false;  // user 1 obtained user 2's packet
  bool decoded_at_2 = false;  // user 2 obtained user 1's packet
};

// Per-hop participant sets of one simulated trial; lets tests check that no
// node transmits and receives in the same hop.
struct HopRecord {
  int hop = 0;
  std::vector<int> transmitters;  // node ids
  std::vector<int> receivers;
};

// Optional sinks filled by the pointwise estimators when non-null.
struct TrialTrace {
  std::vector<TrialOutcome>* outcomes = nullptr;
  std::vector<HopRecord>* hops = nullptr;  // hops of trial 0 only
};

void write_trace_csv(const std::vector<TrialOutcome>& rows, const std::filesystem::path& path);

// Pointwise estimators: straightforward serial reference implementations.
// All schemes draw fading and decode randomness from per-(trial, link) keys
// derived from `base` alone, so estimates with the same base are coupled
// trial-by-trial across schemes and rate choices: a relay scheme can only
// add decode opportunities on top of the identical direct-link outcome.
//
// Relay power uses two passes: pass 1 measures the mean active-relay count
// K over the same trials, pass 2 gives every relay 1/max(K,1) of full power.
PerEstimate estimate_direct(const SimModel& model, const NodePlacement& placement, double r12_bps,
                            double r21_bps, int trials, StreamRng base, TrialTrace trace = {});
PerEstimate estimate_rdstc(const SimModel& model, const NodePlacement& placement, Direction dir,
                           double r_src_bps, double r_relay_bps, int trials, StreamRng base,
                           TrialTrace trace = {});
PerEstimate estimate_rdstc_hr(const SimModel& model, const NodePlacement& placement,
                              double r12_bps, double r21_bps, double rr2_bps, double rr1_bps,
                              int trials, StreamRng base, TrialTrace trace = {});
PerEstimate estimate_rdstc_nc(const SimModel& model, const NodePlacement& placement,
                              double r12_bps, double r21_bps, double rr_bps, int trials,
                              StreamRng base, TrialTrace trace = {});

// PER of every scheme at every rate combination of one placement, computed
// from one shared set of trials. Bit-identical to calling the pointwise
// estimators per combination with the same base, and (because all counters
// are integers) bit-identical between serial and OpenMP execution.
//
// rdstc-hr and rdstc-nc share tables: both forward over the relay set that
// decoded each user transmission, and the network-coded transmission toward
// one user is channel-wise the same event as the hop-reordered forward.
struct PerTables {
  int num_rates = 0;
  int trials = 0;

  // [a]: direction 1->2 at source rate index a (2->1 uses [b]).
  std::vector<double> direct_p12, direct_p21;

  // [a * R + rr]: source rate a, relay rate rr; relay set = decoders of the
  // source packet for that direction alone.
  std::vector<double> rdstc_p12, rdstc_p21;
  std::vector<double> rdstc_k12, rdstc_k21;  // [a]

  // [(a * R + b) * R + rr]: both source rates pin the shared relay set.
  std::vector<double> joint_p12, joint_p21;
  std::vector<double> joint_k;  // [a * R + b]

  int idx2(int a, int rr) const { return a * num_rates + rr; }
  int idx3(int a, int b, int rr) const { return (a * num_rates + b) * num_rates + rr; }
};

PerTables compute_per_tables(const SimModel& model, const NodePlacement& placement, int trials,
                             StreamRng base, Exec exec = Exec::parallel);

// Computes tables on demand and memoizes them, keyed by placement content.
// The per-placement RNG base is derived from (root, placement hash), so a
// given placement always sees the same draws no matter where it appears.
// With a cache directory set, tables are also persisted across runs.
class PerTableProvider {
 public:
  PerTableProvider(const SimModel& model, int trials, StreamRng root,
                   std::optional<std::filesystem::path> cache_dir = std::nullopt,
                   Exec exec = Exec::parallel);

  const PerTables& tables_for(const NodePlacement& placement);

  StreamRng base_for(const NodePlacement& placement) const;

 private:
  uint64_t cache_key(const NodePlacement& placement) const;

  SimModel model_;
  int trials_;
  StreamRng root_;
  std::optional<std::filesystem::path> cache_dir_;
  Exec exec_;
  std::string model_fingerprint_;
  std::unordered_map<uint64_t, PerTables> memo_;
  std::mutex mu_;
};

}  // namespace twr
