#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "twr/config.hpp"
#include "twr/geometry.hpp"
#include "twr/rng.hpp"

namespace twr {

// Log-distance path loss applied to a fixed transmit power, expressed as the
// mean SNR seen at ref_distance_m.
struct PathLossModel {
  double exponent = 2.7;
  double ref_distance_m = 1.0;
  double ref_snr_db = 67.0;
};

enum class FadingKind {
  rayleigh,  // unit-mean exponential power gain per packet
  none,      // fixed unit gain
};

// How a destination combines the signal of the randomized space-time coded
// relay set. The default credits the full power sum of all active relays;
// the capped variant only counts the strongest stc_dimension branches.
struct RdstcModel {
  int stc_dimension = 4;
  bool cap_at_stc_dimension = false;
};

// Sampled SNR -> packet error rate curve for one PHY rate. Samples are sorted
// by SNR and interpolated piecewise-linearly in the dB domain; queries outside
// the sampled range clamp to the end samples.
struct RateCurve {
  double rate_bps = 0.0;
  std::vector<double> snr_db;
  std::vector<double> per;
};

struct LinkModel {
  std::vector<RateCurve> curves;  // sorted by rate_bps ascending

  int index_of(double rate_bps) const;  // -1 when absent
};

struct FadingDraw {
  double power_gain = 1.0;
};

double mean_snr_db(Vec2 tx, Vec2 rx, const PathLossModel& model, double power_fraction = 1.0);

FadingDraw draw_fading(RngSequence& rng, FadingKind kind = FadingKind::rayleigh);

double link_per(const LinkModel& model, double rate_bps, double inst_snr_db);
double link_per_idx(const LinkModel& model, int rate_idx, double inst_snr_db);

// One Bernoulli packet decode at the given instantaneous SNR.
bool packet_success(const LinkModel& model, double rate_bps, double inst_snr_db,
                    RngSequence& rng);

// Equivalent post-combining SNR at a receiver of an R-DSTC transmission.
// `relay_gains` holds per-relay linear SNR contributions at full power
// (path loss times fading); each relay actually transmits with
// `per_relay_power_fraction` of full power. Empty lists are a caller error:
// with no active relay there is no transmission to decode.
double rdstc_effective_snr(std::span<const double> relay_gains, double per_relay_power_fraction,
                           const RdstcModel& model = RdstcModel{});

// Built-in waterfall curves shaped like 802.11g AWGN link curves for the
// default rate table.
LinkModel default_80211g_link_model();

// Flat curves: every rate has the given PER at any SNR. Test helper.
LinkModel constant_link_model(const std::vector<double>& rates_bps, double per);

LinkModel load_link_model_csv(const std::filesystem::path& path);
void save_link_model_csv(const LinkModel& model, const std::filesystem::path& path);

// Violations: unsorted/empty samples, PER outside [0,1], endpoints that do not
// span [<=1e-4, >=0.999], or curves that cross (PER must not decrease with
// rate at fixed SNR).
std::vector<std::string> validate_link_model(const LinkModel& model);

}  // namespace twr
