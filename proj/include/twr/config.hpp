#pragma once

#include <string>
#include <vector>

namespace twr {

// Shared transmission parameters. Defaults model a delay-constrained video
// exchange over 802.11g PHY rates: each endpoint may spend a fraction beta
// of every t_delay window on this traffic, and a packet generation is useful
// only if enough of it decodes within the window.
struct SystemConfig {
  double beta = 0.1;                // fraction of airtime available per window
  double t_delay_s = 0.15;          // delivery deadline per packet generation
  double packet_size_bits = 12000;  // fixed packet payload, 1500 bytes
  double tau = 0.005;               // max acceptable post-FEC failure probability
  double per_cap = 0.25;            // rates with higher end-to-end PER are not considered
  std::vector<double> rate_table_bps = {6e6, 9e6, 12e6, 18e6, 24e6, 36e6, 48e6, 54e6};
  std::vector<double> time_partition_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
};

// Returns human-readable violations; empty means the config is usable.
std::vector<std::string> validate_config(const SystemConfig& cfg);

// Index into cfg.rate_table_bps, or -1 when the rate is not in the table.
// Matches with a small relative tolerance so values parsed from text hit.
int rate_index(const SystemConfig& cfg, double rate_bps);

}  // namespace twr
