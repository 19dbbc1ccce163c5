#include "twr/config.hpp"

#include <cmath>

#include "twr/textio.hpp"

namespace twr {

std::vector<std::string> validate_config(const SystemConfig& cfg) {
  std::vector<std::string> bad;
  if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) bad.push_back("beta must be in (0, 1]");
  if (!(cfg.t_delay_s > 0.0)) bad.push_back("t_delay_s must be positive");
  if (!(cfg.packet_size_bits > 0.0)) bad.push_back("packet_size_bits must be positive");
  if (!(cfg.tau >= 0.0 && cfg.tau <= 1.0)) bad.push_back("tau must be in [0, 1]");
  if (!(cfg.per_cap >= 0.0 && cfg.per_cap <= 1.0)) bad.push_back("per_cap must be in [0, 1]");
  if (cfg.rate_table_bps.empty()) bad.push_back("rate_table_bps must not be empty");
  for (size_t i = 0; i < cfg.rate_table_bps.size(); ++i) {
    if (!(cfg.rate_table_bps[i] > 0.0)) {
      bad.push_back("rate_table_bps entries must be positive");
      break;
    }
    if (i > 0 && !(cfg.rate_table_bps[i] > cfg.rate_table_bps[i - 1])) {
      bad.push_back("rate_table_bps must be strictly increasing");
      break;
    }
  }
  if (cfg.time_partition_grid.empty()) bad.push_back("time_partition_grid must not be empty");
  bool interior = false;
  for (double t : cfg.time_partition_grid) {
    if (!(t >= 0.0 && t <= 1.0)) {
      bad.push_back("time_partition_grid values must be in [0, 1]");
      break;
    }
    if (t > 0.0 && t < 1.0) interior = true;
  }
  if (!cfg.time_partition_grid.empty() && !interior)
    bad.push_back("time_partition_grid needs at least one interior value");
  return bad;
}

int rate_index(const SystemConfig& cfg, double rate_bps) {
  for (size_t i = 0; i < cfg.rate_table_bps.size(); ++i) {
    double r = cfg.rate_table_bps[i];
    if (std::abs(r - rate_bps) <= 1e-6 * std::max(1.0, std::abs(r))) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace twr
