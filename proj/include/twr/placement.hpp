#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "twr/geometry.hpp"

namespace twr {

// One drop of the network: the two users plus the candidate relay field.
// Node ids used throughout the simulator: user1 = 0, user2 = 1, relay i = 2+i.
struct NodePlacement {
  Vec2 user1;
  Vec2 user2;
  std::vector<Vec2> relays;
};

struct PlacementEnsemble {
  Rect region;
  double relay_density = 0.0;  // relays per square meter
  double user_distance = 0.0;  // meters between the two users
  uint64_t seed = 0;
  std::vector<NodePlacement> placements;
};

// Draws `count` independent placements. Users sit symmetrically about the
// region center on the horizontal axis; the relay count of each placement is
// Poisson(density * area) and relay positions are i.i.d. uniform over the
// region. Placement i depends only on (seed, i), never on `count` or on the
// user distance, so ensembles with different user spacings share relay fields.
PlacementEnsemble generate_placements(const Rect& region, double relay_density,
                                      double user_distance, int count, uint64_t seed);

// Same layout but with a fixed relay count per placement instead of a
// Poisson draw.
PlacementEnsemble generate_placements_fixed(const Rect& region, int relay_count,
                                            double user_distance, int count, uint64_t seed);

void write_placements_csv(const PlacementEnsemble& ensemble, const std::filesystem::path& path);
PlacementEnsemble read_placements_csv(const std::filesystem::path& path);

// Content hash of the node coordinates; used to key RNG streams and caches.
uint64_t placement_hash(const NodePlacement& p);

}  // namespace twr
