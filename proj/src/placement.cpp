#include "twr/placement.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "twr/rng.hpp"
#include "twr/textio.hpp"

namespace twr {

namespace {

// Knuth's product method. exp(-mean) underflows for large means, so split
// into independent draws of mean <= 60 and sum (Poisson additivity).
int poisson_draw(RngSequence& rng, double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson mean must be non-negative");
  if (mean == 0.0) return 0;
  int chunks = static_cast<int>(std::ceil(mean / 60.0));
  double chunk_mean = mean / chunks;
  double limit = std::exp(-chunk_mean);
  int total = 0;
  for (int c = 0; c < chunks; ++c) {
    int k = 0;
    double prod = 1.0;
    do {
      ++k;
      prod *= rng.uniform01();
    } while (prod > limit);
    total += k - 1;
  }
  return total;
}

void place_users(const Rect& region, double user_distance, NodePlacement& p) {
  Vec2 c = region.center();
  p.user1 = {c.x - user_distance / 2.0, c.y};
  p.user2 = {c.x + user_distance / 2.0, c.y};
}

void check_geometry(const Rect& region, double user_distance) {
  if (!(region.width > 0.0 && region.height > 0.0))
    throw std::invalid_argument("region must have positive area");
  if (!(user_distance >= 0.0)) throw std::invalid_argument("user distance must be non-negative");
  if (user_distance > region.width)
    throw std::invalid_argument("user distance exceeds the region extent");
}

NodePlacement draw_placement(const Rect& region, double user_distance, StreamRng stream,
                             int relay_count_or_negative, double density) {
  NodePlacement p;
  place_users(region, user_distance, p);
  RngSequence rng(stream);
  int k = relay_count_or_negative >= 0 ? relay_count_or_negative
                                       : poisson_draw(rng, density * region.area());
  p.relays.reserve(k);
  for (int i = 0; i < k; ++i) {
    double x = region.xmin + rng.uniform01() * region.width;
    double y = region.ymin + rng.uniform01() * region.height;
    p.relays.push_back({x, y});
  }
  return p;
}

}  // namespace

PlacementEnsemble generate_placements(const Rect& region, double relay_density,
                                      double user_distance, int count, uint64_t seed) {
  check_geometry(region, user_distance);
  if (!(relay_density >= 0.0)) throw std::invalid_argument("relay density must be non-negative");
  if (count <= 0) throw std::invalid_argument("placement count must be positive");
  PlacementEnsemble e{region, relay_density, user_distance, seed, {}};
  StreamRng base(seed);
  e.placements.reserve(count);
  for (int i = 0; i < count; ++i)
    e.placements.push_back(
        draw_placement(region, user_distance, base.derive(i), -1, relay_density));
  return e;
}

PlacementEnsemble generate_placements_fixed(const Rect& region, int relay_count,
                                            double user_distance, int count, uint64_t seed) {
  check_geometry(region, user_distance);
  if (relay_count < 0) throw std::invalid_argument("relay count must be non-negative");
  if (count <= 0) throw std::invalid_argument("placement count must be positive");
  PlacementEnsemble e{region, 0.0, user_distance, seed, {}};
  StreamRng base(seed);
  e.placements.reserve(count);
  for (int i = 0; i < count; ++i)
    e.placements.push_back(draw_placement(region, user_distance, base.derive(i), relay_count, 0.0));
  return e;
}

void write_placements_csv(const PlacementEnsemble& ensemble, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "placement,node,role,x_m,y_m\n";
  for (size_t i = 0; i < ensemble.placements.size(); ++i) {
    const NodePlacement& p = ensemble.placements[i];
    auto row = [&](int node, const char* role, Vec2 v) {
      out << i << ',' << node << ',' << role << ',' << fmt_double(v.x) << ',' << fmt_double(v.y)
          << '\n';
    };
    row(0, "user1", p.user1);
    row(1, "user2", p.user2);
    for (size_t r = 0; r < p.relays.size(); ++r)
      row(static_cast<int>(2 + r), "relay", p.relays[r]);
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

PlacementEnsemble read_placements_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) !=
          std::vector<std::string>{"placement", "node", "role", "x_m", "y_m"})
    throw std::runtime_error(path.string() + ": unexpected placement CSV header");
  PlacementEnsemble e;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 5)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 5 fields");
    size_t idx = static_cast<size_t>(parse_int(f[0], "placement"));
    while (e.placements.size() <= idx) e.placements.emplace_back();
    NodePlacement& p = e.placements[idx];
    Vec2 v{parse_double(f[3], "x_m"), parse_double(f[4], "y_m")};
    if (f[2] == "user1")
      p.user1 = v;
    else if (f[2] == "user2")
      p.user2 = v;
    else if (f[2] == "relay")
      p.relays.push_back(v);
    else
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": unknown role " + f[2]);
  }
  if (e.placements.empty()) throw std::runtime_error(path.string() + ": no placements");
  for (const auto& p : e.placements) e.user_distance = distance(p.user1, p.user2);
  return e;
}

uint64_t placement_hash(const NodePlacement& p) {
  std::string canon = "u1:" + fmt_double(p.user1.x) + "," + fmt_double(p.user1.y) +
                      ";u2:" + fmt_double(p.user2.x) + "," + fmt_double(p.user2.y) + ";r:";
  for (const Vec2& v : p.relays) canon += fmt_double(v.x) + "," + fmt_double(v.y) + ";";
  return fnv1a64(canon);
}

}  // namespace twr
