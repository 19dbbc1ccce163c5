#pragma once

#include <optional>
#include <string_view>

namespace twr {

// Transmission schemes for the two-way packet exchange between user 1 and
// user 2. All relay schemes fall back to plain two-phase direct transmission
// when switching the relays off scores better.
enum class SchemeKind {
  direct,    // u1 -> u2, then u2 -> u1, no relays
  rdstc,     // per-direction randomized distributed space-time coded relaying
  rdstc_hr,  // both users transmit first, then the shared relay set forwards each packet
  rdstc_nc,  // like rdstc_hr but the relay set sends one XOR-coded transmission
};

enum class Direction {
  u1_to_u2,
  u2_to_u1,
};

enum class Exec {
  serial,
  parallel,
};

constexpr const char* to_string(SchemeKind s) {
  switch (s) {
    case SchemeKind::direct: return "direct";
    case SchemeKind::rdstc: return "rdstc";
    case SchemeKind::rdstc_hr: return "rdstc_hr";
    case SchemeKind::rdstc_nc: return "rdstc_nc";
  }
  return "?";
}

inline std::optional<SchemeKind> parse_scheme(std::string_view name) {
  if (name == "direct") return SchemeKind::direct;
  if (name == "rdstc") return SchemeKind::rdstc;
  if (name == "rdstc_hr") return SchemeKind::rdstc_hr;
  if (name == "rdstc_nc") return SchemeKind::rdstc_nc;
  return std::nullopt;
}

}  // namespace twr
