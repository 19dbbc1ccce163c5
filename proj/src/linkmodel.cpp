#include "twr/linkmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "twr/textio.hpp"

namespace twr {

int LinkModel::index_of(double rate_bps) const {
  for (size_t i = 0; i < curves.size(); ++i) {
    double r = curves[i].rate_bps;
    if (std::abs(r - rate_bps) <= 1e-6 * std::max(1.0, std::abs(r))) return static_cast<int>(i);
  }
  return -1;
}

double mean_snr_db(Vec2 tx, Vec2 rx, const PathLossModel& model, double power_fraction) {
  double d = distance(tx, rx);
  if (!(d > 0.0)) throw std::invalid_argument("tx and rx must be at distinct positions");
  if (!(power_fraction > 0.0 && power_fraction <= 1.0))
    throw std::invalid_argument("power fraction must be in (0, 1]");
  if (!(model.ref_distance_m > 0.0)) throw std::invalid_argument("reference distance must be positive");
  return model.ref_snr_db - 10.0 * model.exponent * std::log10(d / model.ref_distance_m) +
         10.0 * std::log10(power_fraction);
}

FadingDraw draw_fading(RngSequence& rng, FadingKind kind) {
  switch (kind) {
    case FadingKind::rayleigh: return {rng.exponential()};
    case FadingKind::none: return {1.0};
  }
  throw std::invalid_argument("unknown fading kind");
}

double link_per_idx(const LinkModel& model, int rate_idx, double inst_snr_db) {
  if (rate_idx < 0 || rate_idx >= static_cast<int>(model.curves.size()))
    throw std::invalid_argument("rate index out of range");
  const RateCurve& c = model.curves[rate_idx];
  if (c.snr_db.empty()) throw std::invalid_argument("link curve has no samples");
  if (inst_snr_db <= c.snr_db.front()) return c.per.front();
  if (inst_snr_db >= c.snr_db.back()) return c.per.back();
  auto it = std::upper_bound(c.snr_db.begin(), c.snr_db.end(), inst_snr_db);
  size_t hi = it - c.snr_db.begin();
  size_t lo = hi - 1;
  double w = (inst_snr_db - c.snr_db[lo]) / (c.snr_db[hi] - c.snr_db[lo]);
  return c.per[lo] + w * (c.per[hi] - c.per[lo]);
}

double link_per(const LinkModel& model, double rate_bps, double inst_snr_db) {
  int idx = model.index_of(rate_bps);
  if (idx < 0) throw std::invalid_argument("rate is not part of the link model");
  return link_per_idx(model, idx, inst_snr_db);
}

bool packet_success(const LinkModel& model, double rate_bps, double inst_snr_db,
                    RngSequence& rng) {
  return rng.uniform01() > link_per(model, rate_bps, inst_snr_db);
}

double rdstc_effective_snr(std::span<const double> relay_gains, double per_relay_power_fraction,
                           const RdstcModel& model) {
  if (relay_gains.empty())
    throw std::invalid_argument("no active relays: there is no transmission to combine");
  if (!(per_relay_power_fraction > 0.0 && per_relay_power_fraction <= 1.0))
    throw std::invalid_argument("power fraction must be in (0, 1]");
  double sum = 0.0;
  if (model.cap_at_stc_dimension &&
      static_cast<int>(relay_gains.size()) > model.stc_dimension) {
    std::vector<double> g(relay_gains.begin(), relay_gains.end());
    std::stable_sort(g.begin(), g.end(), std::greater<double>());
    for (int i = 0; i < model.stc_dimension; ++i) sum += g[i];
  } else {
    for (double g : relay_gains) sum += g;
  }
  return per_relay_power_fraction * sum;
}

LinkModel default_80211g_link_model() {
  // 50% points roughly at the decode SNRs of the eight 802.11g modes for
  // 1500-byte frames; equal waterfall widths keep the curves from crossing.
  static const std::pair<double, double> kModes[] = {
      {6e6, 5.0},  {9e6, 6.5},   {12e6, 7.8},  {18e6, 9.8},
      {24e6, 13.0}, {36e6, 16.8}, {48e6, 21.0}, {54e6, 22.5},
  };
  const double width_db = 1.2;
  const double span_db = 8.0;
  const double step_db = 0.25;
  LinkModel m;
  for (auto [rate, mid] : kModes) {
    RateCurve c;
    c.rate_bps = rate;
    for (double snr = mid - span_db; snr <= mid + span_db + 1e-9; snr += step_db) {
      c.snr_db.push_back(snr);
      c.per.push_back(std::clamp(0.5 * std::erfc((snr - mid) / width_db), 0.0, 1.0));
    }
    m.curves.push_back(std::move(c));
  }
  return m;
}

LinkModel constant_link_model(const std::vector<double>& rates_bps, double per) {
  if (!(per >= 0.0 && per <= 1.0)) throw std::invalid_argument("per must be in [0, 1]");
  LinkModel m;
  for (double r : rates_bps) m.curves.push_back({r, {-1e3, 1e3}, {per, per}});
  return m;
}

LinkModel load_link_model_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      split_csv_line(line) != std::vector<std::string>{"rate_bps", "snr_db", "per"})
    throw std::runtime_error(path.string() + ": expected header rate_bps,snr_db,per");
  std::map<double, RateCurve> by_rate;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    auto f = split_csv_line(line);
    if (f.size() != 3)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    double rate = parse_double(f[0], "rate_bps");
    RateCurve& c = by_rate[rate];
    c.rate_bps = rate;
    c.snr_db.push_back(parse_double(f[1], "snr_db"));
    c.per.push_back(parse_double(f[2], "per"));
  }
  LinkModel m;
  for (auto& [rate, curve] : by_rate) {
    std::vector<size_t> idx(curve.snr_db.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return curve.snr_db[a] < curve.snr_db[b]; });
    RateCurve sorted;
    sorted.rate_bps = rate;
    for (size_t i : idx) {
      sorted.snr_db.push_back(curve.snr_db[i]);
      sorted.per.push_back(curve.per[i]);
    }
    m.curves.push_back(std::move(sorted));
  }
  if (m.curves.empty()) throw std::runtime_error(path.string() + ": no curves");
  return m;
}

void save_link_model_csv(const LinkModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "rate_bps,snr_db,per\n";
  for (const RateCurve& c : model.curves)
    for (size_t i = 0; i < c.snr_db.size(); ++i)
      out << fmt_double(c.rate_bps) << ',' << fmt_double(c.snr_db[i]) << ',' << fmt_double(c.per[i])
          << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::string> validate_link_model(const LinkModel& model) {
  std::vector<std::string> bad;
  if (model.curves.empty()) {
    bad.push_back("link model has no curves");
    return bad;
  }
  for (size_t i = 0; i < model.curves.size(); ++i) {
    const RateCurve& c = model.curves[i];
    std::string tag = "curve " + fmt_double(c.rate_bps) + " bps: ";
    if (i > 0 && !(c.rate_bps > model.curves[i - 1].rate_bps))
      bad.push_back(tag + "curves must be sorted by rate");
    if (c.snr_db.size() < 2 || c.snr_db.size() != c.per.size()) {
      bad.push_back(tag + "needs at least two (snr, per) samples");
      continue;
    }
    for (size_t k = 0; k < c.snr_db.size(); ++k) {
      if (k > 0 && !(c.snr_db[k] > c.snr_db[k - 1])) {
        bad.push_back(tag + "snr samples must be strictly increasing");
        break;
      }
      if (!(c.per[k] >= 0.0 && c.per[k] <= 1.0)) {
        bad.push_back(tag + "per samples must be in [0, 1]");
        break;
      }
      if (k > 0 && c.per[k] > c.per[k - 1] + 1e-12) {
        bad.push_back(tag + "per must not increase with snr");
        break;
      }
    }
    if (c.per.front() < 0.999) bad.push_back(tag + "low-snr endpoint must reach per >= 0.999");
    if (c.per.back() > 1e-4) bad.push_back(tag + "high-snr endpoint must reach per <= 1e-4");
  }
  // No curve may dip below a slower rate's curve: evaluate on the union grid.
  for (size_t i = 1; i < model.curves.size(); ++i) {
    for (double snr : model.curves[i].snr_db) {
      if (link_per_idx(model, static_cast<int>(i), snr) + 1e-12 <
          link_per_idx(model, static_cast<int>(i - 1), snr)) {
        bad.push_back("curve " + fmt_double(model.curves[i].rate_bps) +
                      " bps drops below the previous rate's curve");
        break;
      }
    }
  }
  return bad;
}

}  // namespace twr
