#include "twr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "twr/ini.hpp"
#include "twr/textio.hpp"

namespace twr {

namespace {

// Seed-space tags separating placement generation from trial randomness.
constexpr uint64_t kPlacementTag = 0x706c6163;
constexpr uint64_t kTrialTag = 0x7472696c;

void validate_curve(const PsnrCurve& curve) {
  if (curve.rate_bps.size() != curve.psnr_db.size() || curve.rate_bps.size() < 2)
    throw std::invalid_argument("psnr curve needs at least two (rate, psnr) knots");
  for (size_t i = 1; i < curve.rate_bps.size(); ++i)
    if (!(curve.rate_bps[i] > curve.rate_bps[i - 1]))
      throw std::invalid_argument("psnr curve rates must be strictly increasing");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() ? base / path : path;
}

std::string opt_str(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

}  // namespace

double map_rate_to_psnr(double rate_bps, const PsnrCurve& curve) {
  validate_curve(curve);
  const std::vector<double>& x = curve.rate_bps;
  const std::vector<double>& y = curve.psnr_db;
  if (rate_bps <= x.front()) return y.front();
  if (rate_bps >= x.back()) return y.back();
  size_t hi = std::upper_bound(x.begin(), x.end(), rate_bps) - x.begin();
  double w = (rate_bps - x[hi - 1]) / (x[hi] - x[hi - 1]);
  return y[hi - 1] + w * (y[hi] - y[hi - 1]);
}

PsnrCurve load_psnr_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "rate_bps,psnr_db")
    throw std::runtime_error(path.string() + ": expected header rate_bps,psnr_db");
  std::vector<std::pair<double, double>> knots;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto f = split_csv_line(t);
    if (f.size() != 2) throw std::runtime_error(path.string() + ": malformed row: " + t);
    knots.emplace_back(parse_double(f[0], "rate_bps"), parse_double(f[1], "psnr_db"));
  }
  std::stable_sort(knots.begin(), knots.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  PsnrCurve curve;
  for (auto& [r, p] : knots) {
    curve.rate_bps.push_back(r);
    curve.psnr_db.push_back(p);
  }
  validate_curve(curve);
  return curve;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  IniFile ini = IniFile::load(path);
  ExperimentSpec spec;

  SystemConfig& sys = spec.model.system;
  sys.beta = ini.get_double("system.beta", sys.beta);
  sys.t_delay_s = ini.get_double("system.t_delay_s", sys.t_delay_s);
  sys.packet_size_bits = ini.get_double("system.packet_size_bits", sys.packet_size_bits);
  sys.tau = ini.get_double("system.tau", sys.tau);
  sys.per_cap = ini.get_double("system.per_cap", sys.per_cap);
  sys.rate_table_bps = ini.get_double_list("system.rates_bps", sys.rate_table_bps);
  sys.time_partition_grid =
      ini.get_double_list("system.time_partition_grid", sys.time_partition_grid);

  PathLossModel& pl = spec.model.pathloss;
  pl.exponent = ini.get_double("pathloss.exponent", pl.exponent);
  pl.ref_distance_m = ini.get_double("pathloss.ref_distance_m", pl.ref_distance_m);
  pl.ref_snr_db = ini.get_double("pathloss.ref_snr_db", pl.ref_snr_db);

  std::string fading = ini.get_string("fading.kind", "rayleigh");
  if (fading == "rayleigh")
    spec.model.fading = FadingKind::rayleigh;
  else if (fading == "none")
    spec.model.fading = FadingKind::none;
  else
    throw std::invalid_argument("fading.kind must be rayleigh or none, got " + fading);

  spec.model.rdstc.stc_dimension =
      static_cast<int>(ini.get_int("rdstc.stc_dimension", spec.model.rdstc.stc_dimension));
  spec.model.rdstc.cap_at_stc_dimension =
      ini.get_bool("rdstc.cap_at_stc_dimension", spec.model.rdstc.cap_at_stc_dimension);

  if (ini.has("linkmodel.file"))
    spec.model.link = load_link_model_csv(resolve(ini.dir(), ini.require_string("linkmodel.file")));
  else
    spec.model.link = default_80211g_link_model();

  spec.region = Rect{ini.get_double("region.x_m", spec.region.xmin),
                     ini.get_double("region.y_m", spec.region.ymin),
                     ini.get_double("region.width_m", spec.region.width),
                     ini.get_double("region.height_m", spec.region.height)};

  spec.densities_per_m2 = ini.get_double_list("experiment.densities_per_m2", spec.densities_per_m2);
  spec.distances_m = ini.get_double_list("experiment.distances_m", spec.distances_m);
  spec.placements_per_density = static_cast<int>(
      ini.get_int("experiment.placements_per_density", spec.placements_per_density));
  spec.trials_per_estimate =
      static_cast<int>(ini.get_int("experiment.trials", spec.trials_per_estimate));
  spec.seed = ini.get_uint("experiment.seed", spec.seed);
  spec.use_disk_cache = ini.get_bool("experiment.use_disk_cache", spec.use_disk_cache);
  if (ini.has("experiment.schemes")) {
    spec.schemes.clear();
    for (const std::string& name : ini.get_string_list("experiment.schemes", {})) {
      std::optional<SchemeKind> s = parse_scheme(name);
      if (!s) throw std::invalid_argument("unknown scheme in experiment.schemes: " + name);
      spec.schemes.push_back(*s);
    }
  }

  for (const std::string& name : ini.section_keys("psnr"))
    spec.psnr_curves.emplace_back(
        name, load_psnr_curve_csv(resolve(ini.dir(), ini.require_string("psnr." + name))));

  std::vector<std::string> problems = validate_config(sys);
  for (const std::string& p : validate_link_model(spec.model.link)) problems.push_back(p);
  for (double r : sys.rate_table_bps)
    if (spec.model.link.index_of(r) < 0)
      problems.push_back("link model has no curve for rate " + fmt_double(r));
  if (!problems.empty()) {
    std::string msg = path.string() + ": ";
    for (size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
    throw std::invalid_argument(msg);
  }
  return spec;
}

namespace {

void check_spec(const ExperimentSpec& spec) {
  std::vector<std::string> problems = validate_config(spec.model.system);
  if (spec.densities_per_m2.empty()) problems.push_back("no relay densities");
  for (double d : spec.densities_per_m2)
    if (!(d >= 0)) problems.push_back("negative relay density");
  if (spec.distances_m.empty()) problems.push_back("no user distances");
  if (spec.placements_per_density <= 0) problems.push_back("placements_per_density must be > 0");
  if (spec.trials_per_estimate <= 0) problems.push_back("trials must be > 0");
  if (spec.schemes.empty()) problems.push_back("no schemes selected");
  for (const std::string& p : validate_link_model(spec.model.link)) problems.push_back(p);
  for (double r : spec.model.system.rate_table_bps)
    if (spec.model.link.index_of(r) < 0)
      problems.push_back("link model has no curve for rate " + fmt_double(r));
  if (!problems.empty()) {
    std::string msg = "invalid experiment spec: ";
    for (size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
    throw std::invalid_argument(msg);
  }
}

}  // namespace

AggregateReport run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  check_spec(spec);
  std::filesystem::create_directories(out_dir);

  StreamRng root(spec.seed);
  StreamRng place_root = root.derive(kPlacementTag);
  StreamRng mc_root = root.derive(kTrialTag);

  const int D = static_cast<int>(spec.densities_per_m2.size());
  const int J = static_cast<int>(spec.distances_m.size());
  const int P = spec.placements_per_density;
  const int S = static_cast<int>(spec.schemes.size());

  // The relay field of (density, placement index) is shared across distances:
  // the per-density seed and the placement index fully determine it, and user
  // spacing moves only the users.
  std::vector<std::vector<PlacementEnsemble>> cells(D);
  for (int di = 0; di < D; ++di) {
    uint64_t density_seed = place_root.derive(di).key();
    for (int dj = 0; dj < J; ++dj)
      cells[di].push_back(generate_placements(spec.region, spec.densities_per_m2[di],
                                              spec.distances_m[dj], P, density_seed));
  }

  std::optional<std::filesystem::path> cache_dir;
  if (spec.use_disk_cache) cache_dir = out_dir / "cache";
  PerTableProvider provider(spec.model, spec.trials_per_estimate, mc_root, cache_dir,
                            Exec::parallel);

#ifdef _OPENMP
  omp_set_max_active_levels(1);
#endif

  // One job per placement; every scheme reuses that placement's tables. Slots
  // are indexed, so the fill order does not affect the output.
  struct Job {
    int di, dj, pi;
  };
  std::vector<Job> jobs;
  for (int di = 0; di < D; ++di)
    for (int dj = 0; dj < J; ++dj)
      for (int pi = 0; pi < P; ++pi) jobs.push_back({di, dj, pi});

  std::vector<std::vector<Optimum>> opts(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < static_cast<int>(jobs.size()); ++j) {
    const Job& job = jobs[j];
    const NodePlacement& placement = cells[job.di][job.dj].placements[job.pi];
    const PerTables& tables = provider.tables_for(placement);
    std::vector<Optimum> per_scheme;
    per_scheme.reserve(S);
    for (SchemeKind scheme : spec.schemes)
      per_scheme.push_back(optimize(scheme, tables, spec.model.system));
    opts[j] = std::move(per_scheme);
  }

  auto job_index = [&](int di, int dj, int pi) { return (di * J + dj) * P + pi; };

  AggregateReport report;
  for (const auto& [name, curve] : spec.psnr_curves) report.psnr_names.push_back(name);

  for (int si = 0; si < S; ++si) {
    for (int di = 0; di < D; ++di) {
      for (int dj = 0; dj < J; ++dj) {
        AggregateRow row;
        row.scheme = spec.schemes[si];
        row.density = spec.densities_per_m2[di];
        row.distance_m = spec.distances_m[dj];
        row.placements = P;

        std::vector<double> rates;
        rates.reserve(P);
        for (int pi = 0; pi < P; ++pi) {
          const Optimum& opt = opts[job_index(di, dj, pi)][si];
          if (!opt.result.feasible) ++row.infeasible;
          rates.push_back(opt.result.feasible ? opt.result.avg_video_rate_bps : 0.0);

          PlanRow plan;
          plan.scheme = row.scheme;
          plan.density = row.density;
          plan.distance_m = row.distance_m;
          plan.placement = pi;
          plan.opt = opt;
          report.plans.push_back(std::move(plan));
        }

        double sum = 0.0;
        for (double r : rates) sum += r;
        row.mean_avg_video_rate_bps = sum / P;
        if (P > 1) {
          double ss = 0.0;
          for (double r : rates) {
            double d = r - row.mean_avg_video_rate_bps;
            ss += d * d;
          }
          row.stderr_bps = std::sqrt(ss / (P - 1)) / std::sqrt(static_cast<double>(P));
        }
        for (const auto& [name, curve] : spec.psnr_curves) {
          double acc = 0.0;
          for (double r : rates) acc += map_rate_to_psnr(r, curve);
          row.mean_psnr_db.push_back(acc / P);
        }
        report.rows.push_back(std::move(row));
      }
    }
  }

  write_report_csv(report, out_dir / "report.csv");
  write_plans_csv(report, out_dir / "plans.csv");
  bool have_hr = std::count(spec.schemes.begin(), spec.schemes.end(), SchemeKind::rdstc_hr) > 0;
  bool have_nc = std::count(spec.schemes.begin(), spec.schemes.end(), SchemeKind::rdstc_nc) > 0;
  if (have_hr && have_nc) write_ratios_csv(compare_schemes(report), out_dir / "ratios.csv");
  return report;
}

std::vector<RatioRow> compare_schemes(const AggregateReport& report) {
  struct Cell {
    std::optional<double> nc_mean, nc_err, hr_mean, hr_err;
  };
  std::vector<std::pair<double, double>> order;
  std::map<std::pair<double, double>, Cell> cells;
  for (const AggregateRow& row : report.rows) {
    if (row.scheme != SchemeKind::rdstc_hr && row.scheme != SchemeKind::rdstc_nc) continue;
    auto key = std::make_pair(row.density, row.distance_m);
    if (!cells.count(key)) order.push_back(key);
    Cell& c = cells[key];
    if (row.scheme == SchemeKind::rdstc_nc) {
      c.nc_mean = row.mean_avg_video_rate_bps;
      c.nc_err = row.stderr_bps;
    } else {
      c.hr_mean = row.mean_avg_video_rate_bps;
      c.hr_err = row.stderr_bps;
    }
  }

  std::vector<RatioRow> rows;
  for (const auto& key : order) {
    const Cell& c = cells[key];
    RatioRow r;
    r.density = key.first;
    r.distance_m = key.second;
    r.nc_mean_bps = c.nc_mean;
    r.hr_mean_bps = c.hr_mean;
    if (c.nc_mean && c.hr_mean && *c.hr_mean > 0) {
      double h = *c.hr_mean, n = *c.nc_mean;
      r.ratio_nc_over_hr = n / h;
      double var = (*c.nc_err / h) * (*c.nc_err / h) +
                   (n * *c.hr_err / (h * h)) * (n * *c.hr_err / (h * h));
      r.ratio_stderr = std::sqrt(var);
    }
    rows.push_back(r);
  }
  return rows;
}

void write_report_csv(const AggregateReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "scheme,density,distance_m,placements,infeasible,mean_avg_video_rate_bps,stderr_bps";
  for (const std::string& name : report.psnr_names) out << ",mean_psnr_" << name << "_db";
  out << '\n';
  for (const AggregateRow& row : report.rows) {
    out << to_string(row.scheme) << ',' << fmt_double(row.density) << ','
        << fmt_double(row.distance_m) << ',' << row.placements << ',' << row.infeasible << ','
        << fmt_double(row.mean_avg_video_rate_bps) << ',' << fmt_double(row.stderr_bps);
    for (double p : row.mean_psnr_db) out << ',' << fmt_double(p);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

namespace {

constexpr const char* kPlansHeader =
    "scheme,density,distance_m,placement,feasible,relay_off,r12_bps,r21_bps,rr2_bps,rr1_bps,"
    "rr_bps,t_i,n12,n21,s12,s21,p12,p21,k_avg,rv12_bps,rv21_bps,avg_video_rate_bps";

}  // namespace

void write_plans_csv(const AggregateReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kPlansHeader << '\n';
  for (const PlanRow& row : report.plans) {
    const RatePlan& plan = row.opt.plan;
    const SchemeResult& res = row.opt.result;
    out << to_string(row.scheme) << ',' << fmt_double(row.density) << ','
        << fmt_double(row.distance_m) << ',' << row.placement << ',' << (res.feasible ? 1 : 0)
        << ',' << (plan.relay_off ? 1 : 0) << ',' << fmt_double(plan.r12_bps) << ','
        << fmt_double(plan.r21_bps) << ',' << fmt_double(plan.rr2_bps) << ','
        << fmt_double(plan.rr1_bps) << ',' << fmt_double(plan.rr_bps) << ',' << opt_str(plan.t_i)
        << ',' << res.n12 << ',' << res.n21 << ',' << res.s12 << ',' << res.s21 << ','
        << opt_str(res.per_used.p12) << ',' << opt_str(res.per_used.p21) << ','
        << fmt_double(res.per_used.avg_relay_count) << ',' << fmt_double(res.rv12_bps) << ','
        << fmt_double(res.rv21_bps) << ',' << fmt_double(res.avg_video_rate_bps) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_ratios_csv(const std::vector<RatioRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "density,distance_m,nc_mean_bps,hr_mean_bps,ratio_nc_over_hr,ratio_stderr\n";
  for (const RatioRow& r : rows) {
    out << fmt_double(r.density) << ',' << fmt_double(r.distance_m) << ','
        << opt_str(r.nc_mean_bps) << ',' << opt_str(r.hr_mean_bps) << ','
        << opt_str(r.ratio_nc_over_hr) << ',' << opt_str(r.ratio_stderr) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

namespace {

std::optional<double> parse_opt(const std::string& s, std::string_view what) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, what);
}

SchemeKind parse_scheme_or_throw(const std::string& s) {
  std::optional<SchemeKind> k = parse_scheme(s);
  if (!k) throw std::runtime_error("unknown scheme: " + s);
  return *k;
}

}  // namespace

AggregateReport read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  auto cols = split_csv_line(trim(line));
  const std::vector<std::string> fixed = {
      "scheme", "density", "distance_m", "placements", "infeasible", "mean_avg_video_rate_bps",
      "stderr_bps"};
  if (cols.size() < fixed.size() ||
      !std::equal(fixed.begin(), fixed.end(), cols.begin()))
    throw std::runtime_error(path.string() + ": unexpected header");

  AggregateReport report;
  for (size_t i = fixed.size(); i < cols.size(); ++i) {
    const std::string& c = cols[i];
    const std::string prefix = "mean_psnr_", suffix = "_db";
    if (c.size() <= prefix.size() + suffix.size() || c.compare(0, prefix.size(), prefix) != 0 ||
        c.compare(c.size() - suffix.size(), suffix.size(), suffix) != 0)
      throw std::runtime_error(path.string() + ": unexpected column " + c);
    report.psnr_names.push_back(c.substr(prefix.size(), c.size() - prefix.size() - suffix.size()));
  }

  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    auto f = split_csv_line(t);
    if (f.size() != cols.size())
      throw std::runtime_error(path.string() + ": malformed row: " + t);
    AggregateRow row;
    row.scheme = parse_scheme_or_throw(f[0]);
    row.density = parse_double(f[1], "density");
    row.distance_m = parse_double(f[2], "distance_m");
    row.placements = static_cast<int>(parse_int(f[3], "placements"));
    row.infeasible = static_cast<int>(parse_int(f[4], "infeasible"));
    row.mean_avg_video_rate_bps = parse_double(f[5], "mean_avg_video_rate_bps");
    row.stderr_bps = parse_double(f[6], "stderr_bps");
    for (size_t i = fixed.size(); i < f.size(); ++i)
      row.mean_psnr_db.push_back(parse_double(f[i], "mean_psnr"));
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<PlanRow> read_plans_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != kPlansHeader)
    throw std::runtime_error(path.string() + ": unexpected header");
  std::vector<PlanRow> rows;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    auto f = split_csv_line(t);
    if (f.size() != 22) throw std::runtime_error(path.string() + ": malformed row: " + t);
    PlanRow row;
    row.scheme = parse_scheme_or_throw(f[0]);
    row.density = parse_double(f[1], "density");
    row.distance_m = parse_double(f[2], "distance_m");
    row.placement = static_cast<int>(parse_int(f[3], "placement"));
    RatePlan& plan = row.opt.plan;
    SchemeResult& res = row.opt.result;
    plan.scheme = row.scheme;
    res.feasible = parse_int(f[4], "feasible") != 0;
    plan.relay_off = parse_int(f[5], "relay_off") != 0;
    plan.r12_bps = parse_double(f[6], "r12_bps");
    plan.r21_bps = parse_double(f[7], "r21_bps");
    plan.rr2_bps = parse_double(f[8], "rr2_bps");
    plan.rr1_bps = parse_double(f[9], "rr1_bps");
    plan.rr_bps = parse_double(f[10], "rr_bps");
    plan.t_i = parse_opt(f[11], "t_i");
    res.n12 = static_cast<int>(parse_int(f[12], "n12"));
    res.n21 = static_cast<int>(parse_int(f[13], "n21"));
    res.s12 = static_cast<int>(parse_int(f[14], "s12"));
    res.s21 = static_cast<int>(parse_int(f[15], "s21"));
    res.per_used.scheme = plan.relay_off ? SchemeKind::direct : plan.scheme;
    res.per_used.p12 = parse_opt(f[16], "p12");
    res.per_used.p21 = parse_opt(f[17], "p21");
    res.per_used.avg_relay_count = parse_double(f[18], "k_avg");
    res.rv12_bps = parse_double(f[19], "rv12_bps");
    res.rv21_bps = parse_double(f[20], "rv21_bps");
    res.avg_video_rate_bps = parse_double(f[21], "avg_video_rate_bps");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace twr
