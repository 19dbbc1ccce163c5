#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "twr/mcper.hpp"
#include "twr/schemes.hpp"

namespace twr {

// Piecewise-linear video rate -> PSNR mapping, clamped at the end knots.
struct PsnrCurve {
  std::vector<double> rate_bps;  // strictly increasing, >= 2 knots
  std::vector<double> psnr_db;
};

double map_rate_to_psnr(double rate_bps, const PsnrCurve& curve);

PsnrCurve load_psnr_curve_csv(const std::filesystem::path& path);

struct ExperimentSpec {
  SimModel model;
  Rect region{0, 0, 200, 200};
  std::vector<double> densities_per_m2 = {0.0005, 0.001};
  std::vector<double> distances_m = {20, 60, 100, 140};
  int placements_per_density = 15;
  std::vector<SchemeKind> schemes = {SchemeKind::direct, SchemeKind::rdstc, SchemeKind::rdstc_hr,
                                     SchemeKind::rdstc_nc};
  int trials_per_estimate = 1000;
  uint64_t seed = 1;
  std::vector<std::pair<std::string, PsnrCurve>> psnr_curves;
  bool use_disk_cache = true;
};

// Reads the INI-style experiment description; see configs/default.ini for
// the full key set. Relative file paths resolve against the config file.
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

// One optimized scheme on one placement; a row of plans.csv.
struct PlanRow {
  SchemeKind scheme = SchemeKind::direct;
  double density = 0.0;
  double distance_m = 0.0;
  int placement = 0;
  Optimum opt;
};

struct AggregateRow {
  SchemeKind scheme = SchemeKind::direct;
  double density = 0.0;
  double distance_m = 0.0;
  int placements = 0;
  int infeasible = 0;  // placements with no feasible plan; they average in as rate 0
  double mean_avg_video_rate_bps = 0.0;
  double stderr_bps = 0.0;
  std::vector<double> mean_psnr_db;  // aligned with AggregateReport::psnr_names
};

struct AggregateReport {
  std::vector<std::string> psnr_names;
  std::vector<AggregateRow> rows;
  std::vector<PlanRow> plans;
};

// Runs the full sweep and writes report.csv, plans.csv and (when both
// rdstc_hr and rdstc_nc are present) ratios.csv into out_dir. Output is a
// pure function of the spec: placement generation, trial randomness and row
// order all derive from spec.seed, independent of thread count.
AggregateReport run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir);

struct RatioRow {
  double density = 0.0;
  double distance_m = 0.0;
  std::optional<double> nc_mean_bps;
  std::optional<double> hr_mean_bps;
  std::optional<double> ratio_nc_over_hr;  // unset when a side is missing or hr mean is 0
  std::optional<double> ratio_stderr;
};

// rdstc_nc over rdstc_hr mean-rate ratios per (density, distance), with the
// standard error propagated from the per-scheme standard errors.
std::vector<RatioRow> compare_schemes(const AggregateReport& report);

void write_report_csv(const AggregateReport& report, const std::filesystem::path& path);
void write_plans_csv(const AggregateReport& report, const std::filesystem::path& path);
void write_ratios_csv(const std::vector<RatioRow>& rows, const std::filesystem::path& path);

AggregateReport read_report_csv(const std::filesystem::path& path);
std::vector<PlanRow> read_plans_csv(const std::filesystem::path& path);

}  // namespace twr
