// Command line front end for the two-way relay video simulator.
//
//   twrsim run         full parameter sweep from an INI spec
//   twrsim per         PER of one scheme on one placement
//   twrsim fec         FEC plan for one (n, per) point
//   twrsim placements  draw node placements to CSV
//   twrsim compare     nc/hr rate ratios from an existing report.csv

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "twr/experiment.hpp"
#include "twr/fec.hpp"
#include "twr/mcper.hpp"
#include "twr/schemes.hpp"
#include "twr/textio.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace twr;

void set_jobs(int jobs) {
#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
}

SimModel model_from(const std::optional<std::string>& config) {
  if (config) return load_experiment_spec(*config).model;
  SimModel model;
  model.link = default_80211g_link_model();
  return model;
}

int cmd_run(const std::string& config, const std::string& out_dir,
            std::optional<uint64_t> seed, std::optional<int> trials, int jobs) {
  set_jobs(jobs);
  ExperimentSpec spec = load_experiment_spec(config);
  if (seed) spec.seed = *seed;
  if (trials) spec.trials_per_estimate = *trials;
  AggregateReport report = run_experiment(spec, out_dir);
  std::printf("wrote %s/report.csv (%zu rows), plans.csv (%zu rows)\n", out_dir.c_str(),
              report.rows.size(), report.plans.size());
  for (const AggregateRow& row : report.rows)
    std::printf("%-9s density=%-7s d=%-4s mean=%12.1f bps  stderr=%10.1f  infeasible=%d/%d\n",
                to_string(row.scheme), fmt_double(row.density).c_str(),
                fmt_double(row.distance_m).c_str(), row.mean_avg_video_rate_bps, row.stderr_bps,
                row.infeasible, row.placements);
  return 0;
}

int cmd_per(const std::optional<std::string>& config, const std::string& scheme_name,
            double distance, int relays, double r12, double r21, double rr2, double rr1,
            double rr, int trials, uint64_t seed, const std::string& trace_path) {
  std::optional<SchemeKind> scheme = parse_scheme(scheme_name);
  if (!scheme) {
    std::fprintf(stderr, "unknown scheme: %s\n", scheme_name.c_str());
    return 1;
  }
  SimModel model = model_from(config);
  Rect region{0, 0, 200, 200};
  PlacementEnsemble ens = generate_placements_fixed(region, relays, distance, 1, seed);
  const NodePlacement& placement = ens.placements[0];
  StreamRng base = StreamRng(seed).derive(placement_hash(placement));

  std::vector<TrialOutcome> outcomes;
  TrialTrace trace;
  if (!trace_path.empty()) trace.outcomes = &outcomes;

  PerEstimate est;
  switch (*scheme) {
    case SchemeKind::direct:
      est = estimate_direct(model, placement, r12, r21, trials, base, trace);
      break;
    case SchemeKind::rdstc: {
      est = estimate_rdstc(model, placement, Direction::u1_to_u2, r12, rr2, trials, base, trace);
      PerEstimate back =
          estimate_rdstc(model, placement, Direction::u2_to_u1, r21, rr1, trials, base);
      est.p21 = back.p21;
      est.avg_relay_count = 0.5 * (est.avg_relay_count + back.avg_relay_count);
      break;
    }
    case SchemeKind::rdstc_hr:
      est = estimate_rdstc_hr(model, placement, r12, r21, rr2, rr1, trials, base, trace);
      break;
    case SchemeKind::rdstc_nc:
      est = estimate_rdstc_nc(model, placement, r12, r21, rr, trials, base, trace);
      break;
  }

  std::printf("scheme=%s distance=%s relays=%d trials=%d\n", to_string(est.scheme),
              fmt_double(distance).c_str(), relays, trials);
  if (est.p12)
    std::printf("p12=%s stderr=%s\n", fmt_double(*est.p12).c_str(),
                fmt_double(est.stderr_of(Direction::u1_to_u2)).c_str());
  if (est.p21)
    std::printf("p21=%s stderr=%s\n", fmt_double(*est.p21).c_str(),
                fmt_double(est.stderr_of(Direction::u2_to_u1)).c_str());
  std::printf("k_avg=%s\n", fmt_double(est.avg_relay_count).c_str());
  if (!trace_path.empty()) {
    write_trace_csv(outcomes, trace_path);
    std::printf("wrote %s\n", trace_path.c_str());
  }
  return 0;
}

int cmd_fec(int n, double per, double tau) {
  FecPlan plan = make_plan(n, per, tau);
  std::printf("n=%d per=%s tau=%s\n", plan.n, fmt_double(per).c_str(), fmt_double(tau).c_str());
  std::printf("s=%d m=%d fec_rate=%s predicted_failure=%s\n", plan.s, plan.m,
              fmt_double(plan.fec_rate).c_str(), fmt_double(plan.predicted_failure).c_str());
  return 0;
}

int cmd_placements(double density, int relays, double distance, int count, uint64_t seed,
                   const std::string& out) {
  Rect region{0, 0, 200, 200};
  PlacementEnsemble ens = relays >= 0
                              ? generate_placements_fixed(region, relays, distance, count, seed)
                              : generate_placements(region, density, distance, count, seed);
  write_placements_csv(ens, out);
  size_t total = 0;
  for (const NodePlacement& p : ens.placements) total += p.relays.size();
  std::printf("wrote %s: %d placements, %zu relays total\n", out.c_str(), count, total);
  return 0;
}

int cmd_compare(const std::string& report_path, const std::string& out) {
  AggregateReport report = read_report_csv(report_path);
  std::vector<RatioRow> rows = compare_schemes(report);
  write_ratios_csv(rows, out);
  for (const RatioRow& r : rows) {
    std::string ratio = r.ratio_nc_over_hr ? fmt_double(*r.ratio_nc_over_hr) : "n/a";
    std::printf("density=%-7s d=%-4s nc/hr=%s\n", fmt_double(r.density).c_str(),
                fmt_double(r.distance_m).c_str(), ratio.c_str());
  }
  std::printf("wrote %s (%zu rows)\n", out.c_str(), rows.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-way relay video exchange simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the full sweep from an INI spec");
  std::string run_config, run_out = "out";
  std::optional<uint64_t> run_seed;
  std::optional<int> run_trials;
  int run_jobs = 0;
  run->add_option("--config", run_config, "experiment INI file")->required();
  run->add_option("--out", run_out, "output directory");
  run->add_option("--seed", run_seed, "override experiment.seed");
  run->add_option("--trials", run_trials, "override experiment.trials");
  run->add_option("--jobs", run_jobs, "worker threads (0 = library default)");

  auto* per = app.add_subcommand("per", "estimate PER on one generated placement");
  std::optional<std::string> per_config;
  std::string per_scheme = "direct", per_trace;
  double per_distance = 60, per_r12 = 6e6, per_r21 = 6e6, per_rr2 = 6e6, per_rr1 = 6e6,
         per_rr = 6e6;
  int per_relays = 20, per_trials = 1000;
  uint64_t per_seed = 1;
  per->add_option("--config", per_config, "INI file for the channel model");
  per->add_option("--scheme", per_scheme, "direct | rdstc | rdstc_hr | rdstc_nc");
  per->add_option("--distance", per_distance, "user distance in meters");
  per->add_option("--relays", per_relays, "relay count");
  per->add_option("--r12", per_r12, "rate user1 -> user2, bps");
  per->add_option("--r21", per_r21, "rate user2 -> user1, bps");
  per->add_option("--rr2", per_rr2, "relay rate toward user2, bps");
  per->add_option("--rr1", per_rr1, "relay rate toward user1, bps");
  per->add_option("--rr", per_rr, "shared relay rate (rdstc_nc), bps");
  per->add_option("--trials", per_trials, "Monte Carlo trials");
  per->add_option("--seed", per_seed, "random seed");
  per->add_option("--trace", per_trace, "write per-trial outcomes to this CSV");

  auto* fec = app.add_subcommand("fec", "FEC plan for one (n, per) point");
  int fec_n = 0;
  double fec_per = 0, fec_tau = 0.005;
  fec->add_option("--n", fec_n, "packets per window")->required();
  fec->add_option("--per", fec_per, "packet error rate")->required();
  fec->add_option("--tau", fec_tau, "max post-FEC failure probability");

  auto* pl = app.add_subcommand("placements", "draw node placements to CSV");
  double pl_density = 0.001, pl_distance = 60;
  int pl_relays = -1, pl_count = 15;
  uint64_t pl_seed = 1;
  std::string pl_out = "placements.csv";
  pl->add_option("--density", pl_density, "relays per square meter");
  pl->add_option("--relays", pl_relays, "fixed relay count (overrides --density)");
  pl->add_option("--distance", pl_distance, "user distance in meters");
  pl->add_option("--count", pl_count, "number of placements");
  pl->add_option("--seed", pl_seed, "random seed");
  pl->add_option("--out", pl_out, "output CSV path");

  auto* cmp = app.add_subcommand("compare", "nc/hr ratios from an existing report.csv");
  std::string cmp_report = "out/report.csv", cmp_out = "ratios.csv";
  cmp->add_option("--report", cmp_report, "report.csv produced by run");
  cmp->add_option("--out", cmp_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_config, run_out, run_seed, run_trials, run_jobs);
    if (per->parsed())
      return cmd_per(per_config, per_scheme, per_distance, per_relays, per_r12, per_r21, per_rr2,
                     per_rr1, per_rr, per_trials, per_seed, per_trace);
    if (fec->parsed()) return cmd_fec(fec_n, fec_per, fec_tau);
    if (pl->parsed())
      return cmd_placements(pl_density, pl_relays, pl_distance, pl_count, pl_seed, pl_out);
    if (cmp->parsed()) return cmd_compare(cmp_report, cmp_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
