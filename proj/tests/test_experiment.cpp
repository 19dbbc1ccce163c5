#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "twr/experiment.hpp"
#include "twr/linkmodel.hpp"

using namespace twr;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "twr_test_experiment" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  REQUIRE(out.good());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PsnrCurve sample_curve() {
  PsnrCurve c;
  c.rate_bps = {100000, 1000000, 2000000};
  c.psnr_db = {28.0, 37.0, 39.8};
  return c;
}

}  // namespace

TEST_CASE("rate to psnr mapping clamps and interpolates") {
  PsnrCurve c = sample_curve();
  CHECK(map_rate_to_psnr(0.0, c) == 28.0);
  CHECK(map_rate_to_psnr(100000, c) == 28.0);
  CHECK(map_rate_to_psnr(5e9, c) == 39.8);
  CHECK(map_rate_to_psnr(550000, c) == doctest::Approx(32.5));       // midpoint of first span
  CHECK(map_rate_to_psnr(1500000, c) == doctest::Approx(38.4));      // midpoint of second span
  CHECK(map_rate_to_psnr(1000000, c) == doctest::Approx(37.0));

  PsnrCurve bad;
  bad.rate_bps = {100000};
  bad.psnr_db = {28.0};
  CHECK_THROWS_AS(map_rate_to_psnr(1.0, bad), std::invalid_argument);
  bad = sample_curve();
  bad.rate_bps[2] = bad.rate_bps[1];  // not strictly increasing
  CHECK_THROWS_AS(map_rate_to_psnr(1.0, bad), std::invalid_argument);
  bad = sample_curve();
  bad.psnr_db.pop_back();
  CHECK_THROWS_AS(map_rate_to_psnr(1.0, bad), std::invalid_argument);
}

TEST_CASE("psnr curve csv loads, sorts and rejects duplicates") {
  fs::path dir = fresh_dir("psnr_csv");

  write_file(dir / "curve.csv",
             "rate_bps,psnr_db\n"
             "# comment line\n"
             "1000000,37\n"
             "100000,28\n"
             "2000000,39.8\n");
  PsnrCurve c = load_psnr_curve_csv(dir / "curve.csv");
  REQUIRE(c.rate_bps.size() == 3);
  CHECK(c.rate_bps == std::vector<double>{100000, 1000000, 2000000});
  CHECK(c.psnr_db == std::vector<double>{28.0, 37.0, 39.8});

  write_file(dir / "dup.csv", "rate_bps,psnr_db\n1000000,37\n1000000,38\n");
  CHECK_THROWS(load_psnr_curve_csv(dir / "dup.csv"));

  write_file(dir / "header.csv", "rate,psnr\n1,2\n");
  CHECK_THROWS(load_psnr_curve_csv(dir / "header.csv"));

  write_file(dir / "row.csv", "rate_bps,psnr_db\n12345\n");
  CHECK_THROWS(load_psnr_curve_csv(dir / "row.csv"));

  CHECK_THROWS(load_psnr_curve_csv(dir / "missing.csv"));
}

TEST_CASE("experiment spec loads from ini with overrides") {
  fs::path dir = fresh_dir("spec_ini");
  write_file(dir / "zeta.csv", "rate_bps,psnr_db\n100000,28\n1000000,37\n");
  write_file(dir / "alpha.csv", "rate_bps,psnr_db\n100000,30\n1000000,40\n");
  write_file(dir / "spec.ini",
             "[system]\n"
             "beta = 0.2\n"
             "tau = 0.01\n"
             "\n"
             "[fading]\n"
             "kind = none\n"
             "\n"
             "[region]\n"
             "width_m = 300\n"
             "height_m = 120\n"
             "\n"
             "[experiment]\n"
             "densities_per_m2 = 0.002\n"
             "distances_m = 30 50\n"
             "placements_per_density = 4\n"
             "schemes = rdstc_nc direct\n"
             "trials = 123\n"
             "seed = 42\n"
             "use_disk_cache = false\n"
             "\n"
             "[psnr]\n"
             "zeta = zeta.csv\n"
             "alpha = alpha.csv\n");

  ExperimentSpec spec = load_experiment_spec(dir / "spec.ini");
  CHECK(spec.model.system.beta == 0.2);
  CHECK(spec.model.system.tau == 0.01);
  CHECK(spec.model.system.per_cap == 0.25);  // untouched default
  CHECK(spec.model.fading == FadingKind::none);
  CHECK(spec.region.width == 300);
  CHECK(spec.region.height == 120);
  CHECK(spec.densities_per_m2 == std::vector<double>{0.002});
  CHECK(spec.distances_m == std::vector<double>{30, 50});
  CHECK(spec.placements_per_density == 4);
  CHECK(spec.trials_per_estimate == 123);
  CHECK(spec.seed == 42);
  CHECK(!spec.use_disk_cache);
  REQUIRE(spec.schemes.size() == 2);
  CHECK(spec.schemes[0] == SchemeKind::rdstc_nc);
  CHECK(spec.schemes[1] == SchemeKind::direct);
  // Curves keep file order, and relative paths resolve against the ini.
  REQUIRE(spec.psnr_curves.size() == 2);
  CHECK(spec.psnr_curves[0].first == "zeta");
  CHECK(spec.psnr_curves[1].first == "alpha");
  CHECK(spec.psnr_curves[1].second.psnr_db.front() == 30.0);

  write_file(dir / "bad_scheme.ini", "[experiment]\nschemes = direct bogus\n");
  CHECK_THROWS_AS(load_experiment_spec(dir / "bad_scheme.ini"), std::invalid_argument);

  write_file(dir / "bad_fading.ini", "[fading]\nkind = rician\n");
  CHECK_THROWS_AS(load_experiment_spec(dir / "bad_fading.ini"), std::invalid_argument);

  write_file(dir / "bad_beta.ini", "[system]\nbeta = -1\n");
  CHECK_THROWS_AS(load_experiment_spec(dir / "bad_beta.ini"), std::invalid_argument);
}

TEST_CASE("bundled configs stay loadable") {
  fs::path configs = fs::path(__FILE__).parent_path().parent_path() / "configs";

  ExperimentSpec smoke = load_experiment_spec(configs / "smoke.ini");
  CHECK(smoke.distances_m == std::vector<double>{20, 140});
  CHECK(smoke.placements_per_density == 3);
  CHECK(!smoke.use_disk_cache);
  REQUIRE(smoke.psnr_curves.size() == 1);
  CHECK(smoke.psnr_curves[0].first == "cif_sample");
  CHECK(smoke.psnr_curves[0].second.rate_bps.size() >= 2);

  ExperimentSpec full = load_experiment_spec(configs / "default.ini");
  CHECK(full.densities_per_m2 == std::vector<double>{0.0005, 0.001});
  CHECK(full.distances_m == std::vector<double>{20, 60, 100, 140});
  CHECK(full.placements_per_density == 15);
  CHECK(full.trials_per_estimate == 1000);
  CHECK(full.schemes.size() == 4);
}

TEST_CASE("run_experiment validates its spec") {
  ExperimentSpec spec;
  spec.model.link = default_80211g_link_model();
  fs::path dir = fresh_dir("bad_spec");

  ExperimentSpec s = spec;
  s.placements_per_density = 0;
  CHECK_THROWS_AS(run_experiment(s, dir), std::invalid_argument);

  s = spec;
  s.schemes.clear();
  CHECK_THROWS_AS(run_experiment(s, dir), std::invalid_argument);

  s = spec;
  s.model.link = constant_link_model(s.model.system.rate_table_bps, 0.1);
  CHECK_THROWS_AS(run_experiment(s, dir), std::invalid_argument);  // no usable waterfall

  s = spec;
  s.model.link.curves.pop_back();  // 54 Mbps curve missing
  CHECK_THROWS_AS(run_experiment(s, dir), std::invalid_argument);
}

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.model.link = default_80211g_link_model();
  spec.densities_per_m2 = {0.001};
  spec.distances_m = {20, 100};
  spec.placements_per_density = 2;
  spec.trials_per_estimate = 150;
  spec.seed = 7;
  spec.use_disk_cache = false;
  spec.psnr_curves.emplace_back("sample", sample_curve());
  return spec;
}

}  // namespace

TEST_CASE("a small sweep produces consistent rows, plans and csv files") {
  ExperimentSpec spec = small_spec();
  fs::path dir = fresh_dir("small_run");
  AggregateReport report = run_experiment(spec, dir);

  const int S = 4, D = 1, J = 2, P = 2;
  REQUIRE(report.rows.size() == static_cast<size_t>(S * D * J));
  REQUIRE(report.plans.size() == static_cast<size_t>(S * D * J * P));
  REQUIRE(report.psnr_names == std::vector<std::string>{"sample"});

  // Rows and plans are scheme-major in spec order, then density, distance,
  // placement.
  for (int si = 0; si < S; ++si) {
    for (int dj = 0; dj < J; ++dj) {
      const AggregateRow& row = report.rows[si * J + dj];
      CHECK(row.scheme == spec.schemes[si]);
      CHECK(row.density == 0.001);
      CHECK(row.distance_m == spec.distances_m[dj]);
      CHECK(row.placements == P);

      double sum = 0.0;
      std::vector<double> rates;
      for (int pi = 0; pi < P; ++pi) {
        const PlanRow& plan = report.plans[(si * J + dj) * P + pi];
        CHECK(plan.scheme == row.scheme);
        CHECK(plan.distance_m == row.distance_m);
        CHECK(plan.placement == pi);
        rates.push_back(plan.opt.result.feasible ? plan.opt.result.avg_video_rate_bps : 0.0);
        sum += rates.back();
      }
      CHECK(row.mean_avg_video_rate_bps == sum / P);

      double ss = 0.0;
      for (double r : rates) ss += (r - sum / P) * (r - sum / P);
      CHECK(row.stderr_bps == doctest::Approx(std::sqrt(ss / (P - 1)) / std::sqrt(P)));

      double acc = 0.0;
      for (double r : rates) acc += map_rate_to_psnr(r, spec.psnr_curves[0].second);
      REQUIRE(row.mean_psnr_db.size() == 1);
      CHECK(row.mean_psnr_db[0] == acc / P);
    }
  }

  // Every feasible plan respects the loss cap, and the relay schemes never
  // fall below direct on the same placement (the fallback branch nests the
  // direct candidates).
  auto opt_of = [&](int si, int dj, int pi) -> const Optimum& {
    return report.plans[(si * J + dj) * P + pi].opt;
  };
  for (const PlanRow& plan : report.plans) {
    if (!plan.opt.result.feasible) continue;
    const PerEstimate& per = plan.opt.result.per_used;
    CHECK(per.per(Direction::u1_to_u2) <= spec.model.system.per_cap);
    CHECK(per.per(Direction::u2_to_u1) <= spec.model.system.per_cap);
  }
  for (int dj = 0; dj < J; ++dj) {
    for (int pi = 0; pi < P; ++pi) {
      double direct = opt_of(0, dj, pi).result.avg_video_rate_bps;
      double rdstc = opt_of(1, dj, pi).result.avg_video_rate_bps;
      double hr = opt_of(2, dj, pi).result.avg_video_rate_bps;
      double nc = opt_of(3, dj, pi).result.avg_video_rate_bps;
      CHECK(rdstc >= direct);
      CHECK(hr >= direct);
      CHECK(nc >= direct);
      CHECK(nc >= hr);
    }
  }

  REQUIRE(fs::exists(dir / "report.csv"));
  REQUIRE(fs::exists(dir / "plans.csv"));
  REQUIRE(fs::exists(dir / "ratios.csv"));

  AggregateReport back = read_report_csv(dir / "report.csv");
  REQUIRE(back.psnr_names == report.psnr_names);
  REQUIRE(back.rows.size() == report.rows.size());
  for (size_t i = 0; i < back.rows.size(); ++i) {
    const AggregateRow& a = report.rows[i];
    const AggregateRow& b = back.rows[i];
    CHECK(b.scheme == a.scheme);
    CHECK(b.density == a.density);
    CHECK(b.distance_m == a.distance_m);
    CHECK(b.placements == a.placements);
    CHECK(b.infeasible == a.infeasible);
    CHECK(b.mean_avg_video_rate_bps == a.mean_avg_video_rate_bps);  // fmt round trips
    CHECK(b.stderr_bps == a.stderr_bps);
    CHECK(b.mean_psnr_db == a.mean_psnr_db);
  }

  std::vector<PlanRow> plans = read_plans_csv(dir / "plans.csv");
  REQUIRE(plans.size() == report.plans.size());
  for (size_t i = 0; i < plans.size(); ++i) {
    const PlanRow& a = report.plans[i];
    const PlanRow& b = plans[i];
    CHECK(b.scheme == a.scheme);
    CHECK(b.placement == a.placement);
    CHECK(b.opt.plan.relay_off == a.opt.plan.relay_off);
    CHECK(b.opt.plan.r12_bps == a.opt.plan.r12_bps);
    CHECK(b.opt.plan.r21_bps == a.opt.plan.r21_bps);
    CHECK(b.opt.plan.rr2_bps == a.opt.plan.rr2_bps);
    CHECK(b.opt.plan.rr1_bps == a.opt.plan.rr1_bps);
    CHECK(b.opt.plan.rr_bps == a.opt.plan.rr_bps);
    CHECK(b.opt.plan.t_i == a.opt.plan.t_i);
    CHECK(b.opt.result.feasible == a.opt.result.feasible);
    CHECK(b.opt.result.n12 == a.opt.result.n12);
    CHECK(b.opt.result.n21 == a.opt.result.n21);
    CHECK(b.opt.result.s12 == a.opt.result.s12);
    CHECK(b.opt.result.s21 == a.opt.result.s21);
    CHECK(b.opt.result.per_used.scheme == a.opt.result.per_used.scheme);
    CHECK(b.opt.result.per_used.p12 == a.opt.result.per_used.p12);
    CHECK(b.opt.result.per_used.p21 == a.opt.result.per_used.p21);
    CHECK(b.opt.result.avg_video_rate_bps == a.opt.result.avg_video_rate_bps);
  }

  // Same spec, fresh output directory: byte-identical artifacts.
  fs::path dir2 = fresh_dir("small_run_repeat");
  run_experiment(spec, dir2);
  CHECK(read_file(dir / "report.csv") == read_file(dir2 / "report.csv"));
  CHECK(read_file(dir / "plans.csv") == read_file(dir2 / "plans.csv"));
  CHECK(read_file(dir / "ratios.csv") == read_file(dir2 / "ratios.csv"));
}

TEST_CASE("ratios are only written when both comparison schemes ran") {
  ExperimentSpec spec = small_spec();
  spec.schemes = {SchemeKind::direct, SchemeKind::rdstc_nc};
  spec.distances_m = {20};
  spec.placements_per_density = 1;
  spec.trials_per_estimate = 60;
  fs::path dir = fresh_dir("no_ratios");
  AggregateReport report = run_experiment(spec, dir);
  CHECK(report.rows.size() == 2);
  CHECK(fs::exists(dir / "report.csv"));
  CHECK(!fs::exists(dir / "ratios.csv"));
}

TEST_CASE("scheme comparison builds ratios with propagated error") {
  AggregateReport report;
  auto add = [&](SchemeKind s, double density, double dist, double mean, double err) {
    AggregateRow row;
    row.scheme = s;
    row.density = density;
    row.distance_m = dist;
    row.mean_avg_video_rate_bps = mean;
    row.stderr_bps = err;
    report.rows.push_back(row);
  };
  add(SchemeKind::direct, 0.001, 20, 9.9, 0.0);  // ignored
  add(SchemeKind::rdstc_hr, 0.001, 20, 2.0, 0.1);
  add(SchemeKind::rdstc_nc, 0.001, 20, 3.0, 0.2);
  add(SchemeKind::rdstc_nc, 0.001, 60, 1.0, 0.1);  // hr side missing
  add(SchemeKind::rdstc_hr, 0.001, 100, 0.0, 0.0);
  add(SchemeKind::rdstc_nc, 0.001, 100, 0.5, 0.1);  // hr mean zero: no ratio

  std::vector<RatioRow> rows = compare_schemes(report);
  REQUIRE(rows.size() == 3);

  CHECK(rows[0].distance_m == 20);
  CHECK(rows[0].nc_mean_bps == 3.0);
  CHECK(rows[0].hr_mean_bps == 2.0);
  REQUIRE(rows[0].ratio_nc_over_hr.has_value());
  CHECK(*rows[0].ratio_nc_over_hr == doctest::Approx(1.5));
  // sqrt((0.2/2)^2 + (3 * 0.1 / 4)^2) = 0.125
  CHECK(*rows[0].ratio_stderr == doctest::Approx(0.125));

  CHECK(rows[1].distance_m == 60);
  CHECK(!rows[1].hr_mean_bps.has_value());
  CHECK(!rows[1].ratio_nc_over_hr.has_value());

  CHECK(rows[2].distance_m == 100);
  CHECK(!rows[2].ratio_nc_over_hr.has_value());

  fs::path dir = fresh_dir("ratios_csv");
  write_ratios_csv(rows, dir / "ratios.csv");
  std::string text = read_file(dir / "ratios.csv");
  CHECK(text.find("density,distance_m,nc_mean_bps,hr_mean_bps,ratio_nc_over_hr,ratio_stderr\n") ==
        0);
  CHECK(text.find("0.001,60,1,,,") != std::string::npos);  // missing side stays empty
}
