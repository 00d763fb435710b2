#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vmptrack/harness.hpp"
#include "vmptrack/radar_sim.hpp"

using namespace vmptrack;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vmptrack_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// First 20 steps of the three-track scene: tracks 1 and 2 only, crossing at 22 excluded.
Scenario short_scenario() {
  Scenario sc = reference_scenario();
  sc.num_steps = 20;
  return sc;
}

RunConfig short_config(int runs, int workers) {
  RunConfig cfg;
  cfg.num_runs = runs;
  cfg.base_seed = 7;
  cfg.workers = workers;
  cfg.detector.calibration_snapshots = 20;
  return cfg;
}

// RFC-4180 rows without quoting: CRLF-terminated, equal field counts.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t end = text.find("\r\n", pos);
    EXPECT_NE(end, std::string::npos) << "row not CRLF-terminated";
    if (end == std::string::npos) break;
    const std::string line = text.substr(pos, end - pos);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(line.find('"'), std::string::npos);
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(fields);
    pos = end + 2;
  }
  for (const auto& r : rows) EXPECT_EQ(r.size(), rows.front().size());
  return rows;
}

// Synthetic bundle over the full 100-step scene; no tracking involved.
ReportBundle synthetic_bundle(int runs) {
  ReportBundle b;
  b.scenario = reference_scenario();
  b.truth = b.scenario.truth();
  for (const std::string name : {"vmp", "baseline"}) {
    TrackerResults t;
    t.name = name;
    for (int r = 0; r < runs; ++r) {
      RunResult run;
      run.seed = 100 + r;
      for (int i = 0; i < b.num_steps(); ++i) {
        std::vector<Estimate> est;
        for (const auto& o : b.truth[i]) {
          Estimate e;
          e.track_id = o.track + 1;
          e.state = o.state + Vec4(0.1 * (r + 1), -0.05 * i / 100.0, 0, 0);
          e.existence = 0.9;
          est.push_back(e);
        }
        if ((i + r) % 7 == 0 && !est.empty()) est.pop_back();
        std::vector<Vec2> tp, ep;
        for (const auto& o : b.truth[i]) tp.push_back(o.state.head<2>());
        for (const auto& e : est) ep.push_back(e.state.head<2>());
        run.ospa.push_back(ospa(tp, ep, b.ospa));
        run.cardinality.push_back(static_cast<int>(est.size()));
        const auto err = matched_errors(tp, ep, b.ospa);
        run.errors.insert(run.errors.end(), err.begin(), err.end());
        run.estimates.push_back(est);
      }
      t.runs.push_back(run);
    }
    b.trackers.push_back(t);
  }
  return b;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VMPTRACK_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(RunConfig, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.num_runs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.run_vmp = c.run_baseline = false;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfig, WorkerOverride) {
  ::setenv("VMPTRACK_WORKERS", "3", 1);
  EXPECT_EQ(resolve_workers(0), 3);
  ::unsetenv("VMPTRACK_WORKERS");
  EXPECT_EQ(resolve_workers(2), 2);
  EXPECT_GE(resolve_workers(0), 1);
}

TEST(MonteCarlo, DeterministicAcrossWorkerCounts) {
  const Scenario sc = short_scenario();
  const auto a = run_monte_carlo(short_config(2, 1), sc);
  const auto b = run_monte_carlo(short_config(2, 2), sc);
  EXPECT_EQ(results_to_json(a), results_to_json(b));
  const auto da = temp_dir("det_a"), db = temp_dir("det_b");
  emit_reports(a, da.string());
  emit_reports(b, db.string());
  for (const char* f : {"ospa_per_step.csv", "cardinality_per_step.csv", "rmse_cdf.csv", "tracks_example.csv",
                        "summary.json"})
    EXPECT_EQ(slurp(da / f), slurp(db / f)) << f;
}

TEST(MonteCarlo, DistinctSeedsVary) {
  const auto b = run_monte_carlo(short_config(4, 0), short_scenario());
  ASSERT_EQ(b.trackers.size(), 2u);
  for (const auto& t : b.trackers) {
    EXPECT_EQ(t.failed_runs(), 0);
    ASSERT_EQ(t.runs.size(), 4u);
    for (size_t r = 0; r < 4; ++r) EXPECT_EQ(t.runs[r].seed, 7 + r);
  }
  const auto s = summarize_steps(b.trackers[0], b.num_steps());
  EXPECT_GT(s.ospa_std.maxCoeff(), 0.0);
}

TEST(MonteCarlo, CacheMatchesSimulation) {
  const Scenario sc = short_scenario();
  const auto dir = temp_dir("cache_run");
  for (std::uint64_t seed : {7, 8}) write_snapshot_cache((dir / cache_file_name(seed)).string(), simulate_run(sc, seed), seed);
  RunConfig cfg = short_config(2, 1);
  cfg.run_baseline = false;
  const auto direct = run_monte_carlo(cfg, sc);
  cfg.cache_dir = dir.string();
  const auto cached = run_monte_carlo(cfg, sc);
  ASSERT_EQ(cached.trackers[0].failed_runs(), 0);
  // float32 storage: same track sets, positions within millimetres
  for (size_t r = 0; r < 2; ++r)
    for (int i = 0; i < sc.num_steps; ++i) {
      const auto& e1 = direct.trackers[0].runs[r].estimates[i];
      const auto& e2 = cached.trackers[0].runs[r].estimates[i];
      ASSERT_EQ(e1.size(), e2.size());
      for (size_t k = 0; k < e1.size(); ++k) EXPECT_LT((e1[k].state.head<2>() - e2[k].state.head<2>()).norm(), 1e-3);
    }
}

TEST(MonteCarlo, FailedRunsAreFlagged) {
  RunConfig cfg = short_config(2, 1);
  cfg.cache_dir = (fs::temp_directory_path() / "vmptrack_no_such_cache").string();
  const auto b = run_monte_carlo(cfg, short_scenario());
  for (const auto& t : b.trackers) {
    EXPECT_EQ(t.failed_runs(), 2);
    EXPECT_FALSE(t.runs[0].error.empty());
  }
  EXPECT_THROW(emit_reports(b, temp_dir("failed").string()), std::runtime_error);
}

TEST(MonteCarlo, UnreadableScenario) {
  RunConfig cfg;
  cfg.scenario_path = "/nonexistent/scenario.json";
  EXPECT_THROW(run_monte_carlo(cfg), ScenarioError);
}

TEST(Reports, CsvLayout) {
  const auto b = synthetic_bundle(3);
  const auto dir = temp_dir("csv");
  emit_reports(b, dir.string());

  const auto ospa_rows = parse_csv(slurp(dir / "ospa_per_step.csv"));
  ASSERT_EQ(ospa_rows.size(), 101u);
  EXPECT_EQ(ospa_rows[0], (std::vector<std::string>{"step", "vmp_mean", "vmp_std", "baseline_mean", "baseline_std"}));
  EXPECT_EQ(ospa_rows[1][0], "1");
  EXPECT_EQ(ospa_rows[100][0], "100");

  const auto card = parse_csv(slurp(dir / "cardinality_per_step.csv"));
  ASSERT_EQ(card.size(), 101u);
  EXPECT_EQ(card[0][1], "truth");
  EXPECT_EQ(card[60][1], "3");

  const auto cdf = parse_csv(slurp(dir / "rmse_cdf.csv"));
  ASSERT_EQ(cdf.size(), 102u);
  EXPECT_EQ(cdf[0], (std::vector<std::string>{"probability", "vmp_error", "baseline_error"}));
  for (size_t i = 2; i < cdf.size(); ++i) EXPECT_GE(std::stod(cdf[i][1]), std::stod(cdf[i - 1][1]));

  const auto tracks = parse_csv(slurp(dir / "tracks_example.csv"));
  EXPECT_EQ(tracks[0][0], "step");
  EXPECT_GT(tracks.size(), 200u);
}

TEST(Reports, SummaryJson) {
  const auto b = synthetic_bundle(2);
  const auto dir = temp_dir("summary");
  emit_reports(b, dir.string());
  const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  for (const char* k : {"mean_ospa", "rmse_p90", "mean_cardinality_error", "mean_ospa_established", "completed_runs"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_TRUE(j["trackers"].contains("vmp"));
  EXPECT_TRUE(j["trackers"].contains("baseline"));
  const auto h = headline_numbers(b, b.trackers[0]);
  EXPECT_DOUBLE_EQ(j["mean_ospa"].get<double>(), h.mean_ospa);
  EXPECT_EQ(j["completed_runs"].get<int>(), 2);
}

TEST(Reports, UnwritableDirectory) {
  const auto dir = temp_dir("blocked");
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(emit_reports(synthetic_bundle(1), (dir / "file" / "sub").string()), OutputError);
}

TEST(Reports, RunOrderInvariant) {
  const auto b = synthetic_bundle(5);
  auto r = b;
  for (auto& t : r.trackers) std::reverse(t.runs.begin(), t.runs.end());
  for (size_t k = 0; k < b.trackers.size(); ++k) {
    const auto s1 = summarize_steps(b.trackers[k], b.num_steps());
    const auto s2 = summarize_steps(r.trackers[k], r.num_steps());
    EXPECT_LT((s1.ospa_mean - s2.ospa_mean).norm(), 1e-12);
    EXPECT_LT((s1.ospa_std - s2.ospa_std).norm(), 1e-12);
    EXPECT_LT((s1.cardinality_mean - s2.cardinality_mean).norm(), 1e-12);
    const auto h1 = headline_numbers(b, b.trackers[k]), h2 = headline_numbers(r, r.trackers[k]);
    EXPECT_NEAR(h1.mean_ospa, h2.mean_ospa, 1e-12);
    EXPECT_EQ(h1.rmse_p90, h2.rmse_p90);
    EXPECT_NEAR(h1.mean_cardinality_error, h2.mean_cardinality_error, 1e-12);
  }
}

TEST(Reports, BirthWindows) {
  const auto mask = birth_window_mask(reference_scenario());
  ASSERT_EQ(mask.size(), 100u);
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(mask[i]);
  EXPECT_FALSE(mask[5]);
  for (int i = 49; i < 54; ++i) EXPECT_TRUE(mask[i]);
  EXPECT_FALSE(mask[54]);
}

TEST(Results, JsonRoundTrip) {
  const auto b = synthetic_bundle(2);
  const std::string text = results_to_json(b);
  const auto back = results_from_json(text);
  EXPECT_EQ(results_to_json(back), text);
  EXPECT_EQ(back.trackers[1].runs[1].ospa, b.trackers[1].runs[1].ospa);
  EXPECT_THROW(results_from_json("{\"not\": 1}"), std::exception);
}

TEST(Cache, RoundTrip) {
  const Scenario sc = short_scenario();
  const auto snaps = simulate_run(sc, 11);
  const auto path = (temp_dir("cache") / cache_file_name(11)).string();
  write_snapshot_cache(path, snaps, 11);
  EXPECT_EQ(fs::file_size(path), 36u + 8ull * snaps.size() * snaps[0].size());
  EXPECT_EQ(slurp(path).substr(0, 8), std::string("VMPSNAP\0", 8));
  std::uint64_t seed = 0;
  const auto back = read_snapshot_cache(path, snaps[0].noise_precision, &seed);
  EXPECT_EQ(seed, 11u);
  ASSERT_EQ(back.size(), snaps.size());
  for (size_t n = 0; n < snaps.size(); ++n) {
    EXPECT_EQ(back[n].step, snaps[n].step);
    EXPECT_LT((back[n].data - snaps[n].data).norm(), 1e-6 * snaps[n].data.norm());
    EXPECT_EQ(back[n].noise_precision, snaps[n].noise_precision);
  }
}

TEST(Cache, RejectsDamagedFiles) {
  const auto snaps = simulate_run(short_scenario(), 12);
  const auto dir = temp_dir("cache_bad");
  const auto path = (dir / "ok.bin").string();
  write_snapshot_cache(path, snaps, 12);
  const std::string bytes = slurp(path);
  std::ofstream((dir / "short.bin"), std::ios::binary) << bytes.substr(0, bytes.size() - 5);
  std::string bad = bytes;
  bad[0] = 'X';
  std::ofstream((dir / "magic.bin"), std::ios::binary) << bad;
  const RVec& lam = snaps[0].noise_precision;
  EXPECT_THROW(read_snapshot_cache((dir / "short.bin").string(), lam), CacheError);
  EXPECT_THROW(read_snapshot_cache((dir / "magic.bin").string(), lam), CacheError);
  EXPECT_THROW(read_snapshot_cache((dir / "missing.bin").string(), lam), CacheError);
  EXPECT_THROW(read_snapshot_cache(path, RVec::Ones(3)), CacheError);
}

TEST(Cli, ExitCodes) {
  const auto dir = temp_dir("cli");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_NE(run_cli("track --tracker nope"), 0);
  EXPECT_EQ(run_cli("track --scenario /nonexistent.json --out " + (dir / "a").string()), kExitScenario);
  std::ofstream(dir / "file") << "x";
  EXPECT_EQ(run_cli("simulate --runs 1 --out " + (dir / "file" / "sub").string()), kExitOutput);
  EXPECT_EQ(run_cli("track --runs 2 --tracker vmp --cache " + (dir / "nocache").string() + " --out " +
                    (dir / "b").string()),
            kExitRunFailures);
}

TEST(Cli, SimulateTrackReport) {
  const auto dir = temp_dir("cli_flow");
  // short scene written by hand, then simulated, tracked from cache and re-reported
  Scenario sc = short_scenario();
  sc.num_steps = 8;
  std::ofstream(dir / "scene.json") << scenario_to_json(sc);
  const std::string scene = (dir / "scene.json").string();
  ASSERT_EQ(run_cli("simulate --runs 1 --seed 3 --scenario " + scene + " --out " + (dir / "sim").string()), 0);
  ASSERT_TRUE(fs::exists(dir / "sim" / cache_file_name(3)));
  ASSERT_EQ(run_cli("track --runs 1 --seed 3 --tracker vmp --scenario " + scene + " --cache " +
                    (dir / "sim").string() + " --out " + (dir / "out").string()),
            0);
  const std::string before = slurp(dir / "out" / "ospa_per_step.csv");
  fs::remove(dir / "out" / "ospa_per_step.csv");
  ASSERT_EQ(run_cli("report --out " + (dir / "out").string()), 0);
  EXPECT_EQ(slurp(dir / "out" / "ospa_per_step.csv"), before);
  EXPECT_EQ(parse_csv(before).size(), 9u);
}
