// vmptrack command line: simulate, track, bench, report.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vmptrack/harness.hpp"
#include "vmptrack/radar_sim.hpp"

using namespace vmptrack;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string scenario;
  int runs = 1;
  std::uint64_t seed = 1;
  std::string tracker = "both";
  std::string out = "out";
  std::string cache;
  int workers = 0;
};

void add_common(CLI::App* cmd, Options& o, bool with_tracker) {
  cmd->add_option("--scenario", o.scenario, "scenario JSON (default: built-in three-track scene)");
  cmd->add_option("--runs", o.runs, "number of Monte-Carlo runs")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "seed of the first run");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--workers", o.workers, "worker threads (VMPTRACK_WORKERS overrides)")->check(CLI::NonNegativeNumber);
  if (with_tracker) {
    cmd->add_option("--tracker", o.tracker, "vmp, baseline or both")->check(CLI::IsMember({"vmp", "baseline", "both"}));
    cmd->add_option("--cache", o.cache, "read snapshots written by `simulate` from this directory");
  }
}

Scenario read_scenario(const Options& o) { return o.scenario.empty() ? reference_scenario() : load_scenario(o.scenario); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw OutputError("cannot create output directory " + dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw OutputError("cannot write " + path.string());
}

RunConfig run_config(const Options& o) {
  RunConfig cfg;
  cfg.scenario_path = o.scenario;
  cfg.num_runs = o.runs;
  cfg.base_seed = o.seed;
  cfg.run_vmp = o.tracker != "baseline";
  cfg.run_baseline = o.tracker != "vmp";
  cfg.output_dir = o.out;
  cfg.cache_dir = o.cache;
  cfg.workers = o.workers;
  return cfg;
}

int failure_exit(const ReportBundle& bundle) {
  for (const auto& t : bundle.trackers) {
    int failed = t.failed_runs();
    for (const auto& r : t.runs)
      if (r.failed) std::cerr << t.name << " run seed " << r.seed << " failed: " << r.error << "\n";
    if (failed * 100 > static_cast<int>(t.runs.size())) return kExitRunFailures;
  }
  return kExitOk;
}

void print_headline(const ReportBundle& bundle) {
  for (const auto& t : bundle.trackers) {
    auto h = headline_numbers(bundle, t);
    std::printf("%-8s mean OSPA %.3f m (established %.3f m)  RMSE p90 %.3f m  <=1.6 m %.1f%%  |card err| %.3f  runs %d/%d\n",
                t.name.c_str(), h.mean_ospa, h.mean_ospa_established, h.rmse_p90, 100.0 * h.rmse_fraction_below,
                h.mean_cardinality_error, h.completed_runs, h.completed_runs + h.failed_runs);
  }
}

int cmd_simulate(const Options& o) {
  Scenario sc = read_scenario(o);
  sc.validate();
  ensure_dir(o.out);
  write_text(fs::path(o.out) / "scenario.json", scenario_to_json(sc) + "\n");
  for (int i = 0; i < o.runs; ++i) {
    std::uint64_t seed = o.seed + static_cast<std::uint64_t>(i);
    write_snapshot_cache((fs::path(o.out) / cache_file_name(seed)).string(), simulate_run(sc, seed), seed);
  }
  std::printf("wrote %d snapshot files to %s\n", o.runs, o.out.c_str());
  return kExitOk;
}

int cmd_track(const Options& o, bool bench) {
  Scenario sc = read_scenario(o);
  RunConfig cfg = run_config(o);
  auto t0 = std::chrono::steady_clock::now();
  ReportBundle bundle = run_monte_carlo(cfg, sc);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ensure_dir(o.out);
  write_text(fs::path(o.out) / "results.json", results_to_json(bundle));
  bool any_completed = false;
  for (const auto& t : bundle.trackers) any_completed |= t.failed_runs() < static_cast<int>(t.runs.size());
  if (!any_completed) {
    failure_exit(bundle);
    std::cerr << "error: every run failed; no reports written\n";
    return kExitRunFailures;
  }
  emit_reports(bundle, o.out);
  print_headline(bundle);
  if (bench)
    std::printf("wall time %.2f s for %d runs (%d workers)\n", secs, o.runs,
                std::min(resolve_workers(o.workers), o.runs));
  return failure_exit(bundle);
}

int cmd_report(const std::string& results, const std::string& out) {
  std::ifstream f(results, std::ios::binary);
  if (!f) throw ScenarioError("cannot read " + results);
  std::stringstream ss;
  ss << f.rdbuf();
  ReportBundle bundle = results_from_json(ss.str());
  emit_reports(bundle, out);
  print_headline(bundle);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signal-level multi-object radar tracking: simulation, VMP and detect-then-track trackers, OSPA reports"};
  app.require_subcommand(1);
  Options sim_o, track_o, bench_o;
  bench_o.runs = 100;
  std::string report_results, report_out = "out";

  auto* sim = app.add_subcommand("simulate", "simulate snapshots and write the per-run cache");
  add_common(sim, sim_o, false);
  auto* track = app.add_subcommand("track", "run trackers over seeded runs and write reports");
  add_common(track, track_o, true);
  auto* bench = app.add_subcommand("bench", "Monte-Carlo benchmark (100 runs, both trackers by default)");
  add_common(bench, bench_o, true);
  auto* report = app.add_subcommand("report", "regenerate reports from results.json");
  report->add_option("--out", report_out, "directory holding results.json; reports are written here");
  report->add_option("--results", report_results, "results file (default: <out>/results.json)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return cmd_simulate(sim_o);
    if (*track) return cmd_track(track_o, false);
    if (*bench) return cmd_track(bench_o, true);
    if (*report)
      return cmd_report(report_results.empty() ? (fs::path(report_out) / "results.json").string() : report_results,
                        report_out);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitScenario;
  } catch (const OutputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOutput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
