#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmptrack/baseline.hpp"
#include "vmptrack/metrics.hpp"
#include "vmptrack/scenario.hpp"
#include "vmptrack/snapshot.hpp"
#include "vmptrack/tracker.hpp"

namespace vmptrack {

// Process exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitScenario = 2,
  kExitOutput = 3,
  kExitRunFailures = 4,
};

// Output directory or file could not be written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Snapshot cache file missing, truncated or of the wrong shape.
class CacheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string scenario_path;  // empty: built-in three-track scene
  int num_runs = 1;
  std::uint64_t base_seed = 1;
  bool run_vmp = true;
  bool run_baseline = true;
  std::string output_dir = "out";
  std::string cache_dir;  // read snapshots from here when set
  OspaConfig ospa;
  int workers = 0;  // 0: VMPTRACK_WORKERS, else hardware concurrency
  TrackerConfig tracker;
  DetectorConfig detector;
  KfConfig kf;

  void validate() const;
};

// Worker count after applying the VMPTRACK_WORKERS override.
int resolve_workers(int requested);

struct RunResult {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::vector<std::vector<Estimate>> estimates;  // per step
  std::vector<double> ospa;                      // per step
  std::vector<int> cardinality;                  // per step
  std::vector<double> errors;                    // matched position errors, pooled over steps
};

struct TrackerResults {
  std::string name;  // "vmp" or "baseline"
  std::vector<RunResult> runs;  // ordered by seed

  int failed_runs() const;
};

struct ReportBundle {
  Scenario scenario;
  OspaConfig ospa;
  std::vector<std::vector<TruthObject>> truth;  // per step
  std::vector<TrackerResults> trackers;

  const TrackerResults* find(const std::string& name) const;
  int num_steps() const { return static_cast<int>(truth.size()); }
  int step_of(int index) const { return scenario.first_step + index; }
};

// Per-step aggregate of one tracker over all completed runs.
struct StepSummary {
  RVec ospa_mean, ospa_std;
  RVec cardinality_mean, cardinality_std;
};
StepSummary summarize_steps(const TrackerResults& results, int num_steps);

// Steps whose index lies within `window` steps of a track birth.
std::vector<bool> birth_window_mask(const Scenario& scenario, int window = 5);

struct HeadlineNumbers {
  double mean_ospa = 0.0;
  double mean_ospa_established = 0.0;  // birth windows excluded
  double rmse_p90 = 0.0;
  double rmse_fraction_below = 0.0;  // share of errors <= 1.6 m
  double mean_cardinality_error = 0.0;
  int completed_runs = 0;
  int failed_runs = 0;
};
HeadlineNumbers headline_numbers(const ReportBundle& bundle, const TrackerResults& results);

// Runs one seed through the selected trackers.  Snapshots are simulated unless
// supplied.
std::vector<RunResult> run_single(const Scenario& scenario, const RunConfig& config, std::uint64_t seed,
                                  const PeakDetector* detector, const std::vector<Snapshot>* snapshots = nullptr);

// Seeds base_seed .. base_seed + num_runs - 1 on a worker pool.  A run that
// throws is flagged and the batch continues.
ReportBundle run_monte_carlo(const RunConfig& config, const Scenario& scenario);
// Loads the scenario first (ScenarioError on failure).
ReportBundle run_monte_carlo(const RunConfig& config);

// Writes ospa_per_step.csv, cardinality_per_step.csv, rmse_cdf.csv,
// tracks_example.csv and summary.json.  Throws OutputError.
void emit_reports(const ReportBundle& bundle, const std::string& dir);

// Raw per-run results, enough to regenerate every report.
std::string results_to_json(const ReportBundle& bundle);
ReportBundle results_from_json(const std::string& text);

// Snapshot cache: one little-endian file per run.
//   char[8]  magic "VMPSNAP\0"
//   u32      version (1)
//   u32      dtype (1 = complex64: float32 real, float32 imag)
//   i32      first step
//   u32      number of steps
//   u32      samples per step
//   u64      seed
//   then steps x samples complex64 values, step-major.
std::string cache_file_name(std::uint64_t seed);
void write_snapshot_cache(const std::string& path, const std::vector<Snapshot>& snapshots, std::uint64_t seed);
// Noise precision is not stored; it is filled from `noise_precision`.
std::vector<Snapshot> read_snapshot_cache(const std::string& path, const RVec& noise_precision,
                                          std::uint64_t* seed = nullptr);

std::vector<Snapshot> simulate_run(const Scenario& scenario, std::uint64_t seed);

}  // namespace vmptrack
