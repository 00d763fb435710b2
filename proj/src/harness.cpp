#include "vmptrack/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "vmptrack/radar_sim.hpp"

namespace vmptrack {

using nlohmann::json;
namespace fs = std::filesystem;

void RunConfig::validate() const {
  if (num_runs < 1) throw ConfigError("num_runs must be at least 1");
  if (!run_vmp && !run_baseline) throw ConfigError("no tracker selected");
  if (workers < 0) throw ConfigError("workers must be non-negative");
  ospa.validate();
  tracker.validate();
}

int resolve_workers(int requested) {
  if (const char* env = std::getenv("VMPTRACK_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

int TrackerResults::failed_runs() const {
  return static_cast<int>(std::count_if(runs.begin(), runs.end(), [](const RunResult& r) { return r.failed; }));
}

const TrackerResults* ReportBundle::find(const std::string& name) const {
  for (const auto& t : trackers)
    if (t.name == name) return &t;
  return nullptr;
}

std::vector<Snapshot> simulate_run(const Scenario& scenario, std::uint64_t seed) {
  RadarSimulator sim(scenario.radar);
  std::vector<Snapshot> out;
  out.reserve(scenario.num_steps);
  for (int n = scenario.first_step; n <= scenario.last_step(); ++n)
    out.push_back(simulate_snapshot(scenario, sim, n, seed));
  return out;
}

namespace {

std::vector<Vec2> truth_positions(const std::vector<TruthObject>& objs) {
  std::vector<Vec2> out;
  for (const auto& o : objs) out.push_back(o.state.head<2>());
  return out;
}

void score(RunResult& run, const std::vector<std::vector<TruthObject>>& truth, const OspaConfig& cfg) {
  run.ospa.clear();
  run.cardinality.clear();
  run.errors.clear();
  for (size_t i = 0; i < truth.size(); ++i) {
    auto tp = truth_positions(truth[i]);
    std::vector<Vec2> ep;
    for (const auto& e : run.estimates[i]) ep.push_back(e.state.head<2>());
    auto res = ospa_detailed(tp, ep, cfg);
    run.ospa.push_back(res.distance);
    run.cardinality.push_back(static_cast<int>(ep.size()));
    for (double d : res.match_distances)
      if (d < cfg.cutoff) run.errors.push_back(d);
  }
}

}  // namespace

std::vector<RunResult> run_single(const Scenario& scenario, const RunConfig& config, std::uint64_t seed,
                                  const PeakDetector* detector, const std::vector<Snapshot>* snapshots) {
  std::vector<Snapshot> local;
  if (!snapshots) {
    local = simulate_run(scenario, seed);
    snapshots = &local;
  }
  if (static_cast<int>(snapshots->size()) != scenario.num_steps)
    throw CacheError("snapshot count does not match the scenario");
  auto truth = scenario.truth();

  std::vector<RunResult> out;
  auto run_tracker = [&](auto& tracker) {
    RunResult r;
    r.seed = seed;
    try {
      for (const auto& s : *snapshots) r.estimates.push_back(tracker.step(s));
      score(r, truth, config.ospa);
    } catch (const std::exception& e) {
      r = RunResult{};
      r.seed = seed;
      r.failed = true;
      r.error = e.what();
    }
    out.push_back(std::move(r));
  };
  if (config.run_vmp) {
    VmpTracker tracker(scenario.radar, config.tracker);
    run_tracker(tracker);
  }
  if (config.run_baseline) {
    if (!detector) throw ConfigError("baseline requested without a detector");
    BaselineTracker tracker(scenario.radar, *detector, config.kf);
    run_tracker(tracker);
  }
  return out;
}

ReportBundle run_monte_carlo(const RunConfig& config, const Scenario& scenario) {
  config.validate();
  scenario.validate();
  ReportBundle bundle;
  bundle.scenario = scenario;
  bundle.ospa = config.ospa;
  bundle.truth = scenario.truth();
  if (config.run_vmp) bundle.trackers.push_back({"vmp", {}});
  if (config.run_baseline) bundle.trackers.push_back({"baseline", {}});
  for (auto& t : bundle.trackers) t.runs.resize(config.num_runs);

  std::optional<PeakDetector> detector;
  if (config.run_baseline) detector.emplace(scenario.radar, config.detector);
  RVec precision;
  if (!config.cache_dir.empty()) precision = RadarSimulator(scenario.radar).noise_precision();

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next++; i < config.num_runs; i = next++) {
      std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(i);
      std::vector<RunResult> results;
      try {
        if (!config.cache_dir.empty()) {
          auto path = (fs::path(config.cache_dir) / cache_file_name(seed)).string();
          auto snaps = read_snapshot_cache(path, precision);
          results = run_single(scenario, config, seed, detector ? &*detector : nullptr, &snaps);
        } else {
          results = run_single(scenario, config, seed, detector ? &*detector : nullptr);
        }
      } catch (const std::exception& e) {
        results.assign(bundle.trackers.size(), RunResult{});
        for (auto& r : results) {
          r.seed = seed;
          r.failed = true;
          r.error = e.what();
        }
      }
      // each index is owned by exactly one worker
      for (size_t t = 0; t < results.size(); ++t) bundle.trackers[t].runs[i] = std::move(results[t]);
    }
  };
  int n_workers = std::min(resolve_workers(config.workers), config.num_runs);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return bundle;
}

ReportBundle run_monte_carlo(const RunConfig& config) {
  Scenario scenario = config.scenario_path.empty() ? reference_scenario() : load_scenario(config.scenario_path);
  return run_monte_carlo(config, scenario);
}

StepSummary summarize_steps(const TrackerResults& results, int num_steps) {
  StepSummary s;
  s.ospa_mean = RVec::Zero(num_steps);
  s.ospa_std = RVec::Zero(num_steps);
  std::vector<std::vector<int>> cards;
  std::vector<const RunResult*> ok;
  for (const auto& r : results.runs)
    if (!r.failed) {
      ok.push_back(&r);
      cards.push_back(r.cardinality);
    }
  if (ok.empty()) throw std::runtime_error("no completed runs for " + results.name);
  int n = static_cast<int>(ok.size());
  for (int i = 0; i < num_steps; ++i) {
    double sum = 0.0;
    for (auto* r : ok) sum += r->ospa[i];
    double mean = sum / n;
    double ss = 0.0;
    for (auto* r : ok) ss += (r->ospa[i] - mean) * (r->ospa[i] - mean);
    s.ospa_mean(i) = mean;
    s.ospa_std(i) = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  }
  auto cs = cardinality_stats(cards);
  s.cardinality_mean = cs.mean;
  s.cardinality_std = cs.std;
  return s;
}

std::vector<bool> birth_window_mask(const Scenario& scenario, int window) {
  std::vector<bool> mask(scenario.num_steps, false);
  for (const auto& t : scenario.tracks)
    for (int n = t.birth_step; n < t.birth_step + window && n <= t.death_step; ++n) {
      int i = n - scenario.first_step;
      if (i >= 0 && i < scenario.num_steps) mask[i] = true;
    }
  return mask;
}

HeadlineNumbers headline_numbers(const ReportBundle& bundle, const TrackerResults& results) {
  HeadlineNumbers h;
  h.failed_runs = results.failed_runs();
  h.completed_runs = static_cast<int>(results.runs.size()) - h.failed_runs;
  if (h.completed_runs == 0) return h;
  int steps = bundle.num_steps();
  auto s = summarize_steps(results, steps);
  auto mask = birth_window_mask(bundle.scenario);
  h.mean_ospa = s.ospa_mean.mean();
  double sum = 0.0;
  int cnt = 0;
  for (int i = 0; i < steps; ++i)
    if (!mask[i]) {
      sum += s.ospa_mean(i);
      ++cnt;
    }
  h.mean_ospa_established = cnt ? sum / cnt : h.mean_ospa;

  std::vector<double> errors;
  double card_err = 0.0;
  for (const auto& r : results.runs) {
    if (r.failed) continue;
    errors.insert(errors.end(), r.errors.begin(), r.errors.end());
    for (int i = 0; i < steps; ++i)
      card_err += std::abs(r.cardinality[i] - static_cast<int>(bundle.truth[i].size()));
  }
  h.mean_cardinality_error = card_err / (static_cast<double>(h.completed_runs) * steps);
  if (!errors.empty()) {
    EmpiricalCdf cdf(std::move(errors));
    h.rmse_p90 = cdf.quantile(0.9);
    h.rmse_fraction_below = cdf(1.6);
  }
  return h;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw OutputError("cannot write " + path.string());
  f << text;
  if (!f) throw OutputError("write failed for " + path.string());
}

json headline_json(const HeadlineNumbers& h) {
  return {{"mean_ospa", h.mean_ospa},
          {"mean_ospa_established", h.mean_ospa_established},
          {"rmse_p90", h.rmse_p90},
          {"rmse_fraction_below_1_6m", h.rmse_fraction_below},
          {"mean_cardinality_error", h.mean_cardinality_error},
          {"completed_runs", h.completed_runs},
          {"failed_runs", h.failed_runs}};
}

}  // namespace

void emit_reports(const ReportBundle& bundle, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw OutputError("cannot create output directory " + dir);

  int steps = bundle.num_steps();
  std::vector<const TrackerResults*> usable;
  std::vector<StepSummary> sums;
  for (const auto& t : bundle.trackers)
    if (t.failed_runs() < static_cast<int>(t.runs.size())) {
      usable.push_back(&t);
      sums.push_back(summarize_steps(t, steps));
    }
  if (usable.empty()) throw std::runtime_error("no completed runs to report");

  std::ostringstream o, c;
  o << "step";
  c << "step,truth";
  for (auto* t : usable) {
    o << ',' << t->name << "_mean," << t->name << "_std";
    c << ',' << t->name << "_mean," << t->name << "_std";
  }
  o << "\r\n";
  c << "\r\n";
  for (int i = 0; i < steps; ++i) {
    o << bundle.step_of(i);
    c << bundle.step_of(i) << ',' << bundle.truth[i].size();
    for (const auto& s : sums) {
      o << ',' << fmt(s.ospa_mean(i)) << ',' << fmt(s.ospa_std(i));
      c << ',' << fmt(s.cardinality_mean(i)) << ',' << fmt(s.cardinality_std(i));
    }
    o << "\r\n";
    c << "\r\n";
  }
  write_file(fs::path(dir) / "ospa_per_step.csv", o.str());
  write_file(fs::path(dir) / "cardinality_per_step.csv", c.str());

  // quantiles on a 1% probability grid
  std::ostringstream r;
  r << "probability";
  std::vector<std::optional<EmpiricalCdf>> cdfs;
  for (auto* t : usable) {
    r << ',' << t->name << "_error";
    std::vector<double> e;
    for (const auto& run : t->runs)
      if (!run.failed) e.insert(e.end(), run.errors.begin(), run.errors.end());
    if (e.empty())
      cdfs.emplace_back();
    else
      cdfs.emplace_back(EmpiricalCdf(std::move(e)));
  }
  r << "\r\n";
  for (int q = 0; q <= 100; ++q) {
    double p = q / 100.0;
    r << fmt(p);
    for (const auto& cdf : cdfs) r << ',' << (cdf ? fmt(cdf->quantile(p)) : std::string());
    r << "\r\n";
  }
  write_file(fs::path(dir) / "rmse_cdf.csv", r.str());

  // first completed run of every tracker next to the truth
  std::ostringstream x;
  x << "step,source,id,seed,x,y,vx,vy,existence\r\n";
  for (int i = 0; i < steps; ++i) {
    for (const auto& obj : bundle.truth[i])
      x << bundle.step_of(i) << ",truth," << obj.track + 1 << ",," << fmt(obj.state(0)) << ',' << fmt(obj.state(1))
        << ',' << fmt(obj.state(2)) << ',' << fmt(obj.state(3)) << ",1\r\n";
    for (auto* t : usable) {
      auto it = std::find_if(t->runs.begin(), t->runs.end(), [](const RunResult& run) { return !run.failed; });
      for (const auto& e : it->estimates[i])
        x << bundle.step_of(i) << ',' << t->name << ',' << e.track_id << ',' << it->seed << ',' << fmt(e.state(0))
          << ',' << fmt(e.state(1)) << ',' << fmt(e.state(2)) << ',' << fmt(e.state(3)) << ',' << fmt(e.existence)
          << "\r\n";
    }
  }
  write_file(fs::path(dir) / "tracks_example.csv", x.str());

  json summary;
  summary["num_steps"] = steps;
  summary["ospa_cutoff"] = bundle.ospa.cutoff;
  summary["ospa_order"] = bundle.ospa.order;
  json per = json::object();
  for (auto* t : usable) per[t->name] = headline_json(headline_numbers(bundle, *t));
  // headline keys at top level belong to the first tracker (vmp when it ran)
  json head = headline_json(headline_numbers(bundle, *usable.front()));
  summary["tracker"] = usable.front()->name;
  for (auto& [k, v] : head.items()) summary[k] = v;
  summary["trackers"] = per;
  write_file(fs::path(dir) / "summary.json", summary.dump(2) + "\n");
}

std::string results_to_json(const ReportBundle& bundle) {
  json j;
  j["scenario"] = json::parse(scenario_to_json(bundle.scenario));
  j["ospa"] = {{"cutoff", bundle.ospa.cutoff}, {"order", bundle.ospa.order}};
  j["trackers"] = json::array();
  for (const auto& t : bundle.trackers) {
    json jt = {{"name", t.name}, {"runs", json::array()}};
    for (const auto& r : t.runs) {
      json jr = {{"seed", r.seed}, {"failed", r.failed}};
      if (r.failed) {
        jr["error"] = r.error;
      } else {
        json steps = json::array();
        for (const auto& est : r.estimates) {
          json js = json::array();
          for (const auto& e : est)
            js.push_back({{"id", e.track_id},
                          {"state", {e.state(0), e.state(1), e.state(2), e.state(3)}},
                          {"existence", e.existence}});
          steps.push_back(std::move(js));
        }
        jr["estimates"] = std::move(steps);
      }
      jt["runs"].push_back(std::move(jr));
    }
    j["trackers"].push_back(std::move(jt));
  }
  return j.dump();
}

ReportBundle results_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("results file: ") + e.what());
  }
  ReportBundle b;
  try {
    b.scenario = scenario_from_json(j.at("scenario").dump());
    b.ospa.cutoff = j.at("ospa").at("cutoff").get<double>();
    b.ospa.order = j.at("ospa").at("order").get<double>();
    b.ospa.validate();
    b.truth = b.scenario.truth();
    for (const auto& jt : j.at("trackers")) {
      TrackerResults t;
      t.name = jt.at("name").get<std::string>();
      for (const auto& jr : jt.at("runs")) {
        RunResult r;
        r.seed = jr.at("seed").get<std::uint64_t>();
        r.failed = jr.at("failed").get<bool>();
        if (r.failed) {
          r.error = jr.value("error", std::string());
        } else {
          for (const auto& js : jr.at("estimates")) {
            std::vector<Estimate> est;
            for (const auto& je : js) {
              Estimate e;
              e.track_id = je.at("id").get<int>();
              auto s = je.at("state").get<std::vector<double>>();
              if (s.size() != 4) throw ScenarioError("results file: state must have 4 entries");
              e.state = Vec4(s[0], s[1], s[2], s[3]);
              e.existence = je.at("existence").get<double>();
              est.push_back(e);
            }
            r.estimates.push_back(std::move(est));
          }
          if (r.estimates.size() != b.truth.size()) throw ScenarioError("results file: step count mismatch");
          score(r, b.truth, b.ospa);
        }
        t.runs.push_back(std::move(r));
      }
      b.trackers.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("results file: ") + e.what());
  }
  return b;
}

std::string cache_file_name(std::uint64_t seed) { return "snapshots_" + std::to_string(seed) + ".bin"; }

namespace {

constexpr char kMagic[8] = {'V', 'M', 'P', 'S', 'N', 'A', 'P', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kComplex64 = 1;

template <typename T>
void put_le(std::string& buf, T v) {
  std::make_unsigned_t<T> u;
  std::memcpy(&u, &v, sizeof v);
  for (size_t i = 0; i < sizeof v; ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char* p) {
  std::make_unsigned_t<T> u = 0;
  for (size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(p[i]) << (8 * i);
  T v;
  std::memcpy(&v, &u, sizeof v);
  return v;
}

void put_float(std::string& buf, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  put_le(buf, u);
}

float get_float(const unsigned char* p) {
  auto u = get_le<std::uint32_t>(p);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

constexpr size_t kHeaderSize = 8 + 4 + 4 + 4 + 4 + 4 + 8;

}  // namespace

void write_snapshot_cache(const std::string& path, const std::vector<Snapshot>& snapshots, std::uint64_t seed) {
  if (snapshots.empty()) throw CacheError("no snapshots to cache");
  auto len = snapshots.front().size();
  std::string buf(kMagic, kMagic + 8);
  put_le(buf, kVersion);
  put_le(buf, kComplex64);
  put_le(buf, static_cast<std::int32_t>(snapshots.front().step));
  put_le(buf, static_cast<std::uint32_t>(snapshots.size()));
  put_le(buf, static_cast<std::uint32_t>(len));
  put_le(buf, seed);
  buf.reserve(kHeaderSize + snapshots.size() * len * 8);
  for (size_t n = 0; n < snapshots.size(); ++n) {
    const auto& s = snapshots[n];
    if (s.size() != len) throw CacheError("snapshots differ in length");
    if (s.step != snapshots.front().step + static_cast<int>(n)) throw CacheError("snapshots are not consecutive");
    for (Eigen::Index i = 0; i < len; ++i) {
      put_float(buf, static_cast<float>(s.data(i).real()));
      put_float(buf, static_cast<float>(s.data(i).imag()));
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw OutputError("cannot write " + path);
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw OutputError("write failed for " + path);
}

std::vector<Snapshot> read_snapshot_cache(const std::string& path, const RVec& noise_precision, std::uint64_t* seed) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CacheError("cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < kHeaderSize || std::memcmp(buf.data(), kMagic, 8) != 0) throw CacheError(path + ": not a snapshot cache");
  auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  if (get_le<std::uint32_t>(p + 8) != kVersion) throw CacheError(path + ": unsupported version");
  if (get_le<std::uint32_t>(p + 12) != kComplex64) throw CacheError(path + ": unsupported dtype");
  auto first = get_le<std::int32_t>(p + 16);
  auto steps = get_le<std::uint32_t>(p + 20);
  auto len = get_le<std::uint32_t>(p + 24);
  if (seed) *seed = get_le<std::uint64_t>(p + 28);
  if (static_cast<Eigen::Index>(len) != noise_precision.size()) throw CacheError(path + ": sample count mismatch");
  if (buf.size() != kHeaderSize + static_cast<size_t>(steps) * len * 8) throw CacheError(path + ": truncated");
  std::vector<Snapshot> out(steps);
  p += kHeaderSize;
  for (std::uint32_t n = 0; n < steps; ++n) {
    auto& s = out[n];
    s.step = first + static_cast<int>(n);
    s.data.resize(len);
    for (std::uint32_t i = 0; i < len; ++i, p += 8) s.data(i) = cdouble(get_float(p), get_float(p + 4));
    s.noise_precision = noise_precision;
  }
  return out;
}

}  // namespace vmptrack
