// Acceptance checks: one PASS/FAIL line per criterion, exit status = number
// of failures.  `--runs` sets the Monte-Carlo batch (default 100).
#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "support.hpp"
#include "vmptrack/baseline.hpp"
#include "vmptrack/harness.hpp"
#include "vmptrack/radar_sim.hpp"
#include "vmptrack/tracker.hpp"

using namespace vmptrack;
using namespace vmptrack::testing;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::printf("%s %-4s %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string format(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const RadarSimulator& sim() {
  static const RadarSimulator s{RadarConfig{}};
  return s;
}

const SignalSpace& space() {
  static const SignalSpace s(sim().model(), sim().noise_precision());
  return s;
}

// --- Monte-Carlo criteria ------------------------------------------------------

// First step >= from at which an estimate is OSPA-matched to the given truth
// track closer than the cutoff; INT_MAX if never.
int first_reported(const ReportBundle& b, const RunResult& run, int track, int from) {
  for (int i = 0; i < b.num_steps(); ++i) {
    const int step = b.step_of(i);
    if (step < from) continue;
    std::vector<Vec2> tp, ep;
    int idx = -1;
    for (size_t t = 0; t < b.truth[i].size(); ++t) {
      if (b.truth[i][t].track == track) idx = static_cast<int>(t);
      tp.push_back(b.truth[i][t].state.head<2>());
    }
    if (idx < 0) continue;
    for (const auto& e : run.estimates[i]) ep.push_back(e.state.head<2>());
    const auto r = ospa_detailed(tp, ep, b.ospa);
    for (size_t m = 0; m < r.matches.size(); ++m)
      if (r.matches[m].first == idx && r.match_distances[m] < b.ospa.cutoff) return step;
  }
  return std::numeric_limits<int>::max();
}

double window_mean(const RVec& per_step, const ReportBundle& b, const std::vector<std::pair<int, int>>& windows) {
  double s = 0.0;
  int n = 0;
  for (int i = 0; i < b.num_steps(); ++i)
    for (const auto& [lo, hi] : windows)
      if (b.step_of(i) >= lo && b.step_of(i) <= hi) {
        s += per_step[i];
        ++n;
      }
  return n ? s / n : 0.0;
}

void monte_carlo_criteria(int runs, int workers) {
  RunConfig cfg;
  cfg.num_runs = runs;
  cfg.base_seed = 1;
  cfg.workers = workers;
  const auto t0 = Clock::now();
  const ReportBundle b = run_monte_carlo(cfg, reference_scenario());
  const double secs = seconds_since(t0);
  const auto* vmp = b.find("vmp");
  const auto* base = b.find("baseline");
  std::printf("info Monte-Carlo batch: %d runs, both trackers, %.1f s, failed runs vmp %d baseline %d\n", runs, secs,
              vmp->failed_runs(), base->failed_runs());

  const auto hv = headline_numbers(b, *vmp);
  const auto hb = headline_numbers(b, *base);
  report("C1", hv.mean_ospa_established <= 1.5 && runs >= 100,
         format("VMP mean OSPA over established steps %.3f m (<= 1.5 m, %d runs; all steps %.3f m)",
                hv.mean_ospa_established, runs, hv.mean_ospa));
  report("C2", hv.rmse_fraction_below >= 0.85,
         format("VMP share of matched errors <= 1.6 m: %.1f%% (>= 85%%; p90 %.3f m)", 100.0 * hv.rmse_fraction_below,
                hv.rmse_p90));

  const auto sv = summarize_steps(*vmp, b.num_steps());
  const auto sb = summarize_steps(*base, b.num_steps());
  const std::vector<std::pair<int, int>> windows = {{1, 5}, {50, 54}};
  const double wv = window_mean(sv.ospa_mean, b, windows), wb = window_mean(sb.ospa_mean, b, windows);
  // before any confirmation is possible the baseline reports nothing
  const double pre = window_mean(sb.ospa_mean, b, {{1, 3}});
  report("C3a", wv <= wb && pre >= 0.9 * b.ospa.cutoff,
         format("birth windows 1-5, 50-54: VMP %.3f m <= baseline %.3f m; baseline over steps 1-3 %.3f m (>= 0.9 c)", wv,
                wb, pre));
  report("C3b", hv.mean_ospa <= hb.mean_ospa,
         format("full run: VMP %.3f m <= baseline %.3f m", hv.mean_ospa, hb.mean_ospa));

  int vmp_fast = 0, vmp_done = 0, base_late = 0, base_done = 0, base_first = std::numeric_limits<int>::max();
  for (const auto& r : vmp->runs)
    if (!r.failed) {
      ++vmp_done;
      vmp_fast += first_reported(b, r, 2, 50) <= 51;
    }
  for (const auto& r : base->runs)
    if (!r.failed) {
      ++base_done;
      const int n = first_reported(b, r, 2, 50);
      base_first = std::min(base_first, n);
      base_late += n >= 53;
    }
  report("C4a", vmp_fast >= 0.9 * vmp_done,
         format("VMP reports track 3 by n = 51 in %d/%d runs (>= 90%%)", vmp_fast, vmp_done));
  report("C4b", base_late == base_done,
         format("baseline first reports track 3 at n >= 53 in %d/%d runs (earliest %d)", base_late, base_done,
                base_first));

  int card2 = 0, done = 0;
  for (const auto& r : vmp->runs)
    if (!r.failed) {
      ++done;
      card2 += r.cardinality[22 - b.scenario.first_step] == 2;
    }
  report("C5", card2 >= 0.8 * done,
         format("VMP cardinality 2 at the step-22 crossing in %d/%d runs (>= 80%%)", card2, done));
}

// --- Property suites -----------------------------------------------------------

void c6a() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const ExistenceParams params;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 8;
    const auto p = random_problem(rng, k);
    RVec xi = random_xi(rng, k), prev(k);
    for (int j = 0; j < k; ++j) prev[j] = uni(rng);
    ReflectivityBelief a = update_alpha(p, xi);
    for (int j = 0; j < k; ++j) a.mean[j] += random_complex(rng, 0.5);
    const double e0 = compute_elbo(p, xi, prev, params, &a);
    const auto a1 = update_alpha(p, xi);
    const double e1 = compute_elbo(p, xi, prev, params, &a1);
    const auto a2 = joint_update(p, xi, prev, params);
    const double e2 = compute_elbo(p, xi, prev, params, &a2);
    worst = std::min({worst, e1 - e0, e2 - e1});
  }
  report("C6a", worst >= -1e-9, format("ELBO change over 100 joint updates: minimum %.3g (>= -1e-9)", worst));
}

void c6b() {
  // fusion vs grid density
  const std::vector<std::pair<Vec2, Mat2>> parts = {{Vec2(0.5, -0.2), (Mat2() << 1.0, 0.3, 0.3, 0.5).finished()},
                                                    {Vec2(-0.3, 0.4), (Mat2() << 0.4, -0.1, -0.1, 0.8).finished()}};
  std::vector<GaussianMessage> msgs;
  for (const auto& [m, c] : parts) {
    GaussianMessage g;
    g.mean << m, 0.0, 0.0;
    g.precision.topLeftCorner<2, 2>() = c.inverse();
    g.precision.bottomRightCorner<2, 2>() = Mat2::Identity();
    msgs.push_back(g);
  }
  const auto fused = fuse_gaussian_messages(msgs);
  double w = 0.0;
  Vec2 mean = Vec2::Zero();
  Mat2 second = Mat2::Zero();
  for (double x = -4; x <= 4; x += 0.01)
    for (double y = -4; y <= 4; y += 0.01) {
      const Vec2 p(x, y);
      double l = 0.0;
      for (const auto& [m, c] : parts) l -= 0.5 * (p - m).dot(c.inverse() * (p - m));
      const double d = std::exp(l);
      w += d;
      mean += d * p;
      second += d * p * p.transpose();
    }
  mean /= w;
  const Mat2 cov = second / w - mean * mean.transpose();
  const double fusion_err = std::max((fused.mean.head<2>() - mean).norm(),
                                     (fused.covariance.topLeftCorner<2, 2>() - cov).norm());

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  std::uniform_int_distribution<int> n4(0, 4), n5(0, 5);
  auto set = [&](int n) {
    std::vector<Vec2> s;
    for (int i = 0; i < n; ++i) s.emplace_back(u(rng), u(rng));
    return s;
  };
  double ospa_err = 0.0;
  for (int t = 0; t < 300; ++t) {
    const auto x = set(n4(rng)), y = set(n4(rng));
    ospa_err = std::max(ospa_err, std::abs(ospa(x, y, OspaConfig{}) - ospa_oracle(x, y, 10.0, 2.0)));
  }

  const double gate = KfConfig{}.gate;
  double gnn_err = 0.0;
  for (int t = 0; t < 300; ++t) {
    std::vector<KFTrack> tracks(n5(rng));
    std::vector<Detection> dets(n5(rng));
    for (auto& tr : tracks) {
      tr.mean << 0.5 * u(rng), 0.5 * u(rng), 0, 0;
      tr.covariance = 0.5 * Mat4::Identity();
    }
    for (auto& d : dets) {
      d.position << 0.5 * u(rng), 0.5 * u(rng);
      d.covariance = 0.5 * Mat2::Identity();
    }
    RMat d2(tracks.size(), dets.size());
    for (size_t i = 0; i < tracks.size(); ++i)
      for (size_t j = 0; j < dets.size(); ++j) d2(i, j) = mahalanobis2(tracks[i], dets[j]);
    const auto a = gnn_associate(tracks, dets, gate);
    double cost = gate * static_cast<double>(a.unassigned_detections.size());
    for (size_t i = 0; i < tracks.size(); ++i) cost += a.track_to_detection[i] < 0 ? gate : d2(i, a.track_to_detection[i]);
    gnn_err = std::max(gnn_err, std::abs(cost - gnn_oracle(d2, gate)));
  }
  report("C6b", fusion_err < 1e-4 && ospa_err < 1e-9 && gnn_err < 1e-9,
         format("fusion vs grid %.2g (< 1e-4); OSPA vs permutations %.2g; GNN vs enumeration %.2g (< 1e-9)", fusion_err,
                ospa_err, gnn_err));
}

void c6c() {
  // exact recovery of a Gaussian message
  struct Quadratic : DiagonalKlTerms {
    Vec2 m0{3.0, -2.0}, d0{0.25, 4.0};
    bool evaluate(const Vec2& m, double& c, Vec2& dc, Vec2& h, Mat2& dh) const override {
      const Vec2 e = m - m0;
      c = 0.5 * e.cwiseQuotient(d0).dot(e);
      dc = e.cwiseQuotient(d0);
      h = 0.5 * d0.cwiseInverse();
      dh.setZero();
      return true;
    }
  } quad;
  const auto q = minimize_diagonal_kl(quad, Vec2(2.0, 0.0));
  const double rec = std::max((q.message.mean.head<2>() - quad.m0).norm(), (q.variance - quad.d0).norm());

  // stationarity of radar data messages: gradient scaled by the message spread
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ur(20.0, 80.0), uu(-0.6, 0.6);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const double r = ur(rng), s = uu(rng);
    const Vec2 truth(r * s, r * std::sqrt(1 - s * s));
    const auto snap = sim().simulate({{truth, 0.05}}, 1, rng);
    const CVec wz = space().weighted(snap.data);
    GaussianBelief b;
    b.mean << truth + Vec2(0.3, -0.2), 0, 0;
    b.covariance = 0.25 * Mat4::Identity();
    const auto p = ReflectivityProblem::build(space(), wz, {b}, RVec::Constant(1, 1.0));
    const RVec xi = RVec::Ones(1);
    const auto alpha = update_alpha(p, xi);
    CVec sv;
    sim().model().evaluate(b.mean.head<2>().norm(), b.mean[0] / b.mean.head<2>().norm(), sv);
    CVec target;
    double kappa;
    data_message_target(0, wz, {space().weighted(sv)}, xi, alpha, target, kappa);
    const auto res = project_data_message(space(), target, kappa, b.mean.head<2>());
    const RadarKlTerms terms(space(), target, kappa);
    const Vec2 m = res.message.mean.head<2>(), d = res.variance;
    for (int j = 0; j < 2; ++j) {
      Vec2 e = Vec2::Zero(), f = Vec2::Zero();
      e[j] = 1e-3 * std::sqrt(d[j]);
      f[j] = 1e-4 * d[j];
      const double gm = (diagonal_kl_objective(terms, m + e, d) - diagonal_kl_objective(terms, m - e, d)) / (2 * e[j]);
      const double gd = (diagonal_kl_objective(terms, m, d + f) - diagonal_kl_objective(terms, m, d - f)) / (2 * f[j]);
      worst = std::max({worst, std::abs(gm) * std::sqrt(d[j]), std::abs(gd) * d[j]});
    }
  }
  report("C6c", rec < 1e-6 && worst < 1e-5,
         format("Gaussian message recovered to %.2g; relative gradient at 10 radar optima %.2g (< 1e-5)", rec, worst));
}

void c6d() {
  const MotionModel motion(0.1);
  const ProcessNoisePrior prior;
  std::vector<GaussianBelief> beliefs(101);
  for (size_t n = 0; n < beliefs.size(); ++n) {
    beliefs[n].mean << 0.1 * n, 0.02 * n, 1.0, 0.2;
    beliefs[n].covariance = 0.01 * Mat4::Identity();
  }
  const auto g = update_process_noise(beliefs, motion, prior);
  const double expect_shape = (100 + prior.zeta) / 2.0;
  const bool shape_ok = (g.shape.array() == expect_shape).all();

  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd(0.0, 1.0);
  GaussianBelief a, b;
  a.mean << 1, 2, 3, 4;
  b.mean << 1.35, 2.38, 3.4, 3.9;
  Mat4 x, y;
  for (int i = 0; i < 16; ++i) x(i) = nd(rng), y(i) = nd(rng);
  a.covariance = 0.01 * (x * x.transpose() + 0.5 * Mat4::Identity());
  b.covariance = 0.01 * (y * y.transpose() + 0.5 * Mat4::Identity());
  const Mat4 v = transition_residual(a, b, motion);
  const Mat4 la = a.covariance.llt().matrixL(), lb = b.covariance.llt().matrixL();
  Vec4 acc = Vec4::Zero();
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) {
    const Vec4 za(nd(rng), nd(rng), nd(rng), nd(rng)), zb(nd(rng), nd(rng), nd(rng), nd(rng));
    const Vec4 e = motion.noise_gain_inverse * ((b.mean + lb * zb) - motion.transition * (a.mean + la * za));
    acc += e.cwiseAbs2();
  }
  acc /= samples;
  const double dev = (acc.cwiseQuotient(v.diagonal()) - Vec4::Ones()).cwiseAbs().maxCoeff();
  report("C6d", shape_ok && dev < 0.02,
         format("gamma shape %.1f (expected %.1f); V diagonal vs 1e5-sample Monte-Carlo max deviation %.2f%% (< 2%%)",
                g.shape[0], expect_shape, 100.0 * dev));
}

void c6e() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> ur(2.0, 95.0), uu(-0.95, 0.95);
  double worst = 0.0;
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const double r = ur(rng), s = uu(rng);
    const Vec4 st(r * s, r * std::sqrt(1 - s * s), 0, 0);
    const CMat g = sim().model().gradient(st);
    for (int j = 0; j < 2; ++j) {
      Vec4 e = Vec4::Zero();
      e[j] = h;
      const CVec fd = (sim().model().vector(st + e) - sim().model().vector(st - e)) / (2.0 * h);
      worst = std::max(worst, (fd - g.col(j)).norm() / g.col(j).norm());
    }
  }
  report("C6e", worst < 1e-4, format("steering gradient vs central differences at 100 states: max rel. error %.2g", worst));
}

void c6f() {
  std::mt19937_64 rng(11);
  const int snapshots = 1000;
  int births = 0;
  auto tracker = std::make_unique<VmpTracker>(RadarConfig{}, TrackerConfig{});
  for (int n = 1; n <= snapshots; ++n) {
    tracker->step(sim().simulate({}, n, rng));
    if (!tracker->tracks().empty()) {
      births += static_cast<int>(tracker->tracks().size());
      tracker = std::make_unique<VmpTracker>(RadarConfig{}, TrackerConfig{});
    }
  }
  const double rate = static_cast<double>(births) / snapshots;
  report("C6f", rate <= 1e-3,
         format("false births on %d noise-only snapshots: %d (rate %.1e <= 1e-3, p_b = 1e-8)", snapshots, births, rate));
}

// --- Complexity ----------------------------------------------------------------

void c7() {
  std::mt19937_64 rng(12);
  const std::vector<int> sizes = {1, 2, 4, 8, 16, 32};
  std::vector<double> lx, ly;
  std::string detail;
  for (int l : sizes) {
    const auto p = random_problem(rng, l, 128);
    const RVec prev = RVec::Constant(l, 0.9);
    std::vector<double> reps;
    for (int rep = 0; rep < 5; ++rep) {
      int calls = 0;
      const auto t0 = Clock::now();
      double el = 0.0;
      while (el < 0.1) {
        RVec xi = RVec::Constant(l, 0.5);
        joint_update(p, xi, prev, ExistenceParams{});
        ++calls;
        el = seconds_since(t0);
      }
      reps.push_back(el / calls);
    }
    std::sort(reps.begin(), reps.end());
    lx.push_back(std::log(static_cast<double>(l)));
    ly.push_back(std::log(reps[2]));
    detail += format(" %d:%.2e", l, reps[2]);
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n, my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  const double top = (ly.back() - ly[ly.size() - 2]) / (lx.back() - lx[lx.size() - 2]);
  report("C7", std::abs(slope - 3.0) <= 1.0,
         format("(alpha, xi) sweep log-log slope %.2f over L = 1..32 (3 +- 1); 16->32 slope %.2f; median s/call%s",
                slope, top, detail.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int runs = 100, workers = 0;
  std::vector<std::string> only;
  app.add_option("--runs", runs, "Monte-Carlo runs for C1-C5")->check(CLI::PositiveNumber);
  app.add_option("--workers", workers, "worker threads (0: default)");
  app.add_option("--only", only, "subset of C1-5, C6, C7");
  CLI11_PARSE(app, argc, argv);
  const std::set<std::string> sel(only.begin(), only.end());
  auto enabled = [&](const std::string& s) { return sel.empty() || sel.count(s) > 0; };

  if (enabled("C1-5")) monte_carlo_criteria(runs, workers);
  if (enabled("C6")) {
    const auto t0 = Clock::now();
    c6a();
    c6b();
    c6c();
    c6d();
    c6e();
    c6f();
    const double secs = seconds_since(t0);
    report("C6", secs < 300.0, format("property suites finished in %.1f s (< 300 s)", secs));
  }
  if (enabled("C7")) c7();
  std::printf("%d criteria failed\n", failures);
  return failures;
}
