#include "vmptrack/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vmptrack/assignment.hpp"
#include "vmptrack/optim.hpp"
#include "vmptrack/radar_sim.hpp"
#include "vmptrack/rng.hpp"

namespace vmptrack {

PeakDetector::PeakDetector(const RadarConfig& radar, DetectorConfig config)
    : radar_(radar), config_(config), model_(radar), fft_(radar.samples_per_window()) {
  if (!(config_.false_alarm_rate > 0.0 && config_.false_alarm_rate < 1.0))
    throw ConfigError("detector: false_alarm_rate must lie in (0, 1)");
  if (!(config_.sine_step > 0.0) || !(config_.max_sine > 0.0 && config_.max_sine < 1.0))
    throw ConfigError("detector: invalid sine grid");
  if (config_.max_detections < 1) throw ConfigError("detector: max_detections must be positive");
  const int nu = static_cast<int>(std::floor(config_.max_sine / config_.sine_step + 1e-9));
  sines_.resize(2 * nu + 1);
  for (int j = -nu; j <= nu; ++j) sines_[j + nu] = j * config_.sine_step;
  // Delay bin s sits at range s * c / (2 fs).
  const double bin_range = kSpeedOfLight / (2.0 * radar_.sample_rate);
  first_bin_ = std::max(1, static_cast<int>(std::ceil(config_.min_range / bin_range)));
  last_bin_ = std::min(model_.num_bins() - 1, static_cast<int>(std::floor(radar_.max_range / bin_range)));
  if (last_bin_ < first_bin_) throw ConfigError("detector: empty range grid");
  if (config_.threshold > 0.0) {
    threshold_ = config_.threshold;
  } else {
    if (config_.calibration_snapshots < 10) throw ConfigError("detector: need at least 10 calibration snapshots");
    threshold_ = calibrate();
  }
}

PeakDetector::EnergyMap PeakDetector::energy_map(const CVec& weighted, double energy) const {
  const int nb = model_.num_bins(), nc = model_.num_channels();
  const int nr = last_bin_ - first_bin_ + 1;
  // Channel correlations for all delay bins at once: backward DFT of P .* y.
  CMat chan(nr, nc);
  CVec in(nb), out;
  for (int v = 0; v < nc; ++v) {
    in = model_.power_spectrum().cast<cdouble>().cwiseProduct(weighted.segment(v * nb, nb));
    fft_.backward(in, out);
    chan.col(v) = out.segment(first_bin_, nr);
  }
  CMat steer(nc, sines_.size());
  for (int v = 0; v < nc; ++v)
    for (Eigen::Index j = 0; j < sines_.size(); ++j) steer(v, j) = std::polar(1.0, -model_.sine_phase()[v] * sines_[j]);
  EnergyMap map;
  map.sines = sines_;
  map.ranges.resize(nr);
  const double bin_range = kSpeedOfLight / (2.0 * radar_.sample_rate);
  for (int i = 0; i < nr; ++i) map.ranges[i] = (first_bin_ + i) * bin_range;
  map.energy = (chan * steer).cwiseAbs2() / energy;
  return map;
}

double PeakDetector::max_statistic(const Snapshot& snapshot) const {
  SignalSpace space(model_, snapshot.noise_precision);
  return energy_map(space.weighted(snapshot.data), space.energy()).energy.maxCoeff();
}

double PeakDetector::calibrate() const {
  RadarSimulator sim(radar_);
  const int n = config_.calibration_snapshots;
  std::vector<double> maxima(n);
  for (int i = 0; i < n; ++i) {
    auto rng = make_stream(config_.calibration_seed, static_cast<std::uint64_t>(i), 0);
    maxima[i] = max_statistic(sim.simulate({}, i, rng));
  }
  double mean = 0.0, ss = 0.0;
  for (double m : maxima) mean += m;
  mean /= n;
  for (double m : maxima) ss += (m - mean) * (m - mean);
  const double sd = std::sqrt(ss / (n - 1));
  // Gumbel fit by moments; threshold at the (1 - pfa) quantile of the maximum.
  const double beta = sd * std::sqrt(6.0) / kPi;
  const double mu = mean - 0.5772156649015329 * beta;
  return mu - beta * std::log(-std::log1p(-config_.false_alarm_rate));
}

std::vector<Detection> PeakDetector::detect(const Snapshot& snapshot) const {
  SignalSpace space(model_, snapshot.noise_precision);
  const double w0 = space.energy();
  CVec residual = space.weighted(snapshot.data);
  std::vector<Detection> out;
  const double range_cell = radar_.range_resolution();
  const double sine_cell = 2.0 / model_.num_channels();
  CVec s;
  for (int d = 0; d < config_.max_detections; ++d) {
    const auto map = energy_map(residual, w0);
    double best = -1.0;
    int bi = -1, bj = -1;
    for (Eigen::Index i = 0; i < map.energy.rows(); ++i)
      for (Eigen::Index j = 0; j < map.energy.cols(); ++j) {
        const double e = map.energy(i, j);
        if (e <= best) continue;
        bool masked = false;
        for (const auto& det : out) {
          const double r = det.position.norm();
          if (std::abs(map.ranges[i] - r) < range_cell && std::abs(map.sines[j] - det.position.x() / r) < sine_cell) {
            masked = true;
            break;
          }
        }
        if (masked) continue;
        best = e;
        bi = static_cast<int>(i);
        bj = static_cast<int>(j);
      }
    if (bi < 0 || best < threshold_) break;

    // Off-grid refinement of the peak in (x, y).
    const double r0 = map.ranges[bi], u0 = map.sines[bj];
    const Vec2 p0(r0 * u0, r0 * std::sqrt(1.0 - u0 * u0));
    auto objective = [&](const RVec& x, RVec* grad) {
      const Vec2 p(x[0], x[1]);
      if (!model_.observable(p)) return std::numeric_limits<double>::infinity();
      const auto pj = polar_jacobian(p);
      const auto c = space.correlate(pj.range, pj.sine, residual);
      if (grad) {
        grad->resize(2);
        for (int k = 0; k < 2; ++k) {
          const cdouble dc = c.d_range * pj.jacobian(0, k) + c.d_sine * pj.jacobian(1, k);
          (*grad)[k] = -2.0 * (std::conj(c.value) * dc).real() / w0;
        }
      }
      return -std::norm(c.value) / w0;
    };
    Mat2 curv = 2.0 * (best / w0) * space.position_fisher(p0);
    curv += 1e-9 * curv.trace() * Mat2::Identity();
    BfgsOptions opt;
    opt.max_iterations = 50;
    opt.gradient_tolerance = 1e-6;
    opt.max_step = 0.5 * range_cell;
    const auto res = minimize_bfgs(objective, RVec(p0), RMat(curv.inverse()), opt);
    Vec2 p(res.x[0], res.x[1]);
    if (-res.value < best) p = p0;

    const auto pj = polar_jacobian(p);
    const cdouble corr = space.correlate_value(pj.range, pj.sine, residual);
    const cdouble alpha = corr / w0;
    Detection det;
    det.position = p;
    det.amplitude = std::abs(alpha);
    det.statistic = std::norm(corr) / w0;
    Mat2 info = 2.0 * std::norm(alpha) * space.position_fisher(p);
    det.covariance = info.inverse() + config_.covariance_floor * Mat2::Identity();
    det.covariance = 0.5 * (det.covariance + det.covariance.transpose());
    out.push_back(det);

    model_.evaluate(pj.range, pj.sine, s);
    residual -= alpha * space.weighted(s);
  }
  return out;
}

std::vector<Detection> detect_peaks(const Snapshot& snapshot, const PeakDetector& detector) {
  return detector.detect(snapshot);
}

double mahalanobis2(const KFTrack& track, const Detection& detection) {
  const Mat2 s = track.covariance.topLeftCorner<2, 2>() + detection.covariance;
  const Vec2 nu = detection.position - track.mean.head<2>();
  return nu.dot(s.ldlt().solve(nu));
}

Association gnn_associate(const std::vector<KFTrack>& tracks, const std::vector<Detection>& detections,
                          double gate) {
  const int nt = static_cast<int>(tracks.size()), nd = static_cast<int>(detections.size());
  Association out;
  out.track_to_detection.assign(nt, -1);
  if (nd == 0) return out;
  if (nt == 0) {
    for (int j = 0; j < nd; ++j) out.unassigned_detections.push_back(j);
    return out;
  }
  // Square problem with a dummy partner for every track and every detection.
  const double forbidden = 1e9 * (1.0 + gate);
  RMat cost = RMat::Constant(nt + nd, nd + nt, forbidden);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nd; ++j) {
      const double d2 = mahalanobis2(tracks[i], detections[j]);
      if (d2 <= gate) cost(i, j) = d2;
    }
  for (int i = 0; i < nt; ++i) cost(i, nd + i) = gate;
  for (int j = 0; j < nd; ++j) cost(nt + j, j) = gate;
  cost.bottomRightCorner(nd, nt).setZero();
  const auto assign = solve_assignment(cost);
  std::vector<bool> used(nd, false);
  for (int i = 0; i < nt; ++i)
    if (assign[i] >= 0 && assign[i] < nd && cost(i, assign[i]) < forbidden) {
      out.track_to_detection[i] = assign[i];
      used[assign[i]] = true;
    }
  for (int j = 0; j < nd; ++j)
    if (!used[j]) out.unassigned_detections.push_back(j);
  return out;
}

Mat4 kf_process_noise(const MotionModel& motion, const KfConfig& config) {
  const double var = config.accel_std * config.accel_std;
  return var * motion.noise_gain * motion.noise_gain.transpose();
}

KFTrack kf_predict(const KFTrack& track, const MotionModel& motion, const KfConfig& config) {
  KFTrack out = track;
  out.mean = motion.transition * track.mean;
  out.covariance = motion.transition * track.covariance * motion.transition.transpose() +
                   kf_process_noise(motion, config);
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

KFTrack kf_update(const KFTrack& track, const Detection& detection) {
  KFTrack out = track;
  Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
  h(0, 0) = h(1, 1) = 1.0;
  const Mat2 s = h * track.covariance * h.transpose() + detection.covariance;
  const Eigen::Matrix<double, 4, 2> gain = track.covariance * h.transpose() * s.inverse();
  out.mean = track.mean + gain * (detection.position - h * track.mean);
  // Joseph form keeps the covariance symmetric positive definite.
  const Mat4 a = Mat4::Identity() - gain * h;
  out.covariance = a * track.covariance * a.transpose() + gain * detection.covariance * gain.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

KFTrack kf_step(const KFTrack& track, const Detection* detection, const MotionModel& motion, const KfConfig& config) {
  KFTrack out = kf_predict(track, motion, config);
  if (detection) out = kf_update(out, *detection);
  return out;
}

void manage_tracks(std::vector<KFTrack>& tracks, const std::vector<bool>& hits, const KfConfig& config, int step) {
  if (hits.size() != tracks.size()) throw std::invalid_argument("manage_tracks: one hit flag per track required");
  for (size_t i = 0; i < tracks.size(); ++i) {
    auto& t = tracks[i];
    if (t.status == TrackStatus::kDeleted) continue;
    t.hits.push_back(hits[i]);
    t.consecutive_misses = hits[i] ? 0 : t.consecutive_misses + 1;
    const int n = static_cast<int>(t.hits.size());
    const int from = std::max(0, n - config.confirm_window);
    int h = 0;
    for (int k = from; k < n; ++k) h += t.hits[k] ? 1 : 0;
    const int misses = (n - from) - h;
    if (t.status == TrackStatus::kTentative) {
      if (h >= config.confirm_hits) {
        t.status = TrackStatus::kConfirmed;
        t.confirmed_step = step;
      } else if (misses >= config.tentative_max_misses) {
        t.status = TrackStatus::kDeleted;
      }
    }
    if (t.consecutive_misses >= config.delete_misses) t.status = TrackStatus::kDeleted;
  }
}

BaselineTracker::BaselineTracker(const RadarConfig& radar, const PeakDetector& detector, KfConfig config)
    : detector_(&detector), config_(config), motion_(radar.frame_interval()) {}

std::vector<Estimate> BaselineTracker::step(const Snapshot& snapshot) {
  // Live tracks only; deleted ones are dropped.
  std::vector<KFTrack> live;
  for (const auto& t : tracks_)
    if (t.status != TrackStatus::kDeleted) live.push_back(kf_predict(t, motion_, config_));
  detections_ = detector_->detect(snapshot);
  const auto assoc = gnn_associate(live, detections_, config_.gate);
  std::vector<bool> hits(live.size());
  for (size_t i = 0; i < live.size(); ++i) {
    const int j = assoc.track_to_detection[i];
    hits[i] = j >= 0;
    if (j >= 0) live[i] = kf_update(live[i], detections_[j]);
  }
  manage_tracks(live, hits, config_, snapshot.step);
  for (int j : assoc.unassigned_detections) {
    KFTrack t;
    t.id = next_id_++;
    t.created_step = snapshot.step;
    t.mean << detections_[j].position, 0.0, 0.0;
    t.covariance = Mat4::Zero();
    t.covariance.topLeftCorner<2, 2>() = detections_[j].covariance;
    t.covariance(2, 2) = t.covariance(3, 3) = config_.init_velocity_std * config_.init_velocity_std;
    live.push_back(t);
  }
  tracks_ = std::move(live);
  std::vector<Estimate> out;
  for (const auto& t : tracks_)
    if (t.status == TrackStatus::kConfirmed) out.push_back({t.id, t.mean, 1.0});
  return out;
}

}  // namespace vmptrack
