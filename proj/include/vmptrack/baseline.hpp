#pragma once

#include <cstdint>
#include <vector>

#include "vmptrack/fft.hpp"
#include "vmptrack/gaussian.hpp"
#include "vmptrack/snapshot.hpp"
#include "vmptrack/steering.hpp"
#include "vmptrack/tracker.hpp"

namespace vmptrack {

struct Detection {
  Vec2 position = Vec2::Zero();
  Mat2 covariance = Mat2::Identity();
  double amplitude = 0.0;  // |alpha| estimate
  double statistic = 0.0;  // normalized matched energy |<S|Lambda|Z>|^2 / <S|Lambda|S>
};

struct DetectorConfig {
  double false_alarm_rate = 1e-2;  // per snapshot
  int calibration_snapshots = 200;
  std::uint64_t calibration_seed = 0x5eed;
  double threshold = 0.0;  // 0: calibrate on noise-only snapshots
  double min_range = 1.0;  // [m]
  double max_sine = 0.95;
  double sine_step = 1.0 / 36.0;
  int max_detections = 10;
  double covariance_floor = 0.01;  // added to each position variance [m^2]
};

// Matched-energy peak detector on a delay / bearing grid.  Peaks are taken
// one at a time: the strongest cell above threshold is refined off-grid,
// its fitted echo subtracted and its resolution cell masked before the next
// search.
class PeakDetector {
 public:
  PeakDetector(const RadarConfig& radar, DetectorConfig config);

  const DetectorConfig& config() const { return config_; }
  const SteeringModel& model() const { return model_; }
  double threshold() const { return threshold_; }

  struct EnergyMap {
    RVec ranges;   // [m]
    RVec sines;
    RMat energy;   // ranges x sines
  };
  // Normalized matched energy of a weighted vector Lambda v.
  EnergyMap energy_map(const CVec& weighted, double energy) const;
  // Largest map value of a snapshot (used for calibration).
  double max_statistic(const Snapshot& snapshot) const;

  std::vector<Detection> detect(const Snapshot& snapshot) const;

 private:
  double calibrate() const;

  RadarConfig radar_;
  DetectorConfig config_;
  SteeringModel model_;
  Fft fft_;
  RVec sines_;
  int first_bin_ = 0, last_bin_ = 0;
  double threshold_ = 0.0;
};

std::vector<Detection> detect_peaks(const Snapshot& snapshot, const PeakDetector& detector);

struct KfConfig {
  double accel_std = 2.0;          // driving noise per component [m/s^2]
  double gate = 9.21;              // chi-square 2 dof, 99%
  double init_velocity_std = 10.0; // [m/s]
  int confirm_hits = 3;            // M
  int confirm_window = 5;          // N
  int tentative_max_misses = 3;    // within the window
  int delete_misses = 5;           // consecutive
};

enum class TrackStatus { kTentative, kConfirmed, kDeleted };

struct KFTrack {
  int id = 0;
  int created_step = 0;
  int confirmed_step = -1;
  Vec4 mean = Vec4::Zero();
  Mat4 covariance = Mat4::Identity();
  std::vector<bool> hits;  // one entry per update after initiation
  int consecutive_misses = 0;
  TrackStatus status = TrackStatus::kTentative;
};

// Squared Mahalanobis distance of a detection from a track's predicted position.
double mahalanobis2(const KFTrack& track, const Detection& detection);

struct Association {
  std::vector<int> track_to_detection;  // -1 when unassigned
  std::vector<int> unassigned_detections;
};

// Cost-minimal one-to-one assignment of gated pairs.  Each pair costs its
// squared Mahalanobis distance and every unassigned track or detection costs
// the gate, so any gated pair beats leaving both sides unassigned.
Association gnn_associate(const std::vector<KFTrack>& tracks, const std::vector<Detection>& detections,
                          double gate);

Mat4 kf_process_noise(const MotionModel& motion, const KfConfig& config);
KFTrack kf_predict(const KFTrack& track, const MotionModel& motion, const KfConfig& config);
KFTrack kf_update(const KFTrack& track, const Detection& detection);
// Predict, then update when a detection is given.
KFTrack kf_step(const KFTrack& track, const Detection* detection, const MotionModel& motion, const KfConfig& config);

// Records hit/miss for every live track and applies the M-of-N confirmation
// and deletion rules.  hits[i] refers to tracks[i].
void manage_tracks(std::vector<KFTrack>& tracks, const std::vector<bool>& hits, const KfConfig& config, int step);

// Detect-then-track comparator.
class BaselineTracker {
 public:
  BaselineTracker(const RadarConfig& radar, const PeakDetector& detector, KfConfig config = {});

  std::vector<Estimate> step(const Snapshot& snapshot);
  const std::vector<KFTrack>& tracks() const { return tracks_; }
  const std::vector<Detection>& last_detections() const { return detections_; }

 private:
  const PeakDetector* detector_;
  KfConfig config_;
  MotionModel motion_;
  std::vector<KFTrack> tracks_;
  std::vector<Detection> detections_;
  int next_id_ = 1;
};

}  // namespace vmptrack
