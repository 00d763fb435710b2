#pragma once

#include <string>
#include <vector>

#include "vmptrack/gaussian.hpp"
#include "vmptrack/radar_config.hpp"
#include "vmptrack/snapshot.hpp"
#include "vmptrack/steering.hpp"
#include "vmptrack/vmp.hpp"

namespace vmptrack {

struct BirthGrid {
  double range_spacing = 3.75;  // half the range resolution at 20 MHz [m]
  double min_range = 3.75;      // [m]
  double max_range = 0.0;       // 0: use the radar's maximum range
  double sine_spacing = 0.0;    // 0: half the virtual-array beamwidth in sin(theta)
  double max_sine = 0.9;
  double velocity_std = 10.0;   // birth prior on each velocity component [m/s]
};

struct TrackerConfig {
  ExistenceParams existence;            // p_s = 0.95, p_b = 1e-8
  double birth_threshold = 1.0 - 1e-8;  // delta_plus
  double prune_threshold = 0.1;         // delta_minus
  double report_threshold = 0.5;        // delta
  int inner_iterations = 100;           // N_I
  // Inner sweeps stop early once no state mean moves by more than this [m, m/s].
  double inner_tolerance = 1e-9;
  int joint_sweeps = 1;
  // lambda_{alpha,p} = 1 / mean RCS.
  double prior_reflectivity_precision = 1.0 / 0.05;
  // Divide the prior precision by the squared radar-equation amplitude at the
  // PO's range, putting the prior on the RCS scale rather than on |alpha|.
  bool range_scaled_prior = true;
  ProcessNoisePrior process_noise;
  BirthGrid birth_grid;
  int max_births_per_step = 4;
  int smoothing_lag = 0;  // 0: revisit the whole alive history
  DataMessageOptions data_message;

  void validate() const;
};

struct TrackStep {
  int step = 0;
  GaussianBelief belief;
  double existence = 0.0;
  cdouble alpha_mean = 0.0;
  double alpha_variance = 0.0;
  GaussianMessage data;  // written once at its step
};

struct TrackState {
  int id = 0;
  int birth_step = 0;
  bool pruned = false;
  GaussianMessage birth_prior;
  ProcessNoiseBelief noise;
  std::vector<TrackStep> history;  // one entry per step since birth

  const TrackStep* at(int step) const;
  int last_step() const { return history.empty() ? birth_step - 1 : history.back().step; }
};

struct Estimate {
  int track_id = 0;
  Vec4 state = Vec4::Zero();
  double existence = 0.0;
};

// Estimates with existence above threshold at the given step.
std::vector<Estimate> extract_estimates(const std::vector<TrackState>& tracks, int step, double threshold);

// Birth grid points (x, y) covering the field of view.
std::vector<Vec2> birth_grid_points(const BirthGrid& grid, const RadarConfig& radar);
// Range and sine axes of the same grid (points are range-major).
void birth_grid_axes(const BirthGrid& grid, const RadarConfig& radar, RVec& ranges, RVec& sines);

class VmpTracker {
 public:
  VmpTracker(const RadarConfig& radar, TrackerConfig config);

  const TrackerConfig& config() const { return config_; }
  const SteeringModel& model() const { return model_; }
  const MotionModel& motion() const { return motion_; }
  const std::vector<TrackState>& tracks() const { return tracks_; }
  int current_step() const { return step_; }

  // Processes the next frame and returns the estimates reported for it.
  std::vector<Estimate> step(const Snapshot& snapshot);

  std::vector<Estimate> estimates(int step) const {
    return extract_estimates(tracks_, step, config_.report_threshold);
  }

  // Prior precision of a PO's reflectivity at the given position.
  double reflectivity_prior(const Vec2& position) const;

  std::string checkpoint_json() const;

 private:
  struct Frame;

  void predict(Frame& frame);
  void refresh_alpha(Frame& frame);
  void project_new_messages(Frame& frame);
  void smooth(Frame& frame);
  void joint_update(Frame& frame);
  void prune(Frame& frame);
  void initialize_new_objects(Frame& frame);
  void store(Frame& frame);
  void update_state(TrackState& track, int index) const;

  RadarConfig radar_;
  TrackerConfig config_;
  SteeringModel model_;
  MotionModel motion_;
  std::vector<Vec2> grid_;  // range-major, sine-minor
  RVec grid_ranges_, grid_sines_;
  CMat grid_kernels_;  // bins x ranges
  CMat grid_phases_;   // channels x sines, exp(-i b_v u)
  std::vector<double> grid_prior_;
  std::vector<TrackState> tracks_;
  int step_ = 0;
  bool started_ = false;
  int next_id_ = 1;
};

}  // namespace vmptrack
