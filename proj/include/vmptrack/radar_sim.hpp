#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "vmptrack/fft.hpp"
#include "vmptrack/scenario.hpp"
#include "vmptrack/snapshot.hpp"
#include "vmptrack/steering.hpp"

namespace vmptrack {

// Object could not be simulated (outside the field of view or the receive window).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Swerling-3 RCS draw: gamma with shape 2 and scale mean/2.
double sample_rcs(double mean_rcs, std::mt19937_64& rng);

struct Echo {
  Vec2 position;
  double rcs = 0.0;  // [m^2]
};

// Synthesizes raw TDM-MIMO receive windows and their matched-filter output.
//
// Each echo arrives with complex weight
//   alpha = tx_amplitude * G * lambda * sqrt(rcs) / ((4 pi)^{3/2} R^2) * exp(i 2 pi f_c tau),
// its sampled chirp delayed by band-limited (DFT) interpolation, and the
// receiver adds white circular Gaussian noise of variance noise_variance.
class RadarSimulator {
 public:
  explicit RadarSimulator(const RadarConfig& config);

  const RadarConfig& config() const { return model_.config(); }
  const SteeringModel& model() const { return model_; }

  // |alpha| / sqrt(rcs) at range R.
  double amplitude_scale(double range) const;
  cdouble reflectivity(const Vec2& position, double rcs) const;

  // Noise-free time-domain windows, N_Z samples in snapshot channel order.
  CVec echo_signal(const std::vector<Echo>& echoes) const;
  // echo_signal plus receiver noise drawn from rng.
  CVec raw_signal(const std::vector<Echo>& echoes, std::mt19937_64& rng) const;
  // Per-channel DFT followed by multiplication with conj(U_f).
  CVec matched_filter(const CVec& raw) const;
  // Diagonal precision of the matched-filtered noise: 1 / (N_s sigma^2 |U_f|^2).
  const RVec& noise_precision() const { return precision_; }

  Snapshot simulate(const std::vector<Echo>& echoes, int step, std::mt19937_64& noise_rng) const;

 private:
  SteeringModel model_;
  Fft fft_;
  RVec precision_;
};

// Draws the RCS of every alive object and the receiver noise for one frame.
// Streams are keyed by (seed, step, object), so frames can be generated in any order.
Snapshot simulate_snapshot(const Scenario& scenario, const RadarSimulator& sim, int step, std::uint64_t seed);

}  // namespace vmptrack
