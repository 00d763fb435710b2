#pragma once

#include "vmptrack/types.hpp"

namespace vmptrack {

/// Thermal noise power k_b * T * BW at the reference temperature of 290 K.
double thermal_noise_variance(double bandwidth, double temperature = 290.0);

/// MIMO radar and waveform parameters.
///
/// Transmitters are time-division multiplexed: each one fires a single
/// chirp and the receivers record a window of samples_per_window() samples
/// for it, so a full snapshot holds num_rx * num_tx * samples_per_window()
/// complex values.
struct RadarConfig {
  int num_tx = 3;
  int num_rx = 3;
  double prf = 10.0;                 // [Hz]
  double carrier_frequency = 10e9;   // [Hz]
  double bandwidth = 20e6;           // [Hz]
  double pulse_duration = 3.6e-6;    // [s]
  double sample_rate = 256e6;        // [Hz]
  double max_range = 100.0;          // [m]
  double noise_variance = thermal_noise_variance(20e6);  // per complex sample [W]
  double tx_amplitude = 0.53;        // [V/m], field amplitude at 1 m
  double antenna_gain = 1.0;

  double wavelength() const { return kSpeedOfLight / carrier_frequency; }
  double frame_interval() const { return 1.0 / prf; }
  double max_delay() const { return 2.0 * max_range / kSpeedOfLight; }
  double receive_window() const { return max_delay() + pulse_duration; }
  double range_resolution() const { return kSpeedOfLight / (2.0 * bandwidth); }
  int samples_per_window() const;
  int pulse_samples() const;
  int num_virtual() const { return num_tx * num_rx; }
  int snapshot_length() const { return num_virtual() * samples_per_window(); }

  /// Throws ConfigError when a field is out of its valid range.
  void validate() const;
};

}  // namespace vmptrack
