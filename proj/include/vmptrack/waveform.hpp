#pragma once

#include "vmptrack/radar_config.hpp"
#include "vmptrack/types.hpp"

namespace vmptrack {

// One transmit pulse: a unit-amplitude linear chirp sampled at config.sample_rate,
// sweeping -BW/2 .. +BW/2 over the pulse duration.  Every transmitter uses the
// same chirp in its own time slot.
CVec generate_waveform(const RadarConfig& config);

// Instantaneous frequency of the chirp at time t in [0, T) [Hz].
double chirp_frequency(const RadarConfig& config, double t);

// sum |u|^2 / fs [J for unit impedance].
double pulse_energy(const CVec& pulse, double sample_rate);

}  // namespace vmptrack
