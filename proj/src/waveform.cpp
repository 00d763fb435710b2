#include "vmptrack/waveform.hpp"

#include <cmath>

namespace vmptrack {

CVec generate_waveform(const RadarConfig& config) {
  config.validate();
  const int n = config.pulse_samples();
  const double rate = config.bandwidth / config.pulse_duration;
  const double half = 0.5 * config.pulse_duration;
  CVec pulse(n);
  for (int s = 0; s < n; ++s) {
    const double t = s / config.sample_rate - half;
    pulse[s] = std::polar(1.0, kPi * rate * t * t);
  }
  return pulse;
}

double chirp_frequency(const RadarConfig& config, double t) {
  return config.bandwidth * (t / config.pulse_duration - 0.5);
}

double pulse_energy(const CVec& pulse, double sample_rate) {
  return pulse.squaredNorm() / sample_rate;
}

}  // namespace vmptrack
