#include "vmptrack/radar_config.hpp"

#include <cmath>
#include <string>

namespace vmptrack {

double thermal_noise_variance(double bandwidth, double temperature) {
  return kBoltzmann * temperature * bandwidth;
}

int RadarConfig::samples_per_window() const {
  return static_cast<int>(std::ceil(receive_window() * sample_rate - 1e-9));
}

int RadarConfig::pulse_samples() const {
  return static_cast<int>(std::ceil(pulse_duration * sample_rate - 1e-9));
}

void RadarConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("radar config: " + what);
  };
  require(num_tx >= 1 && num_rx >= 1, "num_tx and num_rx must be positive");
  require(prf > 0.0, "prf must be positive");
  require(carrier_frequency > 0.0, "carrier_frequency must be positive");
  require(bandwidth > 0.0, "bandwidth must be positive");
  require(pulse_duration > 0.0, "pulse_duration must be positive");
  require(sample_rate >= bandwidth, "sample_rate must be at least the bandwidth");
  require(max_range > 0.0, "max_range must be positive");
  require(noise_variance > 0.0, "noise_variance must be positive");
  require(tx_amplitude > 0.0 && antenna_gain > 0.0, "tx_amplitude and antenna_gain must be positive");
  require(pulse_duration * sample_rate >= 8.0, "pulse must span at least 8 samples");
}

}  // namespace vmptrack
