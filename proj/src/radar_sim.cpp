#include "vmptrack/radar_sim.hpp"

#include <cmath>
#include <string>

#include "vmptrack/rng.hpp"

namespace vmptrack {

double sample_rcs(double mean_rcs, std::mt19937_64& rng) {
  if (!(mean_rcs > 0.0)) throw std::invalid_argument("sample_rcs: mean must be positive");
  std::gamma_distribution<double> g(2.0, 0.5 * mean_rcs);
  double x = 0.0;
  while (!(x > 0.0)) x = g(rng);
  return x;
}

RadarSimulator::RadarSimulator(const RadarConfig& config) : model_(config), fft_(config.samples_per_window()) {
  const int nb = model_.num_bins();
  const RVec& p = model_.power_spectrum();
  const double floor = 1e-12 * p.maxCoeff();
  const double scale = nb * config.noise_variance;
  precision_.resize(model_.length());
  for (int v = 0; v < model_.num_channels(); ++v)
    for (int f = 0; f < nb; ++f) precision_[v * nb + f] = 1.0 / (scale * std::max(p[f], floor));
}

double RadarSimulator::amplitude_scale(double range) const {
  const auto& c = config();
  return c.tx_amplitude * c.antenna_gain * c.wavelength() / (std::pow(4.0 * kPi, 1.5) * range * range);
}

cdouble RadarSimulator::reflectivity(const Vec2& position, double rcs) const {
  const double r = position.norm();
  const double tau = 2.0 * r / kSpeedOfLight;
  const double phase = std::fmod(2.0 * kPi * config().carrier_frequency * tau, 2.0 * kPi);
  return amplitude_scale(r) * std::sqrt(rcs) * std::polar(1.0, phase);
}

CVec RadarSimulator::echo_signal(const std::vector<Echo>& echoes) const {
  const int nb = model_.num_bins(), nc = model_.num_channels();
  CVec out = CVec::Zero(model_.length());
  CVec spec(nb), delayed;
  for (const auto& e : echoes) {
    try {
      model_.check(e.position);
    } catch (const std::exception& ex) {
      throw SimulationError(std::string("simulate: ") + ex.what());
    }
    const double r = e.position.norm();
    const double u = e.position.x() / r;
    for (int f = 0; f < nb; ++f)
      spec[f] = model_.pulse_spectrum()[f] * std::polar(1.0 / nb, model_.range_phase()[f] * r);
    fft_.backward(spec, delayed);
    const cdouble alpha = reflectivity(e.position, e.rcs);
    for (int v = 0; v < nc; ++v)
      out.segment(v * nb, nb) += (alpha * std::polar(1.0, model_.sine_phase()[v] * u)) * delayed;
  }
  return out;
}

CVec RadarSimulator::raw_signal(const std::vector<Echo>& echoes, std::mt19937_64& rng) const {
  CVec out = echo_signal(echoes);
  const double var = config().noise_variance;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += complex_normal(rng, var);
  return out;
}

CVec RadarSimulator::matched_filter(const CVec& raw) const {
  const int nb = model_.num_bins();
  if (raw.size() != model_.length()) throw std::invalid_argument("matched_filter: raw length mismatch");
  CVec out(raw.size()), spec;
  const CVec window_conj = model_.pulse_spectrum().conjugate();
  for (int v = 0; v < model_.num_channels(); ++v) {
    fft_.forward(raw.segment(v * nb, nb), spec);
    out.segment(v * nb, nb) = window_conj.cwiseProduct(spec);
  }
  return out;
}

Snapshot RadarSimulator::simulate(const std::vector<Echo>& echoes, int step, std::mt19937_64& noise_rng) const {
  Snapshot s;
  s.step = step;
  s.data = matched_filter(raw_signal(echoes, noise_rng));
  s.noise_precision = precision_;
  return s;
}

Snapshot simulate_snapshot(const Scenario& scenario, const RadarSimulator& sim, int step, std::uint64_t seed) {
  const double dt = scenario.radar.frame_interval();
  std::vector<Echo> echoes;
  for (size_t l = 0; l < scenario.tracks.size(); ++l) {
    const auto& t = scenario.tracks[l];
    if (!t.alive(step)) continue;
    const auto st = t.states(dt);
    auto rng = make_stream(seed, static_cast<std::uint64_t>(step), 1 + l);
    echoes.push_back({st[step - t.birth_step].head<2>(), sample_rcs(t.mean_rcs, rng)});
  }
  auto noise = make_stream(seed, static_cast<std::uint64_t>(step), 0);
  return sim.simulate(echoes, step, noise);
}

}  // namespace vmptrack
