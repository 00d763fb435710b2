#include "vmptrack/steering.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vmptrack/fft.hpp"
#include "vmptrack/waveform.hpp"

namespace vmptrack {

GeometryParams state_to_geometry(const Vec2& position) {
  const double r = position.norm();
  if (!(r > 0.0)) throw GeometryError("state_to_geometry: position at the origin");
  return {2.0 * r / kSpeedOfLight, std::atan2(position.x(), position.y())};
}

PolarJacobian polar_jacobian(const Vec2& p) {
  const double x = p.x(), y = p.y();
  const double r = p.norm();
  if (!(r > 0.0)) throw GeometryError("polar_jacobian: position at the origin");
  const double r3 = r * r * r, r5 = r3 * r * r;
  PolarJacobian out;
  out.range = r;
  out.sine = x / r;
  out.jacobian << x / r, y / r, y * y / r3, -x * y / r3;
  out.hessian[0] << y * y / r3, -x * y / r3, -x * y / r3, x * x / r3;
  const double uxx = -3.0 * x * y * y / r5;
  const double uxy = 2.0 * y / r3 - 3.0 * y * y * y / r5;
  const double uyy = -x / r3 + 3.0 * x * y * y / r5;
  out.hessian[1] << uxx, uxy, uxy, uyy;
  return out;
}

std::vector<double> ArrayGeometry::virtual_positions() const {
  std::vector<double> out;
  out.reserve(num_virtual());
  for (double rx : rx_positions)
    for (double tx : tx_positions) out.push_back(rx + tx);
  return out;
}

bool ArrayGeometry::is_half_wavelength_ula(double rel_tol) const {
  auto pos = virtual_positions();
  if (pos.size() < 2) return pos.size() == 1;
  std::sort(pos.begin(), pos.end());
  const double d = 0.5 * wavelength();
  for (size_t i = 1; i < pos.size(); ++i)
    if (std::abs(pos[i] - pos[i - 1] - d) > rel_tol * d) return false;
  return true;
}

ArrayGeometry ArrayGeometry::nested_ula(int num_tx, int num_rx, double carrier_frequency) {
  if (num_tx < 1 || num_rx < 1) throw ConfigError("nested_ula: element counts must be positive");
  if (!(carrier_frequency > 0.0)) throw ConfigError("nested_ula: carrier frequency must be positive");
  ArrayGeometry g;
  g.carrier_frequency = carrier_frequency;
  const double d = 0.5 * kSpeedOfLight / carrier_frequency;
  for (int m = 0; m < num_tx; ++m) g.tx_positions.push_back((m - 0.5 * (num_tx - 1)) * d);
  for (int j = 0; j < num_rx; ++j) g.rx_positions.push_back((j - 0.5 * (num_rx - 1)) * num_tx * d);
  return g;
}

ArrayGeometry ArrayGeometry::nested_ula(const RadarConfig& config) {
  return nested_ula(config.num_tx, config.num_rx, config.carrier_frequency);
}

SteeringModel::SteeringModel(const RadarConfig& config)
    : SteeringModel(config, ArrayGeometry::nested_ula(config)) {}

SteeringModel::SteeringModel(const RadarConfig& config, ArrayGeometry geometry)
    : config_(config), geometry_(std::move(geometry)) {
  config_.validate();
  if (geometry_.num_tx() != config_.num_tx || geometry_.num_rx() != config_.num_rx)
    throw ConfigError("steering: array geometry does not match num_tx/num_rx");
  num_bins_ = config_.samples_per_window();

  pulse_ = generate_waveform(config_);
  CVec padded = CVec::Zero(num_bins_);
  padded.head(pulse_.size()) = pulse_;
  Fft fft(num_bins_);
  fft.forward(padded, pulse_spectrum_);
  power_ = pulse_spectrum_.cwiseAbs2();

  frequencies_.resize(num_bins_);
  range_phase_.resize(num_bins_);
  for (int k = 0; k < num_bins_; ++k) {
    const int signed_k = (k < (num_bins_ + 1) / 2) ? k : k - num_bins_;
    frequencies_[k] = signed_k * config_.sample_rate / num_bins_;
    range_phase_[k] = -4.0 * kPi * frequencies_[k] / kSpeedOfLight;
  }
  const auto virt = geometry_.virtual_positions();
  sine_phase_.resize(num_channels());
  for (int v = 0; v < num_channels(); ++v)
    sine_phase_[v] = 2.0 * kPi * geometry_.carrier_frequency * virt[v] / kSpeedOfLight;
}

void SteeringModel::check(const Vec2& position) const {
  const double r = position.norm();
  if (!(r > 0.0)) throw GeometryError("steering: position at the origin");
  if (!(position.y() > 0.0)) throw GeometryError("steering: position outside the field of view");
  if (2.0 * r / kSpeedOfLight > config_.max_delay() * (1.0 + 1e-12))
    throw OutOfWindowError("steering: delay beyond the receive window (range " + std::to_string(r) + " m)");
}

bool SteeringModel::observable(const Vec2& position) const {
  const double r = position.norm();
  return std::isfinite(r) && r > 0.0 && position.y() > 0.0 &&
         2.0 * r / kSpeedOfLight <= config_.max_delay() * (1.0 + 1e-12);
}

void SteeringModel::evaluate(double range, double sine, CVec& out) const {
  out.resize(length());
  CVec delay(num_bins_);
  for (int f = 0; f < num_bins_; ++f) delay[f] = power_[f] * std::polar(1.0, range_phase_[f] * range);
  for (int v = 0; v < num_channels(); ++v)
    out.segment(v * num_bins_, num_bins_) = delay * std::polar(1.0, sine_phase_[v] * sine);
}

CVec SteeringModel::vector(const Vec4& state) const {
  const Vec2 p = state.head<2>();
  check(p);
  CVec out;
  evaluate(p.norm(), p.x() / p.norm(), out);
  return out;
}

CMat SteeringModel::gradient(const Vec4& state) const {
  const Vec2 p = state.head<2>();
  check(p);
  const auto pj = polar_jacobian(p);
  CVec s;
  evaluate(pj.range, pj.sine, s);
  CMat g = CMat::Zero(length(), 4);
  const cdouble i1(0.0, 1.0);
  for (int v = 0; v < num_channels(); ++v) {
    for (int f = 0; f < num_bins_; ++f) {
      const int idx = v * num_bins_ + f;
      const double a = range_phase_[f], b = sine_phase_[v];
      g(idx, 0) = i1 * (a * pj.jacobian(0, 0) + b * pj.jacobian(1, 0)) * s[idx];
      g(idx, 1) = i1 * (a * pj.jacobian(0, 1) + b * pj.jacobian(1, 1)) * s[idx];
    }
  }
  return g;
}

CVec steering_vector(const Vec4& state, const SteeringModel& model) { return model.vector(state); }

CMat steering_gradient(const Vec4& state, const SteeringModel& model) { return model.gradient(state); }

SignalSpace::SignalSpace(const SteeringModel& model, RVec precision)
    : model_(&model), precision_(std::move(precision)) {
  if (precision_.size() != model.length())
    throw std::invalid_argument("SignalSpace: precision length does not match the steering model");
  if ((precision_.array() <= 0.0).any() || !precision_.allFinite())
    throw std::invalid_argument("SignalSpace: precision must be positive and finite");
  const int nb = model.num_bins(), nc = model.num_channels();
  weight_.resize(nb, nc);
  for (int v = 0; v < nc; ++v)
    for (int f = 0; f < nb; ++f) {
      const double p = model.power_spectrum()[f];
      weight_(f, v) = precision_[v * nb + f] * p * p;
    }
  bin_weight_ = weight_.rowwise().sum();
  const RVec chan = weight_.colwise().sum().transpose();
  const RVec& a = model.range_phase();
  const RVec& b = model.sine_phase();
  w0_ = bin_weight_.sum();
  waa_ = bin_weight_.dot(a.cwiseAbs2());
  wbb_ = chan.dot(b.cwiseAbs2());
  wab_ = a.dot(weight_ * b);
}

cdouble SignalSpace::inner(const CVec& a, const CVec& b) const {
  if (a.size() != precision_.size() || b.size() != precision_.size())
    throw std::invalid_argument("SignalSpace::inner: length mismatch");
  cdouble acc = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * precision_[i] * b[i];
  return acc;
}

CVec SignalSpace::weighted(const CVec& v) const {
  if (v.size() != precision_.size()) throw std::invalid_argument("SignalSpace::weighted: length mismatch");
  return precision_.cast<cdouble>().cwiseProduct(v);
}

Mat2 SignalSpace::polar_fisher() const {
  Mat2 w;
  w << waa_, wab_, wab_, wbb_;
  return w;
}

Mat2 SignalSpace::position_fisher(const Vec2& position) const {
  const auto pj = polar_jacobian(position);
  return pj.jacobian.transpose() * polar_fisher() * pj.jacobian;
}

std::array<Mat2, 2> SignalSpace::position_fisher_gradient(const Vec2& position) const {
  const auto pj = polar_jacobian(position);
  const Mat2 w = polar_fisher();
  std::array<Mat2, 2> out;
  for (int i = 0; i < 2; ++i) {
    Mat2 dj;
    dj.row(0) = pj.hessian[0].col(i).transpose();
    dj.row(1) = pj.hessian[1].col(i).transpose();
    const Mat2 half = dj.transpose() * w * pj.jacobian;
    out[i] = half + half.transpose();
  }
  return out;
}

Mat4 SignalSpace::fisher(const Vec4& state) const {
  Mat4 f = Mat4::Zero();
  f.topLeftCorner<2, 2>() = position_fisher(state.head<2>());
  return f;
}

SignalSpace::Correlation SignalSpace::correlate(double range, double sine, const CVec& y) const {
  if (y.size() != precision_.size()) throw std::invalid_argument("SignalSpace::correlate: length mismatch");
  const auto& m = *model_;
  const int nb = m.num_bins(), nc = m.num_channels();
  const RVec& a = m.range_phase();
  const RVec& b = m.sine_phase();
  const RVec& p = m.power_spectrum();
  CVec kernel(nb), dkernel(nb);
  for (int f = 0; f < nb; ++f) {
    kernel[f] = p[f] * std::polar(1.0, -a[f] * range);
    dkernel[f] = cdouble(0.0, -a[f]) * kernel[f];
  }
  Correlation out{0.0, 0.0, 0.0};
  for (int v = 0; v < nc; ++v) {
    const auto seg = y.segment(v * nb, nb);
    const cdouble c = kernel.transpose() * seg;
    const cdouble dc = dkernel.transpose() * seg;
    const cdouble ph = std::polar(1.0, -b[v] * sine);
    out.value += ph * c;
    out.d_range += ph * dc;
    out.d_sine += cdouble(0.0, -b[v]) * ph * c;
  }
  return out;
}

cdouble SignalSpace::correlate_value(double range, double sine, const CVec& y) const {
  if (y.size() != precision_.size()) throw std::invalid_argument("SignalSpace::correlate: length mismatch");
  const auto& m = *model_;
  const int nb = m.num_bins(), nc = m.num_channels();
  const RVec& a = m.range_phase();
  const RVec& b = m.sine_phase();
  const RVec& p = m.power_spectrum();
  CVec kernel(nb);
  for (int f = 0; f < nb; ++f) kernel[f] = p[f] * std::polar(1.0, -a[f] * range);
  cdouble out = 0.0;
  for (int v = 0; v < nc; ++v) {
    const cdouble c = kernel.transpose() * y.segment(v * nb, nb);
    out += std::polar(1.0, -b[v] * sine) * c;
  }
  return out;
}

cdouble SignalSpace::cross(const Vec2& p1, const Vec2& p2) const {
  const auto& m = *model_;
  const double r1 = p1.norm(), r2 = p2.norm();
  const double dr = r2 - r1, du = p2.x() / r2 - p1.x() / r1;
  const RVec& a = m.range_phase();
  const RVec& b = m.sine_phase();
  CVec ramp(m.num_bins());
  for (int f = 0; f < m.num_bins(); ++f) ramp[f] = std::polar(1.0, a[f] * dr);
  const CVec per_channel = weight_.transpose().cast<cdouble>() * ramp;
  cdouble out = 0.0;
  for (int v = 0; v < m.num_channels(); ++v) out += per_channel[v] * std::polar(1.0, b[v] * du);
  return out;
}

CMat SignalSpace::range_kernels(const SteeringModel& model, const RVec& ranges) {
  const RVec& a = model.range_phase();
  CMat k(model.num_bins(), ranges.size());
  for (Eigen::Index i = 0; i < ranges.size(); ++i)
    for (int f = 0; f < model.num_bins(); ++f) k(f, i) = std::polar(1.0, -a[f] * ranges[i]);
  return k;
}

CMat SignalSpace::channel_correlation(const CMat& kernels, const CVec& y) const {
  const auto& m = *model_;
  if (y.size() != precision_.size() || kernels.rows() != m.num_bins())
    throw std::invalid_argument("SignalSpace::channel_correlation: size mismatch");
  const Eigen::Map<const CMat> ym(y.data(), m.num_bins(), m.num_channels());
  const CMat pk = m.power_spectrum().cast<cdouble>().asDiagonal() * kernels;
  return ym.transpose() * pk;
}

CMat SignalSpace::channel_cross(double range1, const CMat& kernels) const {
  const auto& m = *model_;
  if (kernels.rows() != m.num_bins()) throw std::invalid_argument("SignalSpace::channel_cross: size mismatch");
  const RVec& a = m.range_phase();
  CVec e(m.num_bins());
  for (int f = 0; f < m.num_bins(); ++f) e[f] = std::polar(1.0, -a[f] * range1);
  const CMat ramps = e.asDiagonal() * kernels.conjugate();
  return weight_.transpose().cast<cdouble>() * ramps;
}

}  // namespace vmptrack
