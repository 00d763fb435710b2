#pragma once

#include <array>
#include <vector>

#include "vmptrack/radar_config.hpp"
#include "vmptrack/types.hpp"

namespace vmptrack {

// A state that cannot be observed: at the origin or outside the front half-plane.
class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The echo of a state would arrive after the receive window closes.
class OutOfWindowError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct GeometryParams {
  double delay = 0.0;    // two-way propagation time [s]
  double bearing = 0.0;  // from broadside (+y), positive towards +x [rad]
};

// tau = 2 |p| / c, theta = atan(x / y).  Throws GeometryError at the origin.
GeometryParams state_to_geometry(const Vec2& position);

// Range r = |p|, bearing sine u = x / r and their derivatives with respect to (x, y).
struct PolarJacobian {
  double range = 0.0;
  double sine = 0.0;
  Mat2 jacobian;                // rows (r, u), columns (x, y)
  std::array<Mat2, 2> hessian;  // hessian[0] of r, hessian[1] of u
};
PolarJacobian polar_jacobian(const Vec2& position);

// Linear MIMO array, all element positions measured along x from the phase centre.
struct ArrayGeometry {
  std::vector<double> tx_positions;  // [m]
  std::vector<double> rx_positions;  // [m]
  double carrier_frequency = 10e9;   // [Hz]

  int num_tx() const { return static_cast<int>(tx_positions.size()); }
  int num_rx() const { return static_cast<int>(rx_positions.size()); }
  int num_virtual() const { return num_tx() * num_rx(); }
  double wavelength() const { return kSpeedOfLight / carrier_frequency; }

  // Virtual element of receiver j and transmitter m is stored at j * num_tx + m.
  std::vector<double> virtual_positions() const;
  bool is_half_wavelength_ula(double rel_tol = 1e-9) const;

  // Tx at lambda/2 spacing, Rx at num_tx * lambda/2, both centred at zero.
  static ArrayGeometry nested_ula(int num_tx, int num_rx, double carrier_frequency);
  static ArrayGeometry nested_ula(const RadarConfig& config);
};

// Matched-filtered steering vectors in the frequency domain.
//
// Channel v = j * num_tx + m holds the DFT of one receive window.  After the
// matched filter conj(U_f) the noise-free response of a unit reflector at
// range r and bearing sine u is
//   S_{v,f} = |U_f|^2 exp(i a_f r) exp(i b_v u),
// with a_f = -4 pi f / c and b_v = 2 pi f_c d_v / c.  Entry (v, f) is stored
// at v * num_bins() + f.
class SteeringModel {
 public:
  explicit SteeringModel(const RadarConfig& config);
  SteeringModel(const RadarConfig& config, ArrayGeometry geometry);

  const RadarConfig& config() const { return config_; }
  const ArrayGeometry& geometry() const { return geometry_; }
  int num_bins() const { return num_bins_; }
  int num_channels() const { return geometry_.num_virtual(); }
  int length() const { return num_bins_ * num_channels(); }

  const CVec& pulse() const { return pulse_; }                    // time samples
  const CVec& pulse_spectrum() const { return pulse_spectrum_; }  // U_f
  const RVec& power_spectrum() const { return power_; }           // |U_f|^2
  const RVec& frequencies() const { return frequencies_; }        // [Hz], symmetric
  const RVec& range_phase() const { return range_phase_; }        // a_f [rad/m]
  const RVec& sine_phase() const { return sine_phase_; }          // b_v [rad]

  // Throws GeometryError / OutOfWindowError for unobservable positions.
  void check(const Vec2& position) const;
  bool observable(const Vec2& position) const;

  // Unchecked polar evaluation, used in inner loops.
  void evaluate(double range, double sine, CVec& out) const;

  CVec vector(const Vec4& state) const;
  // N_Z x 4, columns d/dx, d/dy, d/dvx, d/dvy.
  CMat gradient(const Vec4& state) const;

 private:
  RadarConfig config_;
  ArrayGeometry geometry_;
  int num_bins_ = 0;
  CVec pulse_;
  CVec pulse_spectrum_;
  RVec power_;
  RVec frequencies_;
  RVec range_phase_;
  RVec sine_phase_;
};

CVec steering_vector(const Vec4& state, const SteeringModel& model);
CMat steering_gradient(const Vec4& state, const SteeringModel& model);

// Inner products <a|Lambda|b> = sum conj(a_i) Lambda_i b_i under a diagonal
// noise precision, with closed forms for the state-independent moments of S.
class SignalSpace {
 public:
  SignalSpace(const SteeringModel& model, RVec precision);

  const SteeringModel& model() const { return *model_; }
  const RVec& precision() const { return precision_; }

  cdouble inner(const CVec& a, const CVec& b) const;
  CVec weighted(const CVec& v) const;  // Lambda .* v

  // <S|Lambda|S>, equal for every observable state.
  double energy() const { return w0_; }
  // Re <dS/dp | Lambda | dS/dp> for p = (x, y).
  Mat2 position_fisher(const Vec2& position) const;
  // Derivative of position_fisher with respect to x (index 0) or y (index 1).
  std::array<Mat2, 2> position_fisher_gradient(const Vec2& position) const;
  // Full 4x4 form; velocity rows and columns are zero.
  Mat4 fisher(const Vec4& state) const;

  // <S(r,u)|y> for a pre-weighted vector y = Lambda .* v, and its partials.
  struct Correlation {
    cdouble value;
    cdouble d_range;
    cdouble d_sine;
  };
  Correlation correlate(double range, double sine, const CVec& weighted_data) const;
  cdouble correlate_value(double range, double sine, const CVec& weighted_data) const;
  // <S(p1)|Lambda|S(p2)>
  cdouble cross(const Vec2& p1, const Vec2& p2) const;

  // Batched forms over a set of ranges.  kernels(f, i) = exp(-i a_f r_i), see
  // range_kernels.  Results are channels x ranges; the sine dependence is
  // applied afterwards as a per-channel phase.
  //   correlate_value(r_i, u) = sum_v exp(-i b_v u) C(v, i)
  //   cross(p1, (r_i, u))     = sum_v exp(i b_v (u - u1)) X(v, i)
  static CMat range_kernels(const SteeringModel& model, const RVec& ranges);
  CMat channel_correlation(const CMat& kernels, const CVec& weighted_data) const;
  CMat channel_cross(double range1, const CMat& kernels) const;

 private:
  // Moments of (r, u) phase derivatives: [aa, ab, bb].
  Mat2 polar_fisher() const;

  const SteeringModel* model_;
  RVec precision_;
  RVec bin_weight_;      // per bin, summed over channels: sum_v Lambda P^2
  RMat weight_;          // bins x channels
  double w0_ = 0.0;
  double waa_ = 0.0, wab_ = 0.0, wbb_ = 0.0;
};

}  // namespace vmptrack
