#pragma once

#include <vector>

#include "vmptrack/types.hpp"

namespace vmptrack {

// q(Phi) over (x, y, vx, vy).
struct GaussianBelief {
  Vec4 mean = Vec4::Zero();
  Mat4 covariance = Mat4::Identity();

  Mat4 precision() const;
  // Throws std::domain_error unless the covariance is symmetric positive definite.
  void validate() const;
};

// Gaussian message in information form.  A zero eigenvalue of the precision
// marks a direction the message says nothing about (data messages carry no
// velocity information).
struct GaussianMessage {
  Vec4 mean = Vec4::Zero();
  Mat4 precision = Mat4::Zero();

  static GaussianMessage from_covariance(const Vec4& mean, const Mat4& covariance);
  static GaussianMessage uninformative();

  bool informative() const { return precision.squaredNorm() > 0.0; }
  // Throws std::domain_error when the precision is singular.
  Mat4 covariance() const;
};

// Product of Gaussian messages: precision = sum of precisions,
// mean = covariance * sum(precision_i * mean_i).
GaussianBelief fuse_gaussian_messages(const std::vector<GaussianMessage>& messages);

// Constant-velocity transition Phi_n = T Phi_{n-1} + G a with
// T = [I, dt I; 0, I] and G = diag(dt^2/2, dt^2/2, dt, dt).
struct MotionModel {
  double dt = 0.1;
  Mat4 transition;
  Mat4 noise_gain;
  Mat4 transition_inverse;
  Mat4 noise_gain_inverse;

  explicit MotionModel(double dt = 0.1);
  // Throws ConfigError if T or G is singular.
  void validate() const;
};

// Gamma posterior on the per-dimension driving-noise precisions.
struct ProcessNoiseBelief {
  Vec4 shape = Vec4::Constant(1.0);
  Vec4 rate = Vec4::Constant(1.0);

  Vec4 mean_precision() const { return shape.cwiseQuotient(rate); }
  static ProcessNoiseBelief prior(double zeta, double chi);
};

struct ProcessNoisePrior {
  double zeta = 2.0;
  double chi = 2.0;  // 2 * sigma_a^2 with sigma_a^2 = 1
};

// G diag(1 / mean precision) G^T.
Mat4 process_noise_covariance(const MotionModel& motion, const ProcessNoiseBelief& noise);

enum class Direction { kForward, kBackward };

// Message from the neighbouring step along the kinematic chain.
//   forward:  N(T m, T P T^T + Q)
//   backward: N(T^{-1} m, T^{-1} (P + Q) T^{-T})
GaussianMessage kinematic_message(const GaussianBelief& neighbor, Direction direction, const MotionModel& motion,
                                  const ProcessNoiseBelief& noise);

// Expected scaled transition residual E[(G^{-1}(Phi_{n+1} - T Phi_n))(...)^T]
// under independent beliefs for the two steps.
Mat4 transition_residual(const GaussianBelief& current, const GaussianBelief& next, const MotionModel& motion);

// Gamma update from consecutive beliefs: shape (N + zeta)/2 and rate
// (chi + sum_n diag V_n)/2 with N the number of transitions.
ProcessNoiseBelief update_process_noise(const std::vector<GaussianBelief>& beliefs, const MotionModel& motion,
                                        const ProcessNoisePrior& prior);

}  // namespace vmptrack
