#include "vmptrack/gaussian.hpp"

#include <stdexcept>

namespace vmptrack {
namespace {

Mat4 symmetrize(const Mat4& m) { return 0.5 * (m + m.transpose()); }

Mat4 spd_inverse(const Mat4& m, const char* what) {
  Eigen::LLT<Mat4> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) throw std::domain_error(std::string(what) + ": matrix is not positive definite");
  return symmetrize(llt.solve(Mat4::Identity()));
}

}  // namespace

Mat4 GaussianBelief::precision() const { return spd_inverse(covariance, "GaussianBelief::precision"); }

void GaussianBelief::validate() const {
  if (!mean.allFinite() || !covariance.allFinite()) throw std::domain_error("GaussianBelief: non-finite entries");
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw std::domain_error("GaussianBelief: covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat4> es(covariance);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw std::domain_error("GaussianBelief: covariance not positive definite");
}

GaussianMessage GaussianMessage::from_covariance(const Vec4& mean, const Mat4& covariance) {
  return {mean, spd_inverse(covariance, "GaussianMessage::from_covariance")};
}

GaussianMessage GaussianMessage::uninformative() { return {Vec4::Zero(), Mat4::Zero()}; }

Mat4 GaussianMessage::covariance() const { return spd_inverse(precision, "GaussianMessage::covariance"); }

GaussianBelief fuse_gaussian_messages(const std::vector<GaussianMessage>& messages) {
  if (messages.empty()) throw std::invalid_argument("fuse_gaussian_messages: no messages");
  Mat4 lambda = Mat4::Zero();
  Vec4 eta = Vec4::Zero();
  for (const auto& m : messages) {
    lambda += m.precision;
    eta += m.precision * m.mean;
  }
  Eigen::LLT<Mat4> llt(symmetrize(lambda));
  if (llt.info() != Eigen::Success) throw std::domain_error("fuse_gaussian_messages: fused precision is singular");
  GaussianBelief out;
  out.covariance = symmetrize(llt.solve(Mat4::Identity()));
  out.mean = llt.solve(eta);
  return out;
}

MotionModel::MotionModel(double dt_) : dt(dt_) {
  transition = Mat4::Identity();
  transition(0, 2) = dt;
  transition(1, 3) = dt;
  noise_gain = Vec4(0.5 * dt * dt, 0.5 * dt * dt, dt, dt).asDiagonal();
  validate();
  transition_inverse = transition.inverse();
  noise_gain_inverse = noise_gain.inverse();
}

void MotionModel::validate() const {
  if (!(dt > 0.0)) throw ConfigError("MotionModel: dt must be positive");
  if (std::abs(transition.determinant()) < 1e-300 || std::abs(noise_gain.determinant()) < 1e-300)
    throw ConfigError("MotionModel: singular transition or noise gain");
}

ProcessNoiseBelief ProcessNoiseBelief::prior(double zeta, double chi) {
  if (!(zeta > 0.0) || !(chi > 0.0)) throw ConfigError("process noise prior: zeta and chi must be positive");
  return {Vec4::Constant(0.5 * zeta), Vec4::Constant(0.5 * chi)};
}

Mat4 process_noise_covariance(const MotionModel& motion, const ProcessNoiseBelief& noise) {
  const Vec4 var = noise.mean_precision().cwiseInverse();
  return motion.noise_gain * var.asDiagonal() * motion.noise_gain.transpose();
}

GaussianMessage kinematic_message(const GaussianBelief& neighbor, Direction direction, const MotionModel& motion,
                                  const ProcessNoiseBelief& noise) {
  const Mat4& t = motion.transition;
  const Mat4 q = process_noise_covariance(motion, noise);
  if (direction == Direction::kForward)
    return GaussianMessage::from_covariance(t * neighbor.mean, symmetrize(t * neighbor.covariance * t.transpose() + q));
  const Mat4& ti = motion.transition_inverse;
  return GaussianMessage::from_covariance(ti * neighbor.mean,
                                          symmetrize(ti * (neighbor.covariance + q) * ti.transpose()));
}

Mat4 transition_residual(const GaussianBelief& current, const GaussianBelief& next, const MotionModel& motion) {
  const Mat4& gi = motion.noise_gain_inverse;
  const Mat4& t = motion.transition;
  const Vec4 e = gi * (next.mean - t * current.mean);
  return e * e.transpose() + gi * next.covariance * gi.transpose() +
         gi * t * current.covariance * t.transpose() * gi.transpose();
}

ProcessNoiseBelief update_process_noise(const std::vector<GaussianBelief>& beliefs, const MotionModel& motion,
                                        const ProcessNoisePrior& prior) {
  auto out = ProcessNoiseBelief::prior(prior.zeta, prior.chi);
  if (beliefs.size() < 2) return out;
  Vec4 acc = Vec4::Zero();
  for (size_t n = 0; n + 1 < beliefs.size(); ++n)
    acc += transition_residual(beliefs[n], beliefs[n + 1], motion).diagonal();
  const double transitions = static_cast<double>(beliefs.size() - 1);
  out.shape = Vec4::Constant(0.5 * (transitions + prior.zeta));
  out.rate = 0.5 * (Vec4::Constant(prior.chi) + acc);
  return out;
}

}  // namespace vmptrack
