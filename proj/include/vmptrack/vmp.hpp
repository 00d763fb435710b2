#pragma once

#include <vector>

#include "vmptrack/gaussian.hpp"
#include "vmptrack/optim.hpp"
#include "vmptrack/steering.hpp"

namespace vmptrack {

// q(alpha) = CN(mean, precision^{-1}) over the K reflectivities.
struct ReflectivityBelief {
  CVec mean;
  CMat precision;

  CMat covariance() const;
};

struct ExistenceParams {
  double p_survive = 0.95;
  double p_birth = 1e-8;
};

double logit(double p);
// xi_prev (logit p_s - logit p_b) + logit p_b
double existence_gain(double prev_xi, const ExistenceParams& params);
double bernoulli_entropy(double xi);

// The (alpha, xi) sub-problem of one frame with the state beliefs held fixed.
//
//   gram       R_kl = <S_k|Lambda|S_l> at the state means; R_kk adds the
//              delta-method term tr(P_k Re<dS|Lambda|dS>)
//   projection b_k  = <S_k|Lambda|Z>
//   prior      alpha_k ~ CN(0, 1 / prior_precision_k)
//
// For existence means xi the reflectivity precision is
//   Lambda_alpha = M (.) R + diag(prior), M_kl = xi_k xi_l (k != l), M_kk = xi_k,
// and its mean solves Lambda_alpha mu = xi (.) b.
class ReflectivityProblem {
 public:
  ReflectivityProblem() = default;
  ReflectivityProblem(CMat gram, CVec projection, RVec prior_precision);

  static ReflectivityProblem build(const SignalSpace& space, const CVec& weighted_data,
                                   const std::vector<GaussianBelief>& states, const RVec& prior_precision);

  int size() const { return static_cast<int>(projection_.size()); }
  const CMat& gram() const { return gram_; }
  const CVec& projection() const { return projection_; }
  const RVec& prior_precision() const { return prior_; }

  CMat precision(const RVec& xi) const;
  ReflectivityBelief solve(const RVec& xi) const;
  // mu^H Lambda_alpha mu - ln |Lambda_alpha|
  double log_evidence(const RVec& xi) const;
  // d log_evidence / d xi_k
  double log_evidence_derivative(int k, const RVec& xi) const;

 private:
  CMat gram_;
  CVec projection_;
  RVec prior_;
};

ReflectivityBelief update_alpha(const ReflectivityProblem& problem, const RVec& xi);

// log_evidence + H(xi_k) + xi_k g(prev_xi) as a function of xi_k alone.
double existence_objective(int k, const ReflectivityProblem& problem, const RVec& xi, double value, double prev_xi,
                           const ExistenceParams& params);

// Maximizer over xi_k in [0, 1] of existence_objective, other entries fixed.
// The search runs on the logit scale so values within 1e-8 of 0 or 1 are
// resolved; it never returns a point worse than the current xi_k.
double update_xi(int k, const ReflectivityProblem& problem, const RVec& xi, double prev_xi,
                 const ExistenceParams& params);

// One coordinate sweep of update_xi over k = 0..K-1, followed by update_alpha.
ReflectivityBelief joint_update(const ReflectivityProblem& problem, RVec& xi, const RVec& prev_xi,
                                const ExistenceParams& params);

// ELBO terms depending on (alpha, xi) up to a constant.  With alpha omitted
// q(alpha) is taken at its optimum for xi.
double compute_elbo(const ReflectivityProblem& problem, const RVec& xi, const RVec& prev_xi,
                    const ExistenceParams& params, const ReflectivityBelief* alpha = nullptr);

// --- Gaussian projection of a data message -----------------------------------

// KL objective of a diagonal Gaussian over position,
//   J(m, D) = -1/2 sum_j ln D_j + c(m) + sum_j D_j h_j(m),
// up to a constant.  Implementations supply c, h and their gradients.
class DiagonalKlTerms {
 public:
  virtual ~DiagonalKlTerms() = default;
  // dh.row(j) is the gradient of h_j.  Returns false outside the domain.
  virtual bool evaluate(const Vec2& mean, double& c, Vec2& dc, Vec2& h, Mat2& dh) const = 0;
};

double diagonal_kl_objective(const DiagonalKlTerms& terms, const Vec2& mean, const Vec2& variance);

struct DataMessageOptions {
  BfgsOptions bfgs{50, 1e-6, 2.5};
};

struct DataMessageResult {
  GaussianMessage message;  // velocity directions carry zero precision
  Vec2 variance = Vec2::Zero();
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Minimizes J over (m, D).  For fixed m the optimal variance is D_j = 1/(2 h_j(m)),
// so the search runs over the mean of the profiled objective.
DataMessageResult minimize_diagonal_kl(const DiagonalKlTerms& terms, const Vec2& init,
                                       const DataMessageOptions& options = {});

// The radar data message of one PO:
//   c(m) = kappa W0 - 2 Re <S(m)|y>,   h_j(m) = kappa [Re<dS|Lambda|dS>]_jj,
// where y = Lambda (xi_k conj(mu_k) Z - sum_{l != k} xi_k xi_l E[conj(alpha_k) alpha_l] S_l)
// and kappa = xi_k E|alpha_k|^2.
class RadarKlTerms : public DiagonalKlTerms {
 public:
  RadarKlTerms(const SignalSpace& space, CVec weighted_target, double kappa);
  bool evaluate(const Vec2& mean, double& c, Vec2& dc, Vec2& h, Mat2& dh) const override;

 private:
  const SignalSpace* space_;
  CVec target_;
  double kappa_;
};

// y and kappa for PO k.  weighted_data = Lambda Z; weighted_steering[l] = Lambda S_l.
void data_message_target(int k, const CVec& weighted_data, const std::vector<CVec>& weighted_steering,
                         const RVec& xi, const ReflectivityBelief& alpha, CVec& target, double& kappa);

DataMessageResult project_data_message(const SignalSpace& space, const CVec& weighted_target, double kappa,
                                       const Vec2& init, const DataMessageOptions& options = {});

}  // namespace vmptrack
