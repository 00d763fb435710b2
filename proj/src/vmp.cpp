#include "vmptrack/vmp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/tools/toms748_solve.hpp>

namespace vmptrack {
namespace {

constexpr double kLogitBound = 40.0;

double sigmoid(double u) { return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u)); }

Eigen::LLT<CMat> factorize(const CMat& lambda) {
  Eigen::LLT<CMat> llt(lambda);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("reflectivity precision is not positive definite (conditioning failure)");
  return llt;
}

double log_det(const Eigen::LLT<CMat>& llt) {
  double acc = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i).real());
  return 2.0 * acc;
}

void check_xi(const ReflectivityProblem& p, const RVec& xi) {
  if (xi.size() != p.size()) throw std::invalid_argument("existence vector length does not match the problem");
}

}  // namespace

CMat ReflectivityBelief::covariance() const {
  const auto llt = factorize(precision);
  return llt.solve(CMat::Identity(precision.rows(), precision.cols()));
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double existence_gain(double prev_xi, const ExistenceParams& params) {
  const double lb = logit(params.p_birth);
  return prev_xi * (logit(params.p_survive) - lb) + lb;
}

double bernoulli_entropy(double xi) {
  double h = 0.0;
  if (xi > 0.0) h -= xi * std::log(xi);
  if (xi < 1.0) h -= (1.0 - xi) * std::log1p(-xi);
  return h;
}

ReflectivityProblem::ReflectivityProblem(CMat gram, CVec projection, RVec prior_precision)
    : gram_(std::move(gram)), projection_(std::move(projection)), prior_(std::move(prior_precision)) {
  const auto k = projection_.size();
  if (gram_.rows() != k || gram_.cols() != k || prior_.size() != k)
    throw std::invalid_argument("ReflectivityProblem: inconsistent sizes");
  if ((prior_.array() <= 0.0).any()) throw std::invalid_argument("ReflectivityProblem: prior precision must be positive");
}

ReflectivityProblem ReflectivityProblem::build(const SignalSpace& space, const CVec& weighted_data,
                                               const std::vector<GaussianBelief>& states,
                                               const RVec& prior_precision) {
  const int k = static_cast<int>(states.size());
  CMat gram(k, k);
  CVec proj(k);
  for (int a = 0; a < k; ++a) {
    const Vec2 pa = states[a].mean.head<2>();
    const double r = pa.norm();
    proj[a] = space.correlate_value(r, pa.x() / r, weighted_data);
    const Mat2 fisher = space.position_fisher(pa);
    gram(a, a) = space.energy() + (states[a].covariance.topLeftCorner<2, 2>() * fisher).trace();
    for (int b = a + 1; b < k; ++b) {
      gram(a, b) = space.cross(pa, states[b].mean.head<2>());
      gram(b, a) = std::conj(gram(a, b));
    }
  }
  return ReflectivityProblem(std::move(gram), std::move(proj), prior_precision);
}

CMat ReflectivityProblem::precision(const RVec& xi) const {
  check_xi(*this, xi);
  const int k = size();
  CMat out(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) out(a, b) = (a == b ? xi[a] : xi[a] * xi[b]) * gram_(a, b);
  out.diagonal() += prior_.cast<cdouble>();
  return out;
}

ReflectivityBelief ReflectivityProblem::solve(const RVec& xi) const {
  ReflectivityBelief out;
  out.precision = precision(xi);
  if (size() == 0) {
    out.mean.resize(0);
    return out;
  }
  const auto llt = factorize(out.precision);
  out.mean = llt.solve(xi.cast<cdouble>().cwiseProduct(projection_));
  return out;
}

double ReflectivityProblem::log_evidence(const RVec& xi) const {
  if (size() == 0) return 0.0;
  const CMat lambda = precision(xi);
  const auto llt = factorize(lambda);
  const CVec b = xi.cast<cdouble>().cwiseProduct(projection_);
  const CVec mu = llt.solve(b);
  return b.dot(mu).real() - log_det(llt);
}

double ReflectivityProblem::log_evidence_derivative(int k, const RVec& xi) const {
  const CMat lambda = precision(xi);
  const auto llt = factorize(lambda);
  const CVec b = xi.cast<cdouble>().cwiseProduct(projection_);
  const CVec mu = llt.solve(b);
  CVec ek = CVec::Zero(size());
  ek[k] = 1.0;
  const CVec col = llt.solve(ek);  // column k of Lambda^{-1}
  cdouble quad = 0.0, tr = 0.0;
  for (int l = 0; l < size(); ++l) {
    if (l == k) continue;
    quad += xi[l] * gram_(k, l) * mu[l];
    tr += xi[l] * col[l] * gram_(k, l);
  }
  const double rkk = gram_(k, k).real();
  const double dquad = 2.0 * (std::conj(mu[k]) * quad).real() + std::norm(mu[k]) * rkk;
  const double dtr = 2.0 * tr.real() + col[k].real() * rkk;
  return 2.0 * (std::conj(projection_[k]) * mu[k]).real() - dquad - dtr;
}

ReflectivityBelief update_alpha(const ReflectivityProblem& problem, const RVec& xi) { return problem.solve(xi); }

double existence_objective(int k, const ReflectivityProblem& problem, const RVec& xi, double value, double prev_xi,
                           const ExistenceParams& params) {
  RVec x = xi;
  x[k] = value;
  return problem.log_evidence(x) + bernoulli_entropy(value) + value * existence_gain(prev_xi, params);
}

namespace {

// log_evidence restricted to xi_k = x with every other entry fixed.  With B
// the precision of the other POs, c_j = xi_j R_jk, and the Schur complement
// s(x) = x R_kk + lambda_k - x^2 c^H B^-1 c,
//   F(x) = const + x^2 |b_k - c^H B^-1 b_r|^2 / s(x) - ln s(x).
struct CoordinateEvidence {
  double rkk = 0.0, lambda = 0.0, beta = 0.0, a = 0.0;

  double s(double x) const { return x * rkk + lambda - x * x * beta; }
  double value(double x) const { return x * x * a / s(x) - std::log(s(x)); }
  double derivative(double x) const {
    const double sv = s(x), ds = rkk - 2.0 * x * beta;
    return (2.0 * x * a * sv - x * x * a * ds) / (sv * sv) - ds / sv;
  }
};

// B^-1 applied to the off-k parts of c and of xi (.) b, read off the full
// covariance sigma = Lambda_alpha^-1 via the inverse-of-a-block identity.
// Outputs are length-K vectors with entry k zero.
CoordinateEvidence coordinate_evidence(int k, const ReflectivityProblem& p, const RVec& xi, const CMat& sigma,
                                       CVec& binv_c) {
  const int n = p.size();
  CVec c = CVec::Zero(n), br = CVec::Zero(n);
  for (int j = 0; j < n; ++j)
    if (j != k) {
      c[j] = xi[j] * p.gram()(j, k);
      br[j] = xi[j] * p.projection()[j];
    }
  const CVec col = sigma.col(k);
  const cdouble skk = col[k];
  auto binv = [&](const CVec& v) {
    CVec out = sigma * v - col * (col.dot(v) / skk);
    out[k] = 0.0;
    return out;
  };
  binv_c = binv(c);
  const CVec binv_b = binv(br);
  CoordinateEvidence e;
  e.rkk = p.gram()(k, k).real();
  e.lambda = p.prior_precision()[k];
  e.beta = std::max(0.0, c.dot(binv_c).real());
  e.a = std::norm(p.projection()[k] - c.dot(binv_b));
  return e;
}

double search_xi(const CoordinateEvidence& e, double current, double g) {
  auto objective = [&](double v) { return e.value(v) + bernoulli_entropy(v) + v * g; };
  // Stationarity on the logit scale: d/du of the objective has the sign of
  // F'(sigmoid(u)) + g - u.
  auto phi = [&](double u) { return e.derivative(sigmoid(u)) + g - u; };

  constexpr int kScan = 33;
  std::vector<double> us(kScan), ph(kScan);
  for (int i = 0; i < kScan; ++i) {
    us[i] = -kLogitBound + 2.0 * kLogitBound * i / (kScan - 1);
    ph[i] = phi(us[i]);
  }
  std::vector<double> candidates = {us.front(), us.back()};
  for (int i = 0; i + 1 < kScan; ++i) {
    if (!(ph[i] > 0.0 && ph[i + 1] <= 0.0)) continue;
    if (ph[i + 1] == 0.0) {
      candidates.push_back(us[i + 1]);
      continue;
    }
    std::uintmax_t iters = 100;
    const auto root = boost::math::tools::toms748_solve(phi, us[i], us[i + 1], ph[i], ph[i + 1],
                                                        boost::math::tools::eps_tolerance<double>(45), iters);
    candidates.push_back(0.5 * (root.first + root.second));
  }

  double best = current;
  double best_val = objective(best);
  for (double u : candidates) {
    const double v = sigmoid(u);
    const double val = objective(v);
    if (val > best_val) {
      best_val = val;
      best = v;
    }
  }
  return best;
}

CMat inverse(const CMat& lambda) { return factorize(lambda).solve(CMat::Identity(lambda.rows(), lambda.cols())); }

}  // namespace

double update_xi(int k, const ReflectivityProblem& problem, const RVec& xi, double prev_xi,
                 const ExistenceParams& params) {
  check_xi(problem, xi);
  if (k < 0 || k >= problem.size()) throw std::out_of_range("update_xi: index out of range");
  CVec binv_c;
  const auto e = coordinate_evidence(k, problem, xi, inverse(problem.precision(xi)), binv_c);
  return search_xi(e, xi[k], existence_gain(prev_xi, params));
}

ReflectivityBelief joint_update(const ReflectivityProblem& problem, RVec& xi, const RVec& prev_xi,
                                const ExistenceParams& params) {
  check_xi(problem, xi);
  if (prev_xi.size() != xi.size()) throw std::invalid_argument("joint_update: prev_xi length mismatch");
  const int n = problem.size();
  if (n == 0) return update_alpha(problem, xi);
  // One factorization per sweep; each coordinate then rebuilds the covariance
  // from B^-1 in O(K^2).
  CMat sigma = inverse(problem.precision(xi));
  CVec binv_c;
  for (int k = 0; k < n; ++k) {
    const auto e = coordinate_evidence(k, problem, xi, sigma, binv_c);
    const double x = search_xi(e, xi[k], existence_gain(prev_xi[k], params));
    if (x == xi[k]) continue;
    // B^-1 itself, then the block inverse at the new xi_k.
    const CVec col = sigma.col(k);
    CMat binv = sigma - col * col.adjoint() / col[k].real();
    binv.row(k).setZero();
    binv.col(k).setZero();
    const double s = e.s(x);
    const CVec w = x * binv_c;  // B^-1 (x c)
    sigma = binv + w * w.adjoint() / s;
    sigma.col(k) = -w / s;
    sigma.row(k) = -w.adjoint() / s;
    sigma(k, k) = 1.0 / s;
    xi[k] = x;
  }
  return update_alpha(problem, xi);
}

double compute_elbo(const ReflectivityProblem& problem, const RVec& xi, const RVec& prev_xi,
                    const ExistenceParams& params, const ReflectivityBelief* alpha) {
  const int k = problem.size();
  if (k == 0) return 0.0;
  check_xi(problem, xi);
  const CMat lambda = problem.precision(xi);
  const auto llt = factorize(lambda);
  const CVec b = xi.cast<cdouble>().cwiseProduct(problem.projection());
  const CVec mu = llt.solve(b);
  double elbo = problem.prior_precision().array().log().sum() + b.dot(mu).real() - log_det(llt);
  for (int i = 0; i < k; ++i) elbo += bernoulli_entropy(xi[i]) + xi[i] * existence_gain(prev_xi[i], params);
  if (alpha) {
    // KL(q(alpha) || t(alpha)) with t = CN(mu, Lambda^{-1}).
    const auto q = factorize(alpha->precision);
    const CMat q_cov = q.solve(CMat::Identity(k, k));
    const CVec d = alpha->mean - mu;
    const double kl = (lambda * q_cov).trace().real() + d.dot(lambda * d).real() - k - log_det(llt) + log_det(q);
    elbo -= kl;
  }
  return elbo;
}

double diagonal_kl_objective(const DiagonalKlTerms& terms, const Vec2& mean, const Vec2& variance) {
  double c;
  Vec2 dc, h;
  Mat2 dh;
  if (!terms.evaluate(mean, c, dc, h, dh) || !(variance.array() > 0.0).all())
    return std::numeric_limits<double>::infinity();
  return -0.5 * variance.array().log().sum() + c + variance.dot(h);
}

DataMessageResult minimize_diagonal_kl(const DiagonalKlTerms& terms, const Vec2& init,
                                       const DataMessageOptions& options) {
  const double inf = std::numeric_limits<double>::infinity();
  auto profiled = [&](const RVec& x, RVec* grad) {
    double c;
    Vec2 dc, h;
    Mat2 dh;
    if (!terms.evaluate(Vec2(x[0], x[1]), c, dc, h, dh) || !(h.array() > 0.0).all()) return inf;
    if (grad) {
      Vec2 g = dc;
      for (int j = 0; j < 2; ++j) g += 0.5 * dh.row(j).transpose() / h[j];
      *grad = g;
    }
    return c + 0.5 * (2.0 * h).array().log().sum() + 1.0;
  };

  DataMessageResult out;
  out.message = GaussianMessage::uninformative();
  double c0;
  Vec2 dc0, h0;
  Mat2 dh0;
  if (!terms.evaluate(init, c0, dc0, h0, dh0) || !(h0.array() > 0.0).all()) return out;

  const RMat metric = (0.5 * h0.cwiseInverse()).asDiagonal();
  const auto res = minimize_bfgs(profiled, RVec(init), metric, options.bfgs);
  const Vec2 m(res.x[0], res.x[1]);
  double c;
  Vec2 dc, h;
  Mat2 dh;
  terms.evaluate(m, c, dc, h, dh);
  out.variance = (2.0 * h).cwiseInverse();
  out.message.mean << m, 0.0, 0.0;
  out.message.precision = Vec4(2.0 * h[0], 2.0 * h[1], 0.0, 0.0).asDiagonal();
  out.objective = res.value;
  out.iterations = res.iterations;
  out.converged = res.converged;
  return out;
}

RadarKlTerms::RadarKlTerms(const SignalSpace& space, CVec weighted_target, double kappa)
    : space_(&space), target_(std::move(weighted_target)), kappa_(kappa) {}

bool RadarKlTerms::evaluate(const Vec2& mean, double& c, Vec2& dc, Vec2& h, Mat2& dh) const {
  if (!space_->model().observable(mean)) return false;
  const auto pj = polar_jacobian(mean);
  const auto corr = space_->correlate(pj.range, pj.sine, target_);
  c = kappa_ * space_->energy() - 2.0 * corr.value.real();
  for (int i = 0; i < 2; ++i)
    dc[i] = -2.0 * (corr.d_range * pj.jacobian(0, i) + corr.d_sine * pj.jacobian(1, i)).real();
  const Mat2 fisher = space_->position_fisher(mean);
  const auto dfisher = space_->position_fisher_gradient(mean);
  for (int j = 0; j < 2; ++j) {
    h[j] = kappa_ * fisher(j, j);
    for (int i = 0; i < 2; ++i) dh(j, i) = kappa_ * dfisher[i](j, j);
  }
  return true;
}

void data_message_target(int k, const CVec& weighted_data, const std::vector<CVec>& weighted_steering,
                         const RVec& xi, const ReflectivityBelief& alpha, CVec& target, double& kappa) {
  const int n = static_cast<int>(xi.size());
  if (k < 0 || k >= n || static_cast<int>(weighted_steering.size()) != n || alpha.mean.size() != n)
    throw std::invalid_argument("data_message_target: inconsistent sizes");
  const CMat cov = alpha.covariance();
  const cdouble mk = std::conj(alpha.mean[k]);
  target = (xi[k] * mk) * weighted_data;
  for (int l = 0; l < n; ++l) {
    if (l == k || xi[l] == 0.0) continue;
    const cdouble w = xi[k] * xi[l] * (mk * alpha.mean[l] + cov(l, k));
    target -= w * weighted_steering[l];
  }
  kappa = xi[k] * (std::norm(alpha.mean[k]) + cov(k, k).real());
}

DataMessageResult project_data_message(const SignalSpace& space, const CVec& weighted_target, double kappa,
                                       const Vec2& init, const DataMessageOptions& options) {
  if (!(kappa > 0.0)) {
    DataMessageResult out;
    out.message = GaussianMessage::uninformative();
    return out;
  }
  RadarKlTerms terms(space, weighted_target, kappa);
  return minimize_diagonal_kl(terms, init, options);
}

}  // namespace vmptrack
