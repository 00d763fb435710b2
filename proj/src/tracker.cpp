#include "vmptrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace vmptrack {

void TrackerConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("tracker config: ") + what);
  };
  const auto& e = existence;
  require(e.p_survive > 0.0 && e.p_survive < 1.0, "p_survive must lie in (0, 1)");
  require(e.p_birth > 0.0 && e.p_birth < 1.0, "p_birth must lie in (0, 1)");
  require(prune_threshold > 0.0 && prune_threshold < birth_threshold && birth_threshold < 1.0,
          "thresholds must satisfy 0 < prune < birth < 1");
  require(report_threshold > 0.0 && report_threshold < 1.0, "report_threshold must lie in (0, 1)");
  require(inner_iterations >= 1, "inner_iterations must be at least 1");
  require(joint_sweeps >= 1, "joint_sweeps must be at least 1");
  require(prior_reflectivity_precision > 0.0, "prior_reflectivity_precision must be positive");
  require(birth_grid.range_spacing > 0.0 && birth_grid.min_range > 0.0, "birth grid ranges must be positive");
  require(birth_grid.sine_spacing >= 0.0 && birth_grid.max_sine > 0.0 && birth_grid.max_sine < 1.0,
          "birth grid sine settings out of range");
  require(birth_grid.velocity_std > 0.0, "birth velocity_std must be positive");
  require(max_births_per_step >= 0, "max_births_per_step must be non-negative");
  require(smoothing_lag >= 0, "smoothing_lag must be non-negative");
}

const TrackStep* TrackState::at(int step) const {
  const int i = step - birth_step;
  if (i < 0 || i >= static_cast<int>(history.size())) return nullptr;
  return &history[i];
}

std::vector<Estimate> extract_estimates(const std::vector<TrackState>& tracks, int step, double threshold) {
  std::vector<Estimate> out;
  for (const auto& t : tracks) {
    const TrackStep* s = t.at(step);
    if (s && s->existence > threshold) out.push_back({t.id, s->belief.mean, s->existence});
  }
  return out;
}

void birth_grid_axes(const BirthGrid& grid, const RadarConfig& radar, RVec& ranges, RVec& sines) {
  const double max_range = grid.max_range > 0.0 ? grid.max_range : radar.max_range;
  const double du = grid.sine_spacing > 0.0 ? grid.sine_spacing : 1.0 / radar.num_virtual();
  const int nu = static_cast<int>(std::floor(grid.max_sine / du + 1e-9));
  std::vector<double> r;
  for (double x = grid.min_range; x <= max_range + 1e-9; x += grid.range_spacing) r.push_back(x);
  if (r.empty()) throw ConfigError("tracker: birth grid is empty");
  ranges = Eigen::Map<const RVec>(r.data(), static_cast<Eigen::Index>(r.size()));
  sines.resize(2 * nu + 1);
  for (int j = -nu; j <= nu; ++j) sines[j + nu] = j * du;
}

std::vector<Vec2> birth_grid_points(const BirthGrid& grid, const RadarConfig& radar) {
  RVec ranges, sines;
  birth_grid_axes(grid, radar, ranges, sines);
  std::vector<Vec2> out;
  for (double r : ranges)
    for (double u : sines) out.emplace_back(r * u, r * std::sqrt(1.0 - u * u));
  return out;
}

namespace {

Mat4 birth_covariance(const Vec2& p, const BirthGrid& grid, double sine_spacing) {
  const double r = p.norm();
  const double u = p.x() / r, cu = p.y() / r;
  const Vec2 radial(u, cu), tangential(cu, -u);
  const double var_r = grid.range_spacing * grid.range_spacing / 12.0;
  const double dtheta = sine_spacing / cu;
  const double var_t = r * r * dtheta * dtheta / 12.0;
  Mat4 cov = Mat4::Zero();
  cov.topLeftCorner<2, 2>() = var_r * radial * radial.transpose() + var_t * tangential * tangential.transpose();
  cov(2, 2) = cov(3, 3) = grid.velocity_std * grid.velocity_std;
  return cov;
}

}  // namespace

struct VmpTracker::Frame {
  const Snapshot* snapshot = nullptr;
  SignalSpace space;
  CVec weighted_data;
  std::vector<int> active;  // indices into tracks_
  std::vector<GaussianBelief> states;
  RVec xi, prev_xi;
  ReflectivityBelief alpha;
  std::vector<CVec> weighted_steering;

  Frame(const SteeringModel& model, const Snapshot& s)
      : snapshot(&s), space(model, s.noise_precision), weighted_data(space.weighted(s.data)) {}
};

VmpTracker::VmpTracker(const RadarConfig& radar, TrackerConfig config)
    : radar_(radar), config_(std::move(config)), model_(radar), motion_(radar.frame_interval()) {
  config_.validate();
  grid_ = birth_grid_points(config_.birth_grid, radar_);
  birth_grid_axes(config_.birth_grid, radar_, grid_ranges_, grid_sines_);
  grid_kernels_ = SignalSpace::range_kernels(model_, grid_ranges_);
  const RVec& bv = model_.sine_phase();
  grid_phases_.resize(model_.num_channels(), grid_sines_.size());
  for (Eigen::Index j = 0; j < grid_sines_.size(); ++j)
    for (int v = 0; v < model_.num_channels(); ++v) grid_phases_(v, j) = std::polar(1.0, -bv[v] * grid_sines_[j]);
  grid_prior_.resize(grid_.size());
  for (size_t g = 0; g < grid_.size(); ++g) grid_prior_[g] = reflectivity_prior(grid_[g]);
}

double VmpTracker::reflectivity_prior(const Vec2& position) const {
  if (!config_.range_scaled_prior) return config_.prior_reflectivity_precision;
  const double r = std::max(position.norm(), 1e-3);
  const double scale = radar_.tx_amplitude * radar_.antenna_gain * radar_.wavelength() /
                       (std::pow(4.0 * kPi, 1.5) * r * r);
  return config_.prior_reflectivity_precision / (scale * scale);
}

std::vector<Estimate> VmpTracker::step(const Snapshot& snapshot) {
  if (snapshot.data.size() != model_.length() || snapshot.noise_precision.size() != model_.length())
    throw std::invalid_argument("VmpTracker::step: snapshot length does not match the radar configuration");
  if (started_ && snapshot.step != step_ + 1)
    throw std::invalid_argument("VmpTracker::step: snapshot steps must be consecutive");
  started_ = true;
  step_ = snapshot.step;

  Frame frame(model_, snapshot);
  predict(frame);
  if (!frame.active.empty()) {
    refresh_alpha(frame);
    project_new_messages(frame);
    smooth(frame);
    joint_update(frame);
    prune(frame);
  }
  initialize_new_objects(frame);
  store(frame);
  return estimates(step_);
}

void VmpTracker::predict(Frame& f) {
  for (int i = 0; i < static_cast<int>(tracks_.size()); ++i) {
    auto& t = tracks_[i];
    if (t.pruned) continue;
    const TrackStep& last = t.history.back();
    TrackStep next;
    next.step = step_;
    next.belief = fuse_gaussian_messages({kinematic_message(last.belief, Direction::kForward, motion_, t.noise)});
    next.existence = last.existence;
    next.data = GaussianMessage::uninformative();
    t.history.push_back(next);
    f.active.push_back(i);
  }
  const int k = static_cast<int>(f.active.size());
  f.xi.resize(k);
  f.prev_xi.resize(k);
  for (int a = 0; a < k; ++a) {
    const auto& h = tracks_[f.active[a]].history;
    f.states.push_back(h.back().belief);
    f.xi[a] = h.back().existence;
    f.prev_xi[a] = h[h.size() - 2].existence;
  }
}

void VmpTracker::refresh_alpha(Frame& f) {
  const int k = static_cast<int>(f.active.size());
  RVec prior(k);
  for (int a = 0; a < k; ++a) prior[a] = reflectivity_prior(f.states[a].mean.head<2>());
  const auto problem = ReflectivityProblem::build(f.space, f.weighted_data, f.states, prior);
  f.alpha = update_alpha(problem, f.xi);
  f.weighted_steering.assign(k, CVec());
  CVec s;
  for (int a = 0; a < k; ++a) {
    const Vec2 p = f.states[a].mean.head<2>();
    model_.evaluate(p.norm(), p.x() / p.norm(), s);
    f.weighted_steering[a] = f.space.weighted(s);
  }
}

void VmpTracker::project_new_messages(Frame& f) {
  CVec target;
  double kappa = 0.0;
  for (int a = 0; a < static_cast<int>(f.active.size()); ++a) {
    data_message_target(a, f.weighted_data, f.weighted_steering, f.xi, f.alpha, target, kappa);
    const auto res = project_data_message(f.space, target, kappa, f.states[a].mean.head<2>(), config_.data_message);
    tracks_[f.active[a]].history.back().data = res.message;
  }
}

void VmpTracker::update_state(TrackState& t, int i) const {
  std::vector<GaussianMessage> msgs;
  msgs.reserve(4);
  if (i == 0) msgs.push_back(t.birth_prior);
  if (i > 0) msgs.push_back(kinematic_message(t.history[i - 1].belief, Direction::kForward, motion_, t.noise));
  if (i + 1 < static_cast<int>(t.history.size()))
    msgs.push_back(kinematic_message(t.history[i + 1].belief, Direction::kBackward, motion_, t.noise));
  if (t.history[i].data.informative()) msgs.push_back(t.history[i].data);
  t.history[i].belief = fuse_gaussian_messages(msgs);
}

void VmpTracker::smooth(Frame& f) {
  for (int idx : f.active) {
    auto& t = tracks_[idx];
    const int n = static_cast<int>(t.history.size());
    const int first = config_.smoothing_lag > 0 ? std::max(0, n - 1 - config_.smoothing_lag) : 0;
    for (int it = 0; it < config_.inner_iterations; ++it) {
      double change = 0.0;
      auto visit = [&](int i) {
        const Vec4 before = t.history[i].belief.mean;
        update_state(t, i);
        change = std::max(change, (t.history[i].belief.mean - before).cwiseAbs().maxCoeff());
      };
      if (it % 2 == 0)
        for (int i = n - 1; i >= first; --i) visit(i);
      else
        for (int i = first; i < n; ++i) visit(i);
      std::vector<GaussianBelief> beliefs;
      beliefs.reserve(n);
      for (const auto& s : t.history) beliefs.push_back(s.belief);
      t.noise = update_process_noise(beliefs, motion_, config_.process_noise);
      if (change <= config_.inner_tolerance) break;
    }
  }
  for (int a = 0; a < static_cast<int>(f.active.size()); ++a)
    f.states[a] = tracks_[f.active[a]].history.back().belief;
}

void VmpTracker::joint_update(Frame& f) {
  const int k = static_cast<int>(f.active.size());
  RVec prior(k);
  for (int a = 0; a < k; ++a) prior[a] = reflectivity_prior(f.states[a].mean.head<2>());
  const auto problem = ReflectivityProblem::build(f.space, f.weighted_data, f.states, prior);
  for (int s = 0; s < config_.joint_sweeps; ++s)
    f.alpha = vmptrack::joint_update(problem, f.xi, f.prev_xi, config_.existence);
}

void VmpTracker::prune(Frame& f) {
  std::vector<int> keep;
  for (int a = 0; a < static_cast<int>(f.active.size()); ++a) {
    auto& t = tracks_[f.active[a]];
    t.history.back().existence = f.xi[a];
    if (f.xi[a] < config_.prune_threshold) {
      t.history.back().existence = 0.0;
      t.pruned = true;
    } else {
      keep.push_back(a);
    }
  }
  if (keep.size() == f.active.size()) return;
  std::vector<int> active;
  std::vector<GaussianBelief> states;
  RVec xi(keep.size()), prev(keep.size());
  for (size_t j = 0; j < keep.size(); ++j) {
    active.push_back(f.active[keep[j]]);
    states.push_back(f.states[keep[j]]);
    xi[j] = f.xi[keep[j]];
    prev[j] = f.prev_xi[keep[j]];
  }
  f.active = std::move(active);
  f.states = std::move(states);
  f.xi = xi;
  f.prev_xi = prev;
  if (!f.active.empty()) {
    RVec prior(f.states.size());
    for (size_t a = 0; a < f.states.size(); ++a) prior[a] = reflectivity_prior(f.states[a].mean.head<2>());
    f.alpha = update_alpha(ReflectivityProblem::build(f.space, f.weighted_data, f.states, prior), f.xi);
  }
}

void VmpTracker::initialize_new_objects(Frame& f) {
  const double w0 = f.space.energy();
  const double du = config_.birth_grid.sine_spacing > 0.0 ? config_.birth_grid.sine_spacing
                                                          : 1.0 / radar_.num_virtual();
  const Eigen::Index ns = grid_sines_.size();
  const Eigen::Index n_grid = static_cast<Eigen::Index>(grid_.size());
  // <S(grid)|Lambda|Z>, sines x ranges
  const CMat corr = grid_phases_.transpose() * f.space.channel_correlation(grid_kernels_, f.weighted_data);
  const RVec& bv = model_.sine_phase();
  for (int b = 0; b < config_.max_births_per_step; ++b) {
    const int k = static_cast<int>(f.active.size());
    RVec prior(k);
    for (int a = 0; a < k; ++a) prior[a] = reflectivity_prior(f.states[a].mean.head<2>());
    const auto problem = ReflectivityProblem::build(f.space, f.weighted_data, f.states, prior);

    // f(Phi) for every grid candidate with xi = 1, through the Schur complement
    // of the existing block.
    CMat l_ec(k, n_grid);  // xi_a <S_a|Lambda|S(grid)>
    CMat sol;
    CVec mu_e;
    if (k > 0) {
      for (int a = 0; a < k; ++a) {
        const Vec2 pa = f.states[a].mean.head<2>();
        const double ra = pa.norm();
        CMat x = f.space.channel_cross(ra, grid_kernels_);
        for (int v = 0; v < model_.num_channels(); ++v) x.row(v) *= std::polar(1.0, -bv[v] * pa.x() / ra);
        const CMat c = grid_phases_.adjoint() * x;  // sines x ranges
        for (Eigen::Index g = 0; g < n_grid; ++g) l_ec(a, g) = f.xi[a] * c(g % ns, g / ns);
      }
      Eigen::LLT<CMat> llt(problem.precision(f.xi));
      mu_e = llt.solve(f.xi.cast<cdouble>().cwiseProduct(problem.projection()));
      sol = llt.solve(l_ec);
    }
    int best = -1;
    double best_f = -std::numeric_limits<double>::infinity();
    for (Eigen::Index g = 0; g < n_grid; ++g) {
      double s = w0 + grid_prior_[g];
      cdouble bt = corr(g % ns, g / ns);
      if (k > 0) {
        s -= l_ec.col(g).dot(sol.col(g)).real();
        bt -= l_ec.col(g).dot(mu_e);
      }
      if (!(s > 0.0)) continue;
      const double val = std::norm(bt) / s - std::log(s);
      if (val > best_f) {
        best_f = val;
        best = static_cast<int>(g);
      }
    }
    if (best < 0) break;

    const Vec2 cand = grid_[best];
    GaussianBelief point;
    point.mean << cand, 0.0, 0.0;
    point.covariance = Mat4::Zero();
    auto states = f.states;
    states.push_back(point);
    RVec prior_ext(k + 1), xi_ext(k + 1), prev_ext(k + 1);
    prior_ext << prior, reflectivity_prior(cand);
    xi_ext << f.xi, 1.0;
    prev_ext << f.prev_xi, 0.0;
    const auto ext = ReflectivityProblem::build(f.space, f.weighted_data, states, prior_ext);
    const double xi_c = update_xi(k, ext, xi_ext, 0.0, config_.existence);
    if (!(xi_c > config_.birth_threshold)) break;
    xi_ext[k] = xi_c;

    // Seed the state with the data message projected from the grid point.
    const auto alpha = update_alpha(ext, xi_ext);
    std::vector<CVec> ws;
    CVec s;
    for (const auto& st : states) {
      const Vec2 p = st.mean.head<2>();
      model_.evaluate(p.norm(), p.x() / p.norm(), s);
      ws.push_back(f.space.weighted(s));
    }
    CVec target;
    double kappa = 0.0;
    data_message_target(k, f.weighted_data, ws, xi_ext, alpha, target, kappa);
    const auto msg = project_data_message(f.space, target, kappa, cand, config_.data_message);

    TrackState t;
    t.id = next_id_++;
    t.birth_step = step_;
    t.birth_prior = GaussianMessage::from_covariance(point.mean, birth_covariance(cand, config_.birth_grid, du));
    t.noise = ProcessNoiseBelief::prior(config_.process_noise.zeta, config_.process_noise.chi);
    TrackStep st;
    st.step = step_;
    st.data = msg.message;
    st.existence = xi_c;
    t.history.push_back(st);
    update_state(t, 0);
    tracks_.push_back(t);

    f.active.push_back(static_cast<int>(tracks_.size()) - 1);
    f.states.push_back(tracks_.back().history.back().belief);
    f.xi = xi_ext;
    f.prev_xi = prev_ext;

    // Joint refresh over every PO including the new one.
    joint_update(f);
  }
}

void VmpTracker::store(Frame& f) {
  if (f.active.empty()) return;
  RVec prior(f.active.size());
  for (size_t a = 0; a < f.active.size(); ++a) prior[a] = reflectivity_prior(f.states[a].mean.head<2>());
  const CMat cov = f.alpha.covariance();
  for (size_t a = 0; a < f.active.size(); ++a) {
    auto& st = tracks_[f.active[a]].history.back();
    st.existence = f.xi[a];
    st.alpha_mean = f.alpha.mean[a];
    st.alpha_variance = cov(a, a).real();
    if (f.xi[a] < config_.prune_threshold) {
      st.existence = 0.0;
      tracks_[f.active[a]].pruned = true;
    }
  }
}

std::string VmpTracker::checkpoint_json() const {
  using nlohmann::json;
  json j;
  j["step"] = step_;
  j["tracks"] = json::array();
  for (const auto& t : tracks_) {
    json jt;
    jt["id"] = t.id;
    jt["birth_step"] = t.birth_step;
    jt["pruned"] = t.pruned;
    jt["noise_shape"] = std::vector<double>(t.noise.shape.data(), t.noise.shape.data() + 4);
    jt["noise_rate"] = std::vector<double>(t.noise.rate.data(), t.noise.rate.data() + 4);
    jt["history"] = json::array();
    for (const auto& s : t.history) {
      json js;
      js["step"] = s.step;
      js["mean"] = std::vector<double>(s.belief.mean.data(), s.belief.mean.data() + 4);
      js["covariance"] = std::vector<double>(s.belief.covariance.data(), s.belief.covariance.data() + 16);
      js["existence"] = s.existence;
      js["alpha"] = {s.alpha_mean.real(), s.alpha_mean.imag()};
      js["alpha_variance"] = s.alpha_variance;
      js["data_mean"] = std::vector<double>(s.data.mean.data(), s.data.mean.data() + 4);
      const Vec4 d = s.data.precision.diagonal();
      js["data_precision"] = std::vector<double>(d.data(), d.data() + 4);
      jt["history"].push_back(js);
    }
    j["tracks"].push_back(jt);
  }
  return j.dump(1);
}

}  // namespace vmptrack
