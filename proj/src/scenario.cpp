#include "vmptrack/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace vmptrack {

using nlohmann::json;

void GroundTruthTrack::validate() const {
  if (birth_step > death_step) throw ScenarioError("track: birth_step after death_step");
  if (!(mean_rcs > 0.0)) throw ScenarioError("track: mean_rcs must be positive");
  if (!position.allFinite() || !velocity.allFinite()) throw ScenarioError("track: non-finite position or velocity");
  for (const auto& s : segments) {
    if (s.steps <= 0) throw ScenarioError("track: motion segment with zero duration");
    if (s.target_velocity && !s.target_velocity->allFinite())
      throw ScenarioError("track: non-finite target velocity");
  }
}

std::vector<Vec4> GroundTruthTrack::states(double dt) const {
  validate();
  std::vector<Vec4> out;
  out.reserve(alive_steps());
  Vec2 p = position, v = velocity;
  auto push = [&] { out.push_back((Vec4() << p, v).finished()); };
  push();
  auto advance = [&](const Vec2& dv) {
    const Vec2 nv = v + dv;
    p += 0.5 * dt * (v + nv);
    v = nv;
    push();
  };
  for (const auto& seg : segments) {
    const Vec2 dv = seg.target_velocity ? Vec2((*seg.target_velocity - v) / seg.steps) : Vec2::Zero();
    for (int i = 0; i < seg.steps && static_cast<int>(out.size()) < alive_steps(); ++i) advance(dv);
  }
  while (static_cast<int>(out.size()) < alive_steps()) advance(Vec2::Zero());
  return out;
}

void Scenario::validate() const {
  radar.validate();
  if (num_steps < 1) throw ScenarioError("scenario: num_steps must be positive");
  const double dt = radar.frame_interval();
  for (size_t l = 0; l < tracks.size(); ++l) {
    const auto& t = tracks[l];
    const auto st = t.states(dt);
    for (size_t i = 0; i < st.size(); ++i) {
      const int step = t.birth_step + static_cast<int>(i);
      if (step < first_step || step > last_step()) continue;
      const Vec2 p = st[i].head<2>();
      if (!(p.y() > 0.0) || p.norm() > radar.max_range)
        throw ScenarioError("scenario: track " + std::to_string(l) + " leaves the field of view at step " +
                            std::to_string(step));
    }
  }
}

std::vector<std::vector<TruthObject>> Scenario::truth() const {
  std::vector<std::vector<TruthObject>> out(num_steps);
  const double dt = radar.frame_interval();
  for (size_t l = 0; l < tracks.size(); ++l) {
    const auto& t = tracks[l];
    const auto st = t.states(dt);
    for (size_t i = 0; i < st.size(); ++i) {
      const int idx = t.birth_step + static_cast<int>(i) - first_step;
      if (idx >= 0 && idx < num_steps) out[idx].push_back({static_cast<int>(l), st[i]});
    }
  }
  return out;
}

Scenario reference_scenario() {
  Scenario sc;
  const double c = std::cos(kPi / 4.0), s = std::sin(kPi / 4.0);
  GroundTruthTrack t1;
  t1.birth_step = 1;
  t1.death_step = 100;
  t1.position = {10.0, 10.0};
  t1.velocity = {7.0 * c, 7.0 * s};

  GroundTruthTrack t2;
  t2.birth_step = 1;
  t2.death_step = 100;
  t2.position = {10.0, 31.0};
  t2.velocity = {7.0 * c, -7.0 * s};
  t2.segments = {{20, std::nullopt}, {80, Vec2(0.0, 7.0)}};

  GroundTruthTrack t3;
  t3.birth_step = 50;
  t3.death_step = 95;
  t3.position = {15.0, 20.0};
  t3.velocity = {7.0 * c, -7.0 * s};
  t3.segments = {{16, std::nullopt}, {14, Vec2(-4.33, 2.5)}, {16, std::nullopt}};

  sc.tracks = {t1, t2, t3};
  sc.first_step = 1;
  sc.num_steps = 100;
  sc.seed = 1;
  return sc;
}

namespace {

Vec2 vec2_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError(std::string("scenario: ") + what + " must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json vec2_to(const Vec2& v) { return json::array({v.x(), v.y()}); }

}  // namespace

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario: invalid JSON: ") + e.what());
  }
  Scenario sc;
  try {
    if (j.contains("radar")) {
      const auto& r = j.at("radar");
      auto& c = sc.radar;
      c.num_tx = r.value("num_tx", c.num_tx);
      c.num_rx = r.value("num_rx", c.num_rx);
      c.prf = r.value("prf", c.prf);
      c.carrier_frequency = r.value("carrier_frequency", c.carrier_frequency);
      c.bandwidth = r.value("bandwidth", c.bandwidth);
      c.pulse_duration = r.value("pulse_duration", c.pulse_duration);
      c.sample_rate = r.value("sample_rate", c.sample_rate);
      c.max_range = r.value("max_range", c.max_range);
      c.tx_amplitude = r.value("tx_amplitude", c.tx_amplitude);
      c.antenna_gain = r.value("antenna_gain", c.antenna_gain);
      c.noise_variance = r.contains("noise_variance")
                             ? r.at("noise_variance").get<double>()
                             : thermal_noise_variance(c.bandwidth, r.value("temperature", 290.0));
    }
    sc.first_step = j.value("first_step", sc.first_step);
    sc.num_steps = j.value("num_steps", sc.num_steps);
    sc.seed = j.value("seed", sc.seed);
    sc.tracks.clear();
    for (const auto& t : j.at("tracks")) {
      GroundTruthTrack g;
      g.birth_step = t.at("birth_step").get<int>();
      g.death_step = t.at("death_step").get<int>();
      g.position = vec2_from(t.at("position"), "position");
      g.velocity = vec2_from(t.at("velocity"), "velocity");
      g.mean_rcs = t.value("mean_rcs", g.mean_rcs);
      if (t.contains("segments")) {
        for (const auto& s : t.at("segments")) {
          MotionSegment m;
          m.steps = s.at("steps").get<int>();
          if (s.contains("target_velocity")) m.target_velocity = vec2_from(s.at("target_velocity"), "target_velocity");
          g.segments.push_back(m);
        }
      }
      sc.tracks.push_back(g);
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario: ") + e.what());
  }
  try {
    sc.validate();
  } catch (const ConfigError& e) {
    throw ScenarioError(e.what());
  }
  return sc;
}

std::string scenario_to_json(const Scenario& sc) {
  const auto& c = sc.radar;
  json j;
  j["radar"] = {{"num_tx", c.num_tx},
                {"num_rx", c.num_rx},
                {"prf", c.prf},
                {"carrier_frequency", c.carrier_frequency},
                {"bandwidth", c.bandwidth},
                {"pulse_duration", c.pulse_duration},
                {"sample_rate", c.sample_rate},
                {"max_range", c.max_range},
                {"noise_variance", c.noise_variance},
                {"tx_amplitude", c.tx_amplitude},
                {"antenna_gain", c.antenna_gain}};
  j["first_step"] = sc.first_step;
  j["num_steps"] = sc.num_steps;
  j["seed"] = sc.seed;
  j["tracks"] = json::array();
  for (const auto& t : sc.tracks) {
    json jt = {{"birth_step", t.birth_step},
               {"death_step", t.death_step},
               {"position", vec2_to(t.position)},
               {"velocity", vec2_to(t.velocity)},
               {"mean_rcs", t.mean_rcs},
               {"segments", json::array()}};
    for (const auto& s : t.segments) {
      json js = {{"steps", s.steps}};
      if (s.target_velocity) js["target_velocity"] = vec2_to(*s.target_velocity);
      jt["segments"].push_back(js);
    }
    j["tracks"].push_back(jt);
  }
  return j.dump(2);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

}  // namespace vmptrack
