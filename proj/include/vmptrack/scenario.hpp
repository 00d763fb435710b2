#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vmptrack/radar_config.hpp"
#include "vmptrack/types.hpp"

namespace vmptrack {

// Malformed scenario description.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A piece of motion lasting `steps` frame transitions.  Without a target the
// velocity is held; with one it changes linearly to the target over the segment
// (positions integrate the linear velocity exactly).
struct MotionSegment {
  int steps = 0;
  std::optional<Vec2> target_velocity;
};

// One ground-truth object.  It is at `position` with `velocity` at birth_step,
// follows the segments in order and keeps its last velocity after them.
struct GroundTruthTrack {
  int birth_step = 1;
  int death_step = 1;  // last step at which the object is present
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  std::vector<MotionSegment> segments;
  double mean_rcs = 0.05;  // [m^2]

  bool alive(int step) const { return step >= birth_step && step <= death_step; }
  int alive_steps() const { return death_step - birth_step + 1; }
  void validate() const;
  // (x, y, vx, vy) for every alive step, birth first.
  std::vector<Vec4> states(double dt) const;
};

struct TruthObject {
  int track = 0;  // index into Scenario::tracks
  Vec4 state;
};

struct Scenario {
  RadarConfig radar;
  std::vector<GroundTruthTrack> tracks;
  int first_step = 1;
  int num_steps = 100;
  std::uint64_t seed = 1;

  int last_step() const { return first_step + num_steps - 1; }
  void validate() const;
  // Alive objects per frame; element i belongs to step first_step + i.
  std::vector<std::vector<TruthObject>> truth() const;
};

// Three-track crossing scene at the default radar parameters.
Scenario reference_scenario();

Scenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& scenario);
// Throws ScenarioError if the file cannot be read or parsed.
Scenario load_scenario(const std::string& path);

}  // namespace vmptrack
