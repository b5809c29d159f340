#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fields/engagement.hpp"
#include "fields/geometry.hpp"
#include "fields/patterns.hpp"

namespace fields {

/// Collected, human-readable problems with a scenario document or config.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct Waypoint {
  double t = 0.0;
  Vec2 position;
};

/// Piecewise-linear path through strictly time-ordered waypoints.
class Trajectory {
 public:
  Trajectory() = default;
  /// Throws ValidationError on an empty list or non-increasing times.
  static Trajectory from_waypoints(std::vector<Waypoint> waypoints);

  const std::vector<Waypoint>& waypoints() const { return waypoints_; }

 private:
  std::vector<Waypoint> waypoints_;
};

/// Interpolated position with the exact segment slope as velocity. Clamped
/// with zero velocity outside the waypoint time range.
ActorState sample_trajectory(const Trajectory& traj, double t);

/// Tracker error model. Sigmas are the standard deviations of zero-mean
/// Gaussian range (meters) and bearing (degrees) errors about the arena origin.
struct NoiseModel {
  double range_sigma = 0.14;
  double angle_sigma = 7.4;
  std::uint64_t seed = 1;
  bool enabled = false;
};

using NoiseRng = std::mt19937_64;

/// Perturbs the position in polar coordinates. Always consumes two draws
/// when enabled so the stream does not depend on the sigmas.
ActorState inject_noise(const ActorState& actor, const NoiseModel& model, NoiseRng& rng);

struct Arena {
  double width = 5.0;
  double height = 5.0;
};

struct NamedDevice {
  std::string name;
  DeviceConfig config;
};

struct ActorSpec {
  std::string name;
  Trajectory trajectory;
  UserFieldParams params;
  double initial_heading = 0.0;
};

struct Binding {
  std::string actor;
  std::string device;
  PatternConfig pattern;
};

struct ScenarioConfig {
  std::string name = "scenario";
  Arena arena;
  std::vector<NamedDevice> devices;
  std::vector<ActorSpec> actors;
  std::vector<Binding> bindings;
  double tick_rate = 20.0;
  double duration = 10.0;
  NoiseModel noise;
  int polygon_n = kEngineVertices;

  /// Every violated invariant, empty when valid.
  std::vector<std::string> validate() const;

  std::size_t actor_index(const std::string& name) const;
  std::size_t device_index(const std::string& name) const;
  std::uint64_t tick_count() const;
};

struct TraceRecord {
  std::uint64_t tick = 0;
  double t = 0.0;
  std::string actor;
  std::string device;
  double pi = 0.0;
  PatternState state;
  std::vector<PatternEvent> events;
};

struct TraceMeta {
  std::string scenario;
  std::string config_hash;
  std::uint64_t seed = 0;
};

struct EventTrace {
  TraceMeta meta;
  std::vector<TraceRecord> records;

  /// All events in emission order.
  std::vector<PatternEvent> events() const;
};

// Engine state shared by offline runs and live sessions.

struct ActorRuntime {
  ActorState state;
  bool has_state = false;
  bool client_driven = false;
  std::optional<Vec2> client_position;
  std::vector<Vec2> client_history;  // positions at the most recent ticks, oldest first
};

struct EngineState {
  std::uint64_t tick = 0;
  std::vector<ActorRuntime> actors;
  std::vector<PatternState> machines;
  NoiseRng rng;
};

struct BindingOutput {
  EngagementSample sample;
  PatternState state;
  std::vector<PatternEvent> events;
};

struct TickOutput {
  std::uint64_t tick = 0;
  double t = 0.0;
  std::vector<ActorState> actors;
  std::vector<BindingOutput> bindings;
};

/// Client-driven velocity is the mean of up to this many finite differences.
inline constexpr std::size_t kClientVelocityWindow = 3;

EngineState make_engine_state(const ScenarioConfig& cfg);

/// Advances one tick: sample or take client poses, inject noise, smooth,
/// compute pi per binding and step its pattern machine.
TickOutput advance(const ScenarioConfig& cfg, EngineState& state);

/// Throws ValidationError before tick 0 when `cfg` is invalid.
EventTrace run_scenario(const ScenarioConfig& cfg);

}  // namespace fields
