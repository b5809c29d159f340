#include "fields/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fields/scenario_io.hpp"

namespace fields {

namespace {

std::string join(const std::vector<std::string>& errors) {
  std::string msg = "invalid scenario";
  for (const auto& e : errors) msg += "\n  - " + e;
  return msg;
}

template <typename F>
void collect(std::vector<std::string>& errors, const std::string& where, F&& check) {
  try {
    check();
  } catch (const std::exception& e) {
    errors.push_back(where + ": " + e.what());
  }
}

bool inside(const Arena& arena, Vec2 p) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= arena.width && p.y <= arena.height;
}

Vec2 client_velocity(const std::vector<Vec2>& history, double dt) {
  if (history.size() < 2) return {};
  Vec2 sum;
  for (std::size_t i = 1; i < history.size(); ++i) sum = sum + (history[i] - history[i - 1]);
  return sum * (1.0 / (dt * static_cast<double>(history.size() - 1)));
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> errors)
    : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

Trajectory Trajectory::from_waypoints(std::vector<Waypoint> waypoints) {
  std::vector<std::string> errors;
  if (waypoints.empty()) errors.emplace_back("trajectory needs at least one waypoint");
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    if (!std::isfinite(waypoints[i].t)) errors.push_back("waypoint " + std::to_string(i) + " time is not finite");
    if (i > 0 && !(waypoints[i].t > waypoints[i - 1].t)) {
      errors.push_back("waypoint times must be strictly increasing (waypoint " + std::to_string(i) + ")");
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  Trajectory traj;
  traj.waypoints_ = std::move(waypoints);
  return traj;
}

ActorState sample_trajectory(const Trajectory& traj, double t) {
  const auto& wps = traj.waypoints();
  ActorState s;
  if (wps.empty()) return s;
  if (t < wps.front().t) {
    s.position = wps.front().position;
    return s;
  }
  if (t >= wps.back().t) {
    s.position = wps.back().position;
    return s;
  }
  // First waypoint strictly after t; the segment [it-1, it] brackets t.
  const auto it = std::upper_bound(wps.begin(), wps.end(), t,
                                   [](double time, const Waypoint& w) { return time < w.t; });
  const Waypoint& a = *(it - 1);
  const Waypoint& b = *it;
  const double span = b.t - a.t;
  s.velocity = (b.position - a.position) * (1.0 / span);
  s.position = a.position + (b.position - a.position) * ((t - a.t) / span);
  if (s.velocity.norm() > 0.0) s.heading = normalize_angle(std::atan2(s.velocity.y, s.velocity.x));
  return s;
}

ActorState inject_noise(const ActorState& actor, const NoiseModel& model, NoiseRng& rng) {
  if (!model.enabled) return actor;
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double dr = gauss(rng) * model.range_sigma;
  const double dtheta = gauss(rng) * model.angle_sigma * kPi / 180.0;
  if (model.range_sigma == 0.0 && model.angle_sigma == 0.0) return actor;

  const double range = actor.position.norm();
  const double bearing = range > 0.0 ? std::atan2(actor.position.y, actor.position.x) : 0.0;
  ActorState out = actor;
  out.position = Vec2::unit(bearing + dtheta) * (range + dr);
  return out;
}

std::vector<std::string> ScenarioConfig::validate() const {
  std::vector<std::string> errors;
  if (!std::isfinite(arena.width) || !std::isfinite(arena.height) || arena.width <= 0.0 || arena.height <= 0.0) {
    errors.emplace_back("arena dimensions must be > 0");
  }
  if (!std::isfinite(tick_rate) || tick_rate <= 0.0) errors.emplace_back("tick_rate must be > 0");
  if (!std::isfinite(duration) || duration < 0.0) errors.emplace_back("duration must be >= 0");
  if (polygon_n < kMinPolygonVertices) {
    errors.push_back("polygon_n must be >= " + std::to_string(kMinPolygonVertices));
  }
  if (!std::isfinite(noise.range_sigma) || noise.range_sigma < 0.0 || !std::isfinite(noise.angle_sigma) ||
      noise.angle_sigma < 0.0) {
    errors.emplace_back("noise sigmas must be >= 0");
  }

  std::set<std::string> device_names;
  for (const auto& d : devices) {
    if (d.name.empty()) errors.emplace_back("device name must not be empty");
    if (!device_names.insert(d.name).second) errors.push_back("duplicate device name \"" + d.name + "\"");
    collect(errors, "device \"" + d.name + "\"", [&] { d.config.validate(); });
  }
  std::set<std::string> actor_names;
  for (const auto& a : actors) {
    if (a.name.empty()) errors.emplace_back("actor name must not be empty");
    if (!actor_names.insert(a.name).second) errors.push_back("duplicate actor name \"" + a.name + "\"");
    collect(errors, "actor \"" + a.name + "\"", [&] { a.params.validate(); });
    if (a.trajectory.waypoints().empty()) {
      errors.push_back("actor \"" + a.name + "\": trajectory needs at least one waypoint");
    }
    for (const auto& w : a.trajectory.waypoints()) {
      if (!inside(arena, w.position)) {
        errors.push_back("actor \"" + a.name + "\": waypoint at t=" + std::to_string(w.t) + " lies outside the arena");
      }
    }
    if (!std::isfinite(a.initial_heading)) errors.push_back("actor \"" + a.name + "\": initial_heading must be finite");
  }
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    const auto& b = bindings[i];
    const std::string where = "binding " + std::to_string(i);
    if (!actor_names.contains(b.actor)) errors.push_back(where + ": unknown actor \"" + b.actor + "\"");
    if (!device_names.contains(b.device)) errors.push_back(where + ": unknown device \"" + b.device + "\"");
    collect(errors, where, [&] { std::visit([](const auto& c) { c.validate(); }, b.pattern); });
  }
  return errors;
}

std::size_t ScenarioConfig::actor_index(const std::string& name) const {
  for (std::size_t i = 0; i < actors.size(); ++i) {
    if (actors[i].name == name) return i;
  }
  throw ValidationError({"unknown actor \"" + name + "\""});
}

std::size_t ScenarioConfig::device_index(const std::string& name) const {
  for (std::size_t i = 0; i < devices.size(); ++i) {
    if (devices[i].name == name) return i;
  }
  throw ValidationError({"unknown device \"" + name + "\""});
}

std::uint64_t ScenarioConfig::tick_count() const {
  return static_cast<std::uint64_t>(std::floor(duration * tick_rate + 1e-9)) + 1;
}

std::vector<PatternEvent> EventTrace::events() const {
  std::vector<PatternEvent> out;
  for (const auto& r : records) out.insert(out.end(), r.events.begin(), r.events.end());
  return out;
}

EngineState make_engine_state(const ScenarioConfig& cfg) {
  EngineState s;
  s.actors.resize(cfg.actors.size());
  s.machines.reserve(cfg.bindings.size());
  for (const auto& b : cfg.bindings) s.machines.push_back(reset(b.pattern));
  s.rng.seed(cfg.noise.seed);
  return s;
}

TickOutput advance(const ScenarioConfig& cfg, EngineState& state) {
  TickOutput out;
  out.tick = state.tick;
  out.t = static_cast<double>(state.tick) / cfg.tick_rate;
  const double dt = 1.0 / cfg.tick_rate;

  out.actors.reserve(cfg.actors.size());
  for (std::size_t i = 0; i < cfg.actors.size(); ++i) {
    const ActorSpec& spec = cfg.actors[i];
    ActorRuntime& rt = state.actors[i];

    ActorState raw;
    if (rt.client_driven && rt.client_position) {
      rt.client_history.push_back(*rt.client_position);
      if (rt.client_history.size() > kClientVelocityWindow + 1) rt.client_history.erase(rt.client_history.begin());
      raw.position = *rt.client_position;
      raw.velocity = client_velocity(rt.client_history, dt);
    } else {
      raw = sample_trajectory(spec.trajectory, out.t);
    }
    raw = inject_noise(raw, cfg.noise, state.rng);

    const bool first = !rt.has_state;
    rt.state = update_actor(first ? nullptr : &rt.state, raw.position, raw.velocity, spec.params, cfg.tick_rate);
    if (first && rt.state.speed() < spec.params.heading_speed_floor) {
      rt.state.heading = normalize_angle(spec.initial_heading);
    }
    rt.has_state = true;
    out.actors.push_back(rt.state);
  }

  out.bindings.reserve(cfg.bindings.size());
  for (std::size_t b = 0; b < cfg.bindings.size(); ++b) {
    const Binding& binding = cfg.bindings[b];
    const std::size_t ai = cfg.actor_index(binding.actor);
    const std::size_t di = cfg.device_index(binding.device);
    BindingOutput bo;
    bo.sample = potential_interest(state.actors[ai].state, cfg.actors[ai].params, cfg.devices[di].config, out.t,
                                   cfg.polygon_n);
    StepResult step = pattern_step(std::move(state.machines[b]), bo.sample.pi, out.t, binding.pattern);
    state.machines[b] = step.state;
    bo.state = std::move(step.state);
    bo.events = std::move(step.events);
    out.bindings.push_back(std::move(bo));
  }
  ++state.tick;
  return out;
}

EventTrace run_scenario(const ScenarioConfig& cfg) {
  if (auto errors = cfg.validate(); !errors.empty()) throw ValidationError(std::move(errors));

  EventTrace trace;
  trace.meta.scenario = cfg.name;
  trace.meta.config_hash = config_hash(cfg);
  trace.meta.seed = cfg.noise.seed;

  EngineState state = make_engine_state(cfg);
  const std::uint64_t ticks = cfg.tick_count();
  trace.records.reserve(ticks * cfg.bindings.size());
  for (std::uint64_t i = 0; i < ticks; ++i) {
    TickOutput tick = advance(cfg, state);
    for (std::size_t b = 0; b < cfg.bindings.size(); ++b) {
      auto& bo = tick.bindings[b];
      trace.records.push_back({tick.tick, tick.t, cfg.bindings[b].actor, cfg.bindings[b].device, bo.sample.pi,
                               std::move(bo.state), std::move(bo.events)});
    }
  }
  return trace;
}

}  // namespace fields
