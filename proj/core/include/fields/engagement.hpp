#pragma once

#include "fields/geometry.hpp"

namespace fields {

/// Tracked pose of one user. `heading` is the last motion direction seen
/// above the heading speed floor.
struct ActorState {
  Vec2 position;
  Vec2 velocity;
  double heading = 0.0;

  double speed() const { return velocity.norm(); }
};

struct UserFieldParams {
  double rest_radius = 1.2;
  double k = 0.25;
  double velocity_smoothing_alpha = 0.4;
  double heading_speed_floor = 0.05;

  /// Throws DomainError when out of range.
  void validate() const;
  double area_constant() const { return rest_radius * rest_radius; }
};

enum class Directionality { Directional, NonDirectional };

struct DeviceConfig {
  Vec2 position;
  double facing = 0.0;
  double radius = 1.0;
  Directionality directionality = Directionality::Directional;

  void validate() const;
};

struct EngagementSample {
  double t = 0.0;
  double pi = 0.0;
  FieldShape user_field;
  FieldShape device_field;
};

/// Exponential smoothing: alpha * raw + (1 - alpha) * previous.
Vec2 smooth_velocity(Vec2 previous_smoothed, Vec2 raw, double alpha);

/// Smoothing factors are specified at this update rate.
inline constexpr double kReferenceTickRate = 20.0;

/// Per-tick factor giving the same time constant as `alpha` does at the
/// reference rate: 1 - (1 - alpha)^(reference / tick_rate).
double smoothing_alpha_for_rate(double alpha, double tick_rate);

/// Folds a raw tracker sample into the running actor state: smooths the
/// velocity and refreshes the heading when the smoothed speed clears the floor.
/// With no previous state the filter starts at the raw velocity.
ActorState update_actor(const ActorState* previous, Vec2 position, Vec2 raw_velocity,
                        const UserFieldParams& params, double tick_rate = kReferenceTickRate);

/// Constant-area ellipse with the actor at its rear focus, or the rest circle
/// when the actor is not moving.
FieldShape compute_user_field(const ActorState& actor, const UserFieldParams& params);

FieldShape compute_device_field(const DeviceConfig& device);

EngagementSample potential_interest(const ActorState& actor, const UserFieldParams& params,
                                    const DeviceConfig& device, double t,
                                    int n = kEngineVertices);

}  // namespace fields
