#include "fields/engagement.hpp"

#include <algorithm>
#include <cmath>

namespace fields {

void UserFieldParams::validate() const {
  if (!std::isfinite(rest_radius) || rest_radius <= 0.0) throw DomainError("rest_radius must be > 0");
  if (!std::isfinite(k) || k < 0.0) throw DomainError("k must be >= 0");
  if (!std::isfinite(velocity_smoothing_alpha) || velocity_smoothing_alpha <= 0.0 ||
      velocity_smoothing_alpha > 1.0) {
    throw DomainError("velocity_smoothing_alpha must be in (0, 1]");
  }
  if (!std::isfinite(heading_speed_floor) || heading_speed_floor < 0.0) {
    throw DomainError("heading_speed_floor must be >= 0");
  }
}

void DeviceConfig::validate() const {
  if (!std::isfinite(radius) || radius <= 0.0) throw DomainError("device radius must be > 0");
  if (!std::isfinite(facing)) throw DomainError("device facing must be finite");
}

Vec2 smooth_velocity(Vec2 previous_smoothed, Vec2 raw, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("smoothing alpha must be in (0, 1]");
  if (alpha == 1.0) return raw;
  return raw * alpha + previous_smoothed * (1.0 - alpha);
}

double smoothing_alpha_for_rate(double alpha, double tick_rate) {
  if (!(tick_rate > 0.0) || !std::isfinite(tick_rate)) throw DomainError("tick rate must be > 0");
  if (tick_rate == kReferenceTickRate || alpha == 1.0) return alpha;
  return 1.0 - std::pow(1.0 - alpha, kReferenceTickRate / tick_rate);
}

ActorState update_actor(const ActorState* previous, Vec2 position, Vec2 raw_velocity,
                        const UserFieldParams& params, double tick_rate) {
  ActorState next;
  next.position = position;
  next.velocity = previous ? smooth_velocity(previous->velocity, raw_velocity,
                                             smoothing_alpha_for_rate(params.velocity_smoothing_alpha, tick_rate))
                           : raw_velocity;
  next.heading = previous ? previous->heading : 0.0;
  if (next.speed() >= params.heading_speed_floor && next.speed() > 0.0) {
    next.heading = normalize_angle(std::atan2(next.velocity.y, next.velocity.x));
  }
  return next;
}

FieldShape compute_user_field(const ActorState& actor, const UserFieldParams& params) {
  const double speed = actor.speed();
  if (speed == 0.0) return CircleField(actor.position, params.rest_radius);

  const EllipseAxes axes = ellipse_axes(speed, params.k, params.area_constant());
  const double heading = speed >= params.heading_speed_floor
                             ? std::atan2(actor.velocity.y, actor.velocity.x)
                             : actor.heading;
  const double focal = std::sqrt(std::max(0.0, axes.r_major * axes.r_major - axes.r_minor * axes.r_minor));
  const Vec2 center = actor.position + Vec2::unit(heading) * focal;
  return EllipseField(center, axes.r_major, axes.r_minor, heading);
}

FieldShape compute_device_field(const DeviceConfig& device) {
  if (device.directionality == Directionality::NonDirectional) {
    return CircleField(device.position, device.radius);
  }
  return HalfDiskField(device.position, device.radius, device.facing);
}

EngagementSample potential_interest(const ActorState& actor, const UserFieldParams& params,
                                    const DeviceConfig& device, double t, int n) {
  EngagementSample sample;
  sample.t = t;
  sample.user_field = compute_user_field(actor, params);
  sample.device_field = compute_device_field(device);
  sample.pi = iou(sample.user_field, sample.device_field, n);
  return sample;
}

}  // namespace fields
