#include <algorithm>
#include <atomic>
#include <cstdio>

#include "bevdrive/world/world.hpp"

namespace bevdrive::world {

namespace {
std::atomic<int> g_clamp_warnings{0};

double clamp_warn(double v, double lo, double hi, const char* what) {
  if (v >= lo && v <= hi) return v;
  if (g_clamp_warnings.fetch_add(1) < 5) {
    std::fprintf(stderr, "[dynamics] %s=%g clamped to [%g, %g]\n", what, v, lo, hi);
  }
  return std::clamp(v, lo, hi);
}
}  // namespace

ActorState step_dynamics(const ActorState& state, const Action& action, double dt,
                         const VehicleParams& params) {
  double steer = clamp_warn(action.steer, -1.0, 1.0, "steer");
  const double throttle = clamp_warn(action.throttle, 0.0, 1.0, "throttle");
  const double brake = clamp_warn(action.brake, 0.0, 1.0, "brake");
  if (params.max_steer_rate > 0.0) {
    const double max_delta = params.max_steer_rate * dt;
    steer = std::clamp(steer, state.steer - max_delta, state.steer + max_delta);
  }

  ActorState next = state;
  const double v = state.lon_speed;

  // Pose advances with the pre-update speed; acceleration lands on the next step.
  next.pose.x = state.pose.x + v * std::cos(state.pose.heading) * dt;
  next.pose.y = state.pose.y + v * std::sin(state.pose.heading) * dt;
  const double wheel = steer * params.max_wheel_angle;
  next.pose.heading = wrap_angle(state.pose.heading + v / params.wheelbase * std::tan(wheel) * dt);

  const double accel = throttle * params.throttle_accel - brake * params.brake_decel;
  next.lon_speed = std::clamp(v + accel * dt, 0.0, params.max_speed);
  next.lat_speed = 0.0;  // kinematic model: no slip

  next.steer = steer;
  next.throttle = throttle;
  next.brake = brake;
  next.gear = 1;
  return next;
}

}  // namespace bevdrive::world
