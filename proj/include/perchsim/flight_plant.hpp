// Reduced-order flapping-wing flight dynamics.
//
// Five degrees of freedom: translation in X (forward), Y (lateral), Z (up)
// plus pitch and yaw. Roll is not modelled. The flapping wings produce a
// force that grows with the square of the flap frequency and points along
// the stroke plane, tilted `flap_tilt_deg` above the body axis. The stroke
// also forces a heave mode, a damped vertical oscillation about the mean
// flight path that the aerodynamics do not see. The wing acts as a lifting
// surface with a quadratic polar. The elevator produces a download on the
// tail before the pitch-up it commands takes effect, which makes altitude
// non-minimum phase in the elevator.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "perchsim/claw.hpp"
#include "perchsim/common.hpp"
#include "perchsim/ode.hpp"

namespace perchsim::flight {

struct RobotParams {
  double mass_kg = 0.700;
  double wingspan_m = 1.5;
  double wing_area_m2 = 0.700 * kGravity / 16.0;  // 16 N/m^2 at full mass
  double max_flap_hz = 5.5;
  double pitch_inertia = 0.010;  // kg*m^2
  double yaw_inertia = 0.015;
  // Tail moments per degree at the reference dynamic-pressure factor.
  double elevator_nm_per_deg = 0.0030;
  double rudder_nm_per_deg = 0.0020;
  double tail_download_n_per_deg = 0.025;
  double pitch_damping = 0.25;     // N*m*s/rad
  double pitch_stiffness = 0.050;  // N*m/rad restoring towards zero angle of attack
  double yaw_damping = 0.050;
  double weathervane = 0.040;      // N*m/rad restoring yaw towards the velocity heading
  double heading_time_constant_s = 0.5;  // velocity heading lag behind yaw
  // Lifting surface: CL = cl0 + cl_amp * sin(2 alpha); CD = cd0 + k * CL^2.
  double cl0 = 0.6;
  double cl_amp = 1.2;
  double cd0 = 0.2;
  double induced_k = 0.2;
  // Flapping.
  double flap_tilt_deg = 40.0;
  double max_flap_force_n = 5.07;
  double flap_oscillation_gain = 7.9;  // m/s^2 per Hz
  double heave_frequency_rad_s = 12.0;
  double heave_damping_ratio = 0.7;
  double reference_speed_mps = 3.0;
  double wash_speed_mps = 1.5;  // slipstream over the tail at full flap
  // Leg servo.
  double servo_rate_dps = 600.0;
  double servo_lag_s = 0.030;
};

/// Robot without the leg and claw appendage.
inline RobotParams without_appendage(RobotParams p = {}) {
  p.mass_kg = 0.520;
  return p;
}

struct RobotState {
  double x = 0.0, y = 0.0, z = 0.0;     // m
  double vx = 0.0, vy = 0.0, vz = 0.0;  // m/s
  double pitch_deg = 0.0, yaw_deg = 0.0;
  double pitch_rate_dps = 0.0, yaw_rate_dps = 0.0;
  double flap_phase = 0.0;  // rad
  double heave_m = 0.0;     // oscillation part of z
  double heave_rate_mps = 0.0;  // oscillation part of vz
  double beta_deg = 90.0;   // leg angle, 0 vertical down, 90 horizontal
  claw::ClawState claw{};

  double airspeed() const {
    const double w = vz - heave_rate_mps;
    return std::sqrt(vx * vx + vy * vy + w * w);
  }
};

struct ControlCommand {
  double delta_e_deg = 0.0;
  double delta_r_deg = 0.0;
  double flap_hz = 0.0;
  double beta_cmd_deg = 90.0;
};

/// External perturbation held over one step.
struct Disturbance {
  Vec3 force_n{};
  double pitch_moment_nm = 0.0;
  double yaw_moment_nm = 0.0;
};

struct Thrust {
  double force_n = 0.0;
  bool clamped = false;
};

/// Flap force magnitude. Frequencies outside [0, max_flap] are clamped and
/// flagged.
inline Thrust thrust_model(double flap_hz, const RobotParams& p) {
  Thrust t;
  double f = flap_hz;
  if (f < 0.0 || f > p.max_flap_hz) {
    f = std::clamp(f, 0.0, p.max_flap_hz);
    t.clamped = true;
  }
  const double r = f / p.max_flap_hz;
  t.force_n = p.max_flap_force_n * r * r;
  return t;
}

struct Coefficients {
  double cl = 0.0;
  double cd = 0.0;
};

inline Coefficients polar(double alpha_rad, const RobotParams& p) {
  const double a = std::clamp(alpha_rad, -std::numbers::pi / 2, std::numbers::pi / 2);
  Coefficients c;
  c.cl = p.cl0 + p.cl_amp * std::sin(2.0 * a);
  c.cd = p.cd0 + p.induced_k * c.cl * c.cl;
  return c;
}

struct Trim {
  double speed_mps = 0.0;
  double flap_hz = 0.0;
};

/// Steady level flight at the given body pitch; nullopt when it needs more
/// flap force than the powertrain delivers.
inline std::optional<Trim> trim_state(double pitch_deg, const RobotParams& p) {
  if (pitch_deg < 0.0 || pitch_deg > 60.0) throw DomainError("trim pitch outside [0, 60] deg");
  const double a = deg2rad(pitch_deg);
  const double tilt = a + deg2rad(p.flap_tilt_deg);
  const Coefficients c = polar(a, p);
  const double weight = p.mass_kg * kGravity;
  // Vertical: qS*CL + F sin(tilt) = W; horizontal: F cos(tilt) = qS*CD.
  const double qs = weight / (c.cl + c.cd * std::tan(tilt));
  if (!(qs > 0.0) || std::cos(tilt) <= 0.0) return std::nullopt;
  const double force = qs * c.cd / std::cos(tilt);
  if (force > p.max_flap_force_n * (1.0 + 1e-12)) return std::nullopt;
  Trim t;
  t.speed_mps = std::sqrt(2.0 * qs / (kAirDensity * p.wing_area_m2));
  t.flap_hz = p.max_flap_hz * std::sqrt(force / p.max_flap_force_n);
  return t;
}

namespace detail {

// X, Y, Z, VX, VY, VZ, pitch, pitch rate, yaw, yaw rate, leg angle (rad),
// heave, heave rate. Z and VZ include the heave.
using State = StateVec<13>;

inline State pack(const RobotState& s) {
  return {s.x, s.y, s.z, s.vx, s.vy, s.vz, deg2rad(s.pitch_deg), deg2rad(s.pitch_rate_dps), deg2rad(s.yaw_deg),
          deg2rad(s.yaw_rate_dps), deg2rad(s.beta_deg), s.heave_m, s.heave_rate_mps};
}

/// Tail dynamic-pressure factor: free stream plus flap wash, relative to the
/// reference speed.
inline double tail_factor(double airspeed, double flap_hz, const RobotParams& p) {
  const double wash = p.wash_speed_mps * std::clamp(flap_hz, 0.0, p.max_flap_hz) / p.max_flap_hz;
  return (airspeed * airspeed + wash * wash) / (p.reference_speed_mps * p.reference_speed_mps);
}

inline State derivative(double t, const State& y, const ControlCommand& cmd, const RobotParams& p,
                        const Disturbance& dist, double phase0, double t0) {
  const double vx = y[3], vy = y[4], vz = y[5] - y[12];  // mean path
  const double pitch = y[6], q = y[7], yaw = y[8], r = y[9], beta = y[10];
  const double vh = std::hypot(vx, vy);
  const double speed = std::sqrt(vh * vh + vz * vz);
  const double heading = vh > 1e-9 ? std::atan2(vy, vx) : yaw;
  const double gamma = speed > 1e-9 ? std::atan2(vz, vh) : 0.0;
  const double alpha = pitch - gamma;
  const double m = p.mass_kg;
  const double f = std::clamp(cmd.flap_hz, 0.0, p.max_flap_hz);

  Vec3 force{0.0, 0.0, -m * kGravity};
  force = force + dist.force_n;
  if (speed > 1e-9) {
    const Coefficients c = polar(alpha, p);
    const double qs = 0.5 * kAirDensity * speed * speed * p.wing_area_m2;
    const Vec3 along{vx / speed, vy / speed, vz / speed};
    // Lift is normal to the velocity, in the vertical plane through it.
    const Vec3 up{-std::sin(gamma) * std::cos(heading), -std::sin(gamma) * std::sin(heading), std::cos(gamma)};
    force = force - along * (qs * c.cd) + up * (qs * c.cl);
  }
  // Flap force along the stroke plane.
  const double tilt = pitch + deg2rad(p.flap_tilt_deg);
  const double flap = thrust_model(f, p).force_n;
  force = force + Vec3{std::cos(tilt) * std::cos(yaw), std::cos(tilt) * std::sin(yaw), std::sin(tilt)} * flap;
  // Side force turning the velocity towards the body heading.
  if (vh > 1e-9) {
    const double slip = wrap_deg(rad2deg(yaw - heading));
    const double turn = deg2rad(slip) / p.heading_time_constant_s;  // rad/s
    force = force + Vec3{-std::sin(heading), std::cos(heading), 0.0} * (m * vh * turn);
  }
  const double tail = tail_factor(speed, f, p);
  force.z -= p.tail_download_n_per_deg * cmd.delta_e_deg * tail;

  const double phase = phase0 + 2.0 * std::numbers::pi * f * (t - t0);
  const double wn = p.heave_frequency_rad_s;
  const double heave_acc = p.flap_oscillation_gain * f * std::sin(phase) -
                           2.0 * p.heave_damping_ratio * wn * y[12] - wn * wn * y[11];

  const double pitch_acc = (p.elevator_nm_per_deg * cmd.delta_e_deg * tail - p.pitch_damping * q -
                            p.pitch_stiffness * alpha * tail + dist.pitch_moment_nm) /
                           p.pitch_inertia;
  const double yaw_err = deg2rad(wrap_deg(rad2deg(yaw - heading)));
  const double yaw_acc = (p.rudder_nm_per_deg * cmd.delta_r_deg * tail - p.yaw_damping * r -
                          p.weathervane * yaw_err * tail + dist.yaw_moment_nm) /
                         p.yaw_inertia;

  // Leg servo: first-order lag with a rate limit.
  const double max_rate = deg2rad(p.servo_rate_dps);
  const double beta_rate = std::clamp((deg2rad(cmd.beta_cmd_deg) - beta) / p.servo_lag_s, -max_rate, max_rate);

  return {vx,        vy,         y[5], force.x / m, force.y / m, force.z / m + heave_acc, q, pitch_acc, r, yaw_acc,
          beta_rate, y[12], heave_acc};
}

}  // namespace detail

/// Advances the state by dt with the command held (one RK4 step). The
/// time-invariant dynamics only see `t` through the flap phase.
inline RobotState plant_step(const RobotState& s, const ControlCommand& cmd, const RobotParams& p, double dt,
                             const Disturbance& dist = {}) {
  if (!(dt > 0.0 && dt <= 1.0 / 120.0 + 1e-12)) throw DomainError("plant step needs 0 < dt <= 1/120 s");
  const detail::State y0 = detail::pack(s);
  const double phase0 = s.flap_phase;
  const auto rhs = [&](double t, const detail::State& y) { return detail::derivative(t, y, cmd, p, dist, phase0, 0.0); };
  const detail::State y = rk4_step(y0, 0.0, dt, rhs);
  if (!all_finite(y)) throw IntegrationError("flight state diverged");
  RobotState out = s;
  out.x = y[0];
  out.y = y[1];
  out.z = std::max(0.0, y[2]);
  out.vx = y[3];
  out.vy = y[4];
  out.vz = y[2] <= 0.0 ? std::max(0.0, y[5]) : y[5];
  out.pitch_deg = std::clamp(rad2deg(y[6]), -89.9, 89.9);
  out.pitch_rate_dps = rad2deg(y[7]);
  out.yaw_deg = rad2deg(y[8]);
  out.yaw_rate_dps = rad2deg(y[9]);
  out.beta_deg = std::clamp(rad2deg(y[10]), 0.0, 90.0);
  out.heave_m = y[11];
  out.heave_rate_mps = y[12];
  const double f = std::clamp(cmd.flap_hz, 0.0, p.max_flap_hz);
  out.flap_phase = std::fmod(s.flap_phase + 2.0 * std::numbers::pi * f * dt, 2.0 * std::numbers::pi);
  return out;
}

/// Kinetic plus potential energy per unit mass, J/kg.
inline double specific_energy(const RobotState& s) {
  return 0.5 * (s.vx * s.vx + s.vy * s.vy + s.vz * s.vz) + kGravity * s.z;
}

}  // namespace perchsim::flight
