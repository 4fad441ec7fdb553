// Planar impact of the leg on a branch and the leg-design cost.
//
// Two rigid bodies: the fuselage (point mass) and the leg, a rigid link
// hinged at the hip. The hip carries the servo, modelled as a rotational
// spring-damper around the commanded angle, and a diagonal spring between
// fuselage and leg. The claw at the leg tip strikes the branch through a
// Kelvin-Voigt contact. Gravity is carried by the wings over the few tens of
// milliseconds of an impact and is left out.
//
// Frame: x along the flight line towards the branch, z up, hip at the
// fuselage point. Leg angle beta from vertical-down (0) to horizontal
// forward (90).
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "perchsim/branch.hpp"
#include "perchsim/common.hpp"
#include "perchsim/ode.hpp"

namespace perchsim::leg {

struct LegParams {
  double link_length_m = 0.23;
  double leg_mass_kg = 0.06;        // link plus claw
  double com_fraction = 0.7;        // hip to leg CoM, fraction of the link length
  double spring_rate_n_per_m = 13900.0;
  double spring_body_drop_m = 0.057;  // fuselage anchor below the hip
  double spring_leg_anchor_m = 0.080; // leg anchor distance from the hip
  double servo_limit_torque_nm = 1.77;  // 18 kg*cm
  double servo_stiffness_nm_per_rad = 1.5;
  double servo_damping_nms = 0.02;
  double hip_angle_deg = 32.0;  // commanded pose at impact
  double stop_stiffness_nm_per_rad = 200.0;  // hard stop at the vertical
  double mass_budget_kg = 0.18;
};

/// Branch contact and claw trigger settings shared by all impacts.
struct ContactParams {
  double stiffness_n_per_m = 2.0e4;
  double damping_ratio = 0.4;
  double claw_radius_m = 0.034;       // claw mouth radius around the branch
  double trigger_force_n = 11.4;      // claw snaps shut above this contact force
  double capture_half_window_m = 0.05;
  double max_sim_time_s = 0.3;
};

struct ImpactRecord {
  double peak_force_n = 0.0;
  double time_to_bounce_ms = 0.0;
  double servo_peak_torque_nm = 0.0;
  double joint_angular_momentum = 0.0;  // kg*m^2/s, leg about the hip
  bool locked = false;
  double initial_energy_j = 0.0;
  double energy_at_bounce_j = 0.0;
};

inline double clamp_hip_angle(double beta_deg) { return std::clamp(beta_deg, 0.0, 90.0); }

inline void validate(const LegParams& p) {
  if (!(p.link_length_m > 0.0 && p.leg_mass_kg > 0.0 && p.mass_budget_kg > 0.0))
    throw DomainError("leg length and masses must be positive");
  if (!(p.servo_limit_torque_nm >= 1.47 - 1e-9 && p.servo_limit_torque_nm <= 1.96 + 1e-9))
    throw DomainError("servo limit torque outside the 15-20 kg*cm class");
  if (p.com_fraction <= 0.0 || p.com_fraction > 1.0) throw DomainError("leg CoM fraction must lie in (0, 1]");
}

namespace detail {

struct Model {
  double body_mass;
  double leg_mass;
  double com;       // hip to leg CoM, m
  double leg_inertia;  // about its CoM
  double length;
  double beta_cmd;  // rad
  double k_servo;
  double c_servo;
  double k_spring;
  double drop;
  double anchor;
  double rest;  // diagonal spring rest length
  double k_stop;
  Vec2 face_point;  // first contact point on the branch surface
  Vec2 normal;      // branch surface normal there, towards the claw
  double k_contact;
  double c_contact;
};

inline double spring_len(const Model& m, double beta) {
  return std::hypot(m.anchor * std::sin(beta), -m.anchor * std::cos(beta) + m.drop);
}

inline double spring_dlen(const Model& m, double beta) {
  const double px = m.anchor * std::sin(beta);
  const double pz = -m.anchor * std::cos(beta) + m.drop;
  const double l = std::hypot(px, pz);
  return l > 0.0 ? (px * m.anchor * std::cos(beta) + pz * m.anchor * std::sin(beta)) / l : 0.0;
}

// State: body x, leg angle, body x rate, leg angle rate. The wings hold the
// fuselage height through the impact, so the body only moves along x.
using State = StateVec<4>;

inline Vec2 foot(const Model& m, const State& s) {
  return {s[0] + m.length * std::sin(s[1]), -m.length * std::cos(s[1])};
}

inline Vec2 foot_velocity(const Model& m, const State& s) {
  return {s[2] + m.length * std::cos(s[1]) * s[3], m.length * std::sin(s[1]) * s[3]};
}

struct Contact {
  double force = 0.0;
  double penetration = 0.0;
};

/// The claw meets the branch on its trigger face: a plane through the first
/// contact point, normal to the branch surface there. The claw slides along
/// it as the leg swings.
inline Contact contact(const Model& m, const State& s) {
  Contact c;
  c.penetration = -dot(foot(m, s) - m.face_point, m.normal);
  if (c.penetration < -1e-12) return c;  // rounding at the first touch counts as touching
  c.penetration = std::max(0.0, c.penetration);
  const double rate = -dot(foot_velocity(m, s), m.normal);
  c.force = std::max(0.0, m.k_contact * c.penetration + m.c_contact * rate);
  return c;
}

inline double servo_torque(const Model& m, const State& s) {
  return -m.k_servo * (s[1] - m.beta_cmd) - m.c_servo * s[3];
}

inline State derivative(const Model& m, const State& s) {
  const double beta = s[1];
  const double w = s[3];
  const Vec2 fc = m.normal * contact(m, s).force;
  const double mt = m.body_mass + m.leg_mass;
  const double mc = m.leg_mass * m.com;
  const double a = mc * std::cos(beta);
  const double j = mc * m.com + m.leg_inertia;
  const double qx = fc.x + mc * std::sin(beta) * w * w;
  double qb = fc.x * m.length * std::cos(beta) + fc.y * m.length * std::sin(beta);
  qb += servo_torque(m, s);
  qb += -m.k_spring * (spring_len(m, beta) - m.rest) * spring_dlen(m, beta);
  if (beta < 0.0) qb -= m.k_stop * beta;
  // [[mt, a], [a, j]] * acc = q
  const double det = mt * j - a * a;
  const double x_acc = (j * qx - a * qb) / det;
  const double beta_acc = (mt * qb - a * qx) / det;
  return {s[2], w, x_acc, beta_acc};
}

inline double kinetic_energy(const Model& m, const State& s) {
  const double cx = s[2] + m.com * std::cos(s[1]) * s[3];
  const double cz = m.com * std::sin(s[1]) * s[3];
  return 0.5 * m.body_mass * s[2] * s[2] + 0.5 * m.leg_mass * (cx * cx + cz * cz) + 0.5 * m.leg_inertia * s[3] * s[3];
}

inline double potential_energy(const Model& m, const State& s) {
  const double ds = spring_len(m, s[1]) - m.rest;
  const double dq = s[1] - m.beta_cmd;
  const double pen = std::max(0.0, contact(m, s).penetration);
  const double over = std::min(0.0, s[1]);
  return 0.5 * m.k_spring * ds * ds + 0.5 * m.k_servo * dq * dq + 0.5 * m.k_contact * pen * pen +
         0.5 * m.k_stop * over * over;
}

}  // namespace detail

/// Strikes the branch at `speed` along the flight line with the claw
/// `misalignment_z_m` below the branch centre line (positive: branch above).
inline ImpactRecord simulate_impact(const LegParams& leg, double total_mass_kg, double speed_mps,
                                    double misalignment_z_m, const BranchSpec& branch, double dt_s = 1e-4,
                                    const ContactParams& cp = {}) {
  validate(leg);
  if (speed_mps < 0.0 || speed_mps > 6.0) throw DomainError("impact speed outside [0, 6] m/s");
  if (!(dt_s > 0.0 && dt_s <= 2e-4 + 1e-15)) throw DomainError("impact integration needs 0 < dt <= 0.2 ms");
  if (!(total_mass_kg > leg.leg_mass_kg)) throw DomainError("total mass must exceed the leg mass");

  detail::Model m{};
  m.body_mass = total_mass_kg - leg.leg_mass_kg;
  m.leg_mass = leg.leg_mass_kg;
  m.length = leg.link_length_m;
  m.com = leg.com_fraction * leg.link_length_m;
  m.leg_inertia = leg.leg_mass_kg * leg.link_length_m * leg.link_length_m / 12.0;
  m.beta_cmd = deg2rad(clamp_hip_angle(leg.hip_angle_deg));
  m.k_servo = leg.servo_stiffness_nm_per_rad;
  m.c_servo = leg.servo_damping_nms;
  m.k_spring = leg.spring_rate_n_per_m;
  m.drop = leg.spring_body_drop_m;
  m.anchor = leg.spring_leg_anchor_m;
  m.rest = detail::spring_len(m, m.beta_cmd);
  m.k_stop = leg.stop_stiffness_nm_per_rad;
  m.k_contact = cp.stiffness_n_per_m;
  // Damping referenced to the struck leg, the mass the contact sees first.
  m.c_contact = 2.0 * cp.damping_ratio * std::sqrt(cp.stiffness_n_per_m * leg.leg_mass_kg);

  detail::State s{0.0, m.beta_cmd, speed_mps, 0.0};
  ImpactRecord rec;
  rec.initial_energy_j = detail::kinetic_energy(m, s);
  const double reach_radius = branch.radius_m() + cp.claw_radius_m;
  if (speed_mps == 0.0 || std::abs(misalignment_z_m) >= reach_radius) return rec;

  // Branch centre one claw-mouth radius plus branch radius ahead of the tip.
  const Vec2 f0 = detail::foot(m, s);
  const double reach = std::sqrt(reach_radius * reach_radius - misalignment_z_m * misalignment_z_m);
  const Vec2 centre{f0.x + reach, f0.y + misalignment_z_m};
  m.normal = Vec2{-reach, -misalignment_z_m} * (1.0 / reach_radius);
  m.face_point = centre + m.normal * branch.radius_m();
  const double claw_offset = cp.claw_radius_m;  // claw surface ahead of the leg tip
  m.face_point = m.face_point - m.normal * claw_offset;

  const auto rhs = [&](double, const detail::State& y) { return detail::derivative(m, y); };
  double t = 0.0;
  double contact_start = -1.0;
  bool bounced = false;
  while (t < cp.max_sim_time_s) {
    detail::State next = rk4_step(s, t, dt_s, rhs);
    double h = dt_s;
    if (contact_start < 0.0 && detail::contact(m, next).penetration >= 0.0) {
      // The damper force jumps at first touch: shorten the step to land on it.
      double lo = 0.0;
      double hi = dt_s;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (detail::contact(m, rk4_step(s, t, mid, rhs)).penetration < 0.0 ? lo : hi) = mid;
      }
      h = hi;
      next = rk4_step(s, t, h, rhs);
      contact_start = t + h;
    }
    s = next;
    t += h;
    const detail::Contact c = detail::contact(m, s);
    if (!all_finite(s) || c.penetration > reach_radius) throw IntegrationError("impact penetration blew up");
    // The model has no energy source, so growth means the step is unstable.
    if (detail::kinetic_energy(m, s) + detail::potential_energy(m, s) > 1.5 * rec.initial_energy_j)
      throw IntegrationError("impact energy grew; step too coarse for the contact stiffness");
    rec.peak_force_n = std::max(rec.peak_force_n, c.force);
    rec.servo_peak_torque_nm = std::max(rec.servo_peak_torque_nm, std::abs(detail::servo_torque(m, s)));
    const double jl = m.leg_mass * m.com * m.com + m.leg_inertia;
    rec.joint_angular_momentum = std::max(rec.joint_angular_momentum, std::abs(jl * s[3]));
    if (contact_start >= 0.0 && !bounced && s[2] <= 0.0) {
      bounced = true;
      rec.time_to_bounce_ms = (t - contact_start) * 1e3;
      rec.energy_at_bounce_j = detail::kinetic_energy(m, s) + detail::potential_energy(m, s);
    }
    if (bounced && c.penetration <= 0.0) break;
  }
  rec.locked = rec.peak_force_n >= cp.trigger_force_n && std::abs(misalignment_z_m) <= cp.capture_half_window_m;
  return rec;
}

// ---------------------------------------------------------------------------
// Design cost

struct CostWeights {
  double servo_torque = 1.0;
  double angular_momentum = 1.0;
  double mass = 5.0;
};

struct SuiteCase {
  double speed_mps = 3.0;
  double total_mass_kg = 0.7;
};

/// Normalizers for the cost terms, taken from the baseline leg.
struct CostScale {
  double servo_torque_nm = 1.0;
  double angular_momentum = 1.0;
  double mass_kg = 1.0;
};

inline ImpactRecord worst_case(const LegParams& leg, std::span<const SuiteCase> suite, const BranchSpec& branch = {},
                               const ContactParams& cp = {}) {
  ImpactRecord worst;
  for (const SuiteCase& c : suite) {
    if (c.speed_mps < 2.0 - 1e-9 || c.speed_mps > 4.0 + 1e-9) throw DomainError("design suite speeds must lie in 2-4 m/s");
    const ImpactRecord r = simulate_impact(leg, c.total_mass_kg, c.speed_mps, 0.0, branch, 1e-4, cp);
    worst.servo_peak_torque_nm = std::max(worst.servo_peak_torque_nm, r.servo_peak_torque_nm);
    worst.joint_angular_momentum = std::max(worst.joint_angular_momentum, r.joint_angular_momentum);
    worst.peak_force_n = std::max(worst.peak_force_n, r.peak_force_n);
  }
  return worst;
}

inline CostScale baseline_scale(std::span<const SuiteCase> suite, const LegParams& baseline = {}) {
  const ImpactRecord r = worst_case(baseline, suite);
  return {r.servo_peak_torque_nm, r.joint_angular_momentum, baseline.leg_mass_kg};
}

inline double leg_cost(const LegParams& leg, std::span<const SuiteCase> suite, const CostWeights& w = {},
                       const CostScale& scale = {}) {
  const ImpactRecord r = worst_case(leg, suite);
  return w.servo_torque * r.servo_peak_torque_nm / scale.servo_torque_nm +
         w.angular_momentum * r.joint_angular_momentum / scale.angular_momentum +
         w.mass * leg.leg_mass_kg / scale.mass_kg;
}

/// Three-parameter design problem: link length, diagonal spring rate, servo
/// stiffness. Leg mass follows from a carbon-tube plus spring mass model.
struct LegDesignSpace {
  double claw_mass_kg = 0.035;
  double link_density_kg_per_m = 0.08;
  double spring_mass_per_rate = 5.0e-7;  // kg per N/m
  double length_lo = 0.10, length_hi = 0.25;
  double rate_lo = 2000.0, rate_hi = 20000.0;
  double servo_lo = 0.5, servo_hi = 4.0;

  LegParams make(std::span<const double> x, LegParams base = {}) const {
    base.link_length_m = x[0];
    base.spring_rate_n_per_m = x[1];
    base.servo_stiffness_nm_per_rad = x[2];
    base.leg_mass_kg = claw_mass_kg + link_density_kg_per_m * x[0] + spring_mass_per_rate * x[1];
    return base;
  }
};

}  // namespace perchsim::leg
