// Outcome of a locked touchdown, from a rigid pivot model about the branch.
//
// Once the claw locks, the robot rotates about the branch axis. The friction
// of the claw resists that rotation with a constant torque, reduced by the
// cosine of the yaw between flight path and branch normal. A fast touchdown
// carries enough angular momentum to pitch the robot over the branch
// (FallForward); a slow one leaves the centre of mass hanging behind the
// branch with more gravity torque than the claw can hold (FallBackward).
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "perchsim/common.hpp"

namespace perchsim::touchdown {

enum class PerchOutcome { Missed, FallForward, Perched, FallBackward };

inline const char* to_string(PerchOutcome o) {
  switch (o) {
    case PerchOutcome::Missed: return "Missed";
    case PerchOutcome::FallForward: return "FallForward";
    case PerchOutcome::Perched: return "Perched";
    case PerchOutcome::FallBackward: return "FallBackward";
  }
  return "?";
}

/// Mass layout of the perching robot. The hip sits below and slightly ahead
/// of the body centre of mass; the leg plus claw reach from the hip to the
/// branch axis.
struct TouchdownGeometry {
  double body_mass_kg = 0.52;
  double appendage_mass_kg = 0.18;
  double reach_m = 0.30;  // hip to branch axis: link plus claw
  Vec2 hip_offset_body_m{-0.0567, -0.1982};  // from the body CoM, body axes (x forward, z up)
  double body_inertia_kgm2 = 0.012;  // about the body CoM
  double rotation_budget_deg = 20.0;  // pitch-over past which the fall cannot be recovered
  double lock_time_s = 0.05;          // time over which the claw absorbs the twist impulse
  double twist_capacity_nm = 1.2;     // out-of-plane torque the plate rows resist

  double total_mass_kg() const { return body_mass_kg + appendage_mass_kg; }
};

/// Conditions at the moment of lock. `com_offset_m` is the robot centre of
/// mass relative to the branch axis (x forward along the flight line, z up)
/// and `inertia_kgm2` is about the branch axis; make_touchdown_state fills
/// both from the geometry.
struct TouchdownState {
  double speed_mps = 2.5;
  double theta_leg_deg = 90.0;
  double psi_branch_deg = 0.0;
  double pitch_deg = 30.0;
  Vec2 com_offset_m{};
  double inertia_kgm2 = 0.0;
  bool locked = true;
};

inline TouchdownState make_touchdown_state(double speed_mps, double theta_leg_deg, double psi_branch_deg,
                                           double pitch_deg = 30.0, const TouchdownGeometry& g = {}) {
  if (speed_mps < 0.0) throw DomainError("touchdown speed must be non-negative");
  if (theta_leg_deg < 0.0 || theta_leg_deg > 90.0) throw DomainError("leg angle outside [0, 90] deg");
  TouchdownState st;
  st.speed_mps = speed_mps;
  st.theta_leg_deg = theta_leg_deg;
  st.psi_branch_deg = psi_branch_deg;
  st.pitch_deg = pitch_deg;
  const double th = deg2rad(theta_leg_deg);
  const Vec2 hip = rotate(g.hip_offset_body_m, deg2rad(pitch_deg));
  const Vec2 claw = hip + Vec2{std::sin(th), -std::cos(th)} * g.reach_m;
  const Vec2 body = Vec2{} - claw;
  const Vec2 leg = hip + Vec2{std::sin(th), -std::cos(th)} * (0.5 * g.reach_m) - claw;
  const double m = g.total_mass_kg();
  st.com_offset_m = (body * g.body_mass_kg + leg * g.appendage_mass_kg) * (1.0 / m);
  st.inertia_kgm2 = g.body_mass_kg * dot(body, body) + g.appendage_mass_kg * dot(leg, leg) + g.body_inertia_kgm2;
  return st;
}

namespace detail {

// CoM position after pitching forward by phi (clockwise seen with x right,
// z up, so positive phi carries the CoM over the branch).
inline Vec2 com_at(Vec2 c, double phi) { return rotate(c, -phi); }

}  // namespace detail

/// Angular rate about the branch right after lock, rad/s, positive forward.
/// Only the momentum component normal to the branch turns the robot about it.
inline double lock_rate(const TouchdownState& st, const TouchdownGeometry& g = {}) {
  const double momentum = g.total_mass_kg() * st.com_offset_m.y * st.speed_mps;
  return momentum * std::cos(deg2rad(st.psi_branch_deg)) / st.inertia_kgm2;
}

/// `hold_nm`: slip torque of the claw about the branch axis.
inline PerchOutcome evaluate_touchdown(const TouchdownState& st, double hold_nm, const TouchdownGeometry& g = {}) {
  if (!st.locked) return PerchOutcome::Missed;
  if (!(st.inertia_kgm2 > 0.0)) throw DomainError("touchdown state needs a positive inertia");
  const double m = g.total_mass_kg();
  const double psi = deg2rad(st.psi_branch_deg);
  const double cos_psi = std::cos(psi);
  const double sin_psi = std::abs(std::sin(psi));
  const Vec2 c = st.com_offset_m;
  const double momentum = m * c.y * st.speed_mps;  // about the branch, in the flight plane
  if (std::isinf(hold_nm)) return PerchOutcome::Perched;

  // Out-of-plane share of the momentum twists the claw on the branch.
  if (std::abs(momentum) * sin_psi / g.lock_time_s > g.twist_capacity_nm)
    return momentum > 0.0 ? PerchOutcome::FallForward : PerchOutcome::FallBackward;

  const double hold = hold_nm * cos_psi;
  const double omega0 = lock_rate(st, g);
  const double kinetic = 0.5 * st.inertia_kgm2 * omega0 * omega0;
  const double z0 = c.y;
  const auto remaining = [&](double phi) {
    return kinetic - hold * std::abs(phi) - m * kGravity * (detail::com_at(c, phi).y - z0);
  };
  const double budget = deg2rad(g.rotation_budget_deg);
  const double dir = omega0 >= 0.0 ? 1.0 : -1.0;

  // First stop of the friction-braked rotation: scan then bisect.
  double stop = 0.0;
  if (kinetic > 0.0) {
    constexpr int kScan = 800;
    double prev = 0.0;
    bool found = false;
    for (int i = 1; i <= kScan; ++i) {
      const double phi = dir * budget * i / kScan;
      if (remaining(phi) <= 0.0) {
        double lo = prev, hi = phi;
        for (int k = 0; k < 60; ++k) {
          const double mid = 0.5 * (lo + hi);
          (remaining(mid) > 0.0 ? lo : hi) = mid;
        }
        stop = 0.5 * (lo + hi);
        found = true;
        break;
      }
      prev = phi;
    }
    if (!found) return dir > 0.0 ? PerchOutcome::FallForward : PerchOutcome::FallBackward;
  }

  // Settled: gravity torque (positive pitches forward) against the hold.
  const double gravity = m * kGravity * detail::com_at(c, stop).x;
  if (gravity > hold) return PerchOutcome::FallForward;
  if (gravity < -hold) return PerchOutcome::FallBackward;
  // Gravity acting out of the flight plane on a yawed branch.
  if (m * kGravity * std::abs(c.x) * sin_psi > g.twist_capacity_nm) return PerchOutcome::FallBackward;
  return PerchOutcome::Perched;
}

struct EnvelopeCell {
  double theta_leg_deg = 0.0;
  double value = 0.0;  // speed (m/s) or branch yaw (deg)
  PerchOutcome outcome = PerchOutcome::Missed;
};

/// Leg angle against touchdown speed, branch normal to the flight path.
inline std::vector<EnvelopeCell> sweep_speed(std::span<const double> theta_leg_deg, std::span<const double> speeds,
                                             double hold_nm, const TouchdownGeometry& g = {}, double pitch_deg = 30.0) {
  std::vector<EnvelopeCell> out;
  out.reserve(theta_leg_deg.size() * speeds.size());
  for (double th : theta_leg_deg)
    for (double v : speeds)
      out.push_back({th, v, evaluate_touchdown(make_touchdown_state(v, th, 0.0, pitch_deg, g), hold_nm, g)});
  return out;
}

/// Leg angle against branch yaw at a fixed speed.
inline std::vector<EnvelopeCell> sweep_yaw(std::span<const double> theta_leg_deg, std::span<const double> psi_deg,
                                           double hold_nm, double speed_mps = 2.5, const TouchdownGeometry& g = {},
                                           double pitch_deg = 30.0) {
  std::vector<EnvelopeCell> out;
  out.reserve(theta_leg_deg.size() * psi_deg.size());
  for (double th : theta_leg_deg)
    for (double psi : psi_deg)
      out.push_back({th, psi, evaluate_touchdown(make_touchdown_state(speed_mps, th, psi, pitch_deg, g), hold_nm, g)});
  return out;
}

/// True when a row ordered by speed reads FallBackward*, Perched+,
/// FallForward*. Rows without a Perched cell are not constrained.
inline bool ordered_by_speed(std::span<const EnvelopeCell> row) {
  const bool perched = std::any_of(row.begin(), row.end(), [](const EnvelopeCell& c) {
    return c.outcome == PerchOutcome::Perched;
  });
  if (!perched) return true;
  int rank = 0;  // 0 backward, 1 perched, 2 forward
  for (const EnvelopeCell& c : row) {
    int r = 0;
    switch (c.outcome) {
      case PerchOutcome::FallBackward: r = 0; break;
      case PerchOutcome::Perched: r = 1; break;
      case PerchOutcome::FallForward: r = 2; break;
      case PerchOutcome::Missed: return false;
    }
    if (r < rank) return false;
    rank = r;
  }
  return true;
}

/// Largest h on the grid such that every cell with |psi| <= h is Perched;
/// negative when the zero-yaw cell itself fails.
inline double perched_half_width(std::span<const EnvelopeCell> row) {
  double width = -1.0;
  bool zero_seen = false;
  double first_fail = std::numeric_limits<double>::infinity();
  for (const EnvelopeCell& c : row) {
    if (c.value == 0.0) zero_seen = true;
    if (c.outcome != PerchOutcome::Perched) first_fail = std::min(first_fail, std::abs(c.value));
  }
  if (!zero_seen || first_fail == 0.0) return width;
  for (const EnvelopeCell& c : row)
    if (std::abs(c.value) < first_fail) width = std::max(width, std::abs(c.value));
  return width;
}

struct ScalingReference {
  double length_m = 1.5;
  double speed_mps = 4.0;
};

/// Highest perching speed for a robot of size L when L*v^2 is held fixed.
inline double scaling_envelope(double length_m, const ScalingReference& ref = {}) {
  if (!(length_m > 0.0)) throw DomainError("robot size must be positive");
  return ref.speed_mps * std::sqrt(ref.length_m / length_m);
}

}  // namespace perchsim::touchdown
