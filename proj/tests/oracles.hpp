// Independent reference computations shared by the unit tests and the
// acceptance run. None of them call into the code they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "perchsim/claw.hpp"
#include "perchsim/touchdown.hpp"

namespace oracle {

using namespace perchsim;

// Spring energy straight from the anchor positions.
inline double claw_energy(const claw::ClawGeometry& g, const claw::SpringSpec& s, double psi_deg) {
  const double a = -psi_deg * std::numbers::pi / 180.0;
  const double px = g.spring_anchor_claw.x * std::cos(a) - g.spring_anchor_claw.y * std::sin(a);
  const double py = g.spring_anchor_claw.x * std::sin(a) + g.spring_anchor_claw.y * std::cos(a);
  const double len = std::hypot(px - g.spring_anchor_frame.x, py - g.spring_anchor_frame.y);
  const double ext = std::max(0.0, len - s.free_length_mm) * 1e-3;
  return 0.5 * s.rate_n_per_mm * 1e3 * ext * ext;
}

// Integrates the pivot rotation with Coulomb friction until it stops or
// passes the rotation budget, then applies the static hold check. Twist
// limits as in the model.
inline touchdown::PerchOutcome pivot(const touchdown::TouchdownState& st, double hold_nm,
                                     const touchdown::TouchdownGeometry& g) {
  using touchdown::PerchOutcome;
  const double m = g.total_mass_kg();
  const double psi = deg2rad(st.psi_branch_deg);
  const double momentum = m * st.com_offset_m.y * st.speed_mps;
  if (std::abs(momentum) * std::abs(std::sin(psi)) / g.lock_time_s > g.twist_capacity_nm)
    return momentum > 0.0 ? PerchOutcome::FallForward : PerchOutcome::FallBackward;
  const double hold = hold_nm * std::cos(psi);
  const auto gravity = [&](double phi) { return m * kGravity * rotate(st.com_offset_m, -phi).x; };
  double phi = 0.0;
  double w = momentum * std::cos(psi) / st.inertia_kgm2;
  const double budget = deg2rad(g.rotation_budget_deg);
  const double dt = 2e-6;
  if (w != 0.0) {
    const double dir = w > 0.0 ? 1.0 : -1.0;
    while (w * dir > 0.0) {
      // Semi-implicit Euler: rate first, then angle.
      w += (gravity(phi) - dir * hold) / st.inertia_kgm2 * dt;
      phi += w * dt;
      if (std::abs(phi) > budget) return dir > 0.0 ? PerchOutcome::FallForward : PerchOutcome::FallBackward;
    }
  }
  const double tau = gravity(phi);
  if (tau > hold) return PerchOutcome::FallForward;
  if (tau < -hold) return PerchOutcome::FallBackward;
  if (m * kGravity * std::abs(st.com_offset_m.x) * std::abs(std::sin(psi)) > g.twist_capacity_nm)
    return PerchOutcome::FallBackward;
  return PerchOutcome::Perched;
}

}  // namespace oracle
