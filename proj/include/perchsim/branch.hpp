// The perch target: a horizontal cylinder with a contact surface treatment.
#pragma once

#include <string_view>

#include "perchsim/common.hpp"

namespace perchsim {

enum class Surface { BareCarbon, SpikesOnly, SpikesPlusPads };

constexpr std::string_view to_string(Surface s) {
  switch (s) {
    case Surface::BareCarbon: return "bare_carbon";
    case Surface::SpikesOnly: return "spikes_only";
    case Surface::SpikesPlusPads: return "spikes_plus_pads";
  }
  return "unknown";
}

/// Effective claw/branch friction coefficient per interface treatment. The
/// pad value folds the elastomer pinch of the spring into one coefficient.
struct SurfaceFriction {
  double bare_carbon = 0.35;
  double spikes_only = 0.70;
  double spikes_plus_pads = 1.20;

  constexpr double operator()(Surface s) const {
    switch (s) {
      case Surface::BareCarbon: return bare_carbon;
      case Surface::SpikesOnly: return spikes_only;
      case Surface::SpikesPlusPads: return spikes_plus_pads;
    }
    return 0.0;
  }
};

struct BranchSpec {
  double diameter_m = 0.06;
  Vec3 center{14.0, 0.0, 2.0};  // world position, m
  double axis_yaw_deg = 0.0;    // 0: axis perpendicular to the flight line
  Surface surface = Surface::SpikesPlusPads;
  SurfaceFriction friction{};

  constexpr double radius_m() const { return 0.5 * diameter_m; }
  constexpr double mu_eff() const { return friction(surface); }
};

inline void validate(const BranchSpec& b) {
  if (!(b.diameter_m > 0.0)) throw DomainError("branch diameter must be positive");
  const auto& f = b.friction;
  if (!(f.spikes_plus_pads > f.spikes_only && f.spikes_only > f.bare_carbon && f.bare_carbon >= 0.0))
    throw DomainError("surface friction must rank pads > spikes > bare carbon");
}

}  // namespace perchsim
