// Bistable double-plate claw.
//
// Each claw half is a rigid plate pivoting about its own axis; the two pivots
// sit on a horizontal line `pivot_spacing_mm` apart. A tension spring runs
// from a frame anchor to an anchor on the plate. While the spring line passes
// behind the pivot the plate is held open against its stop; once a trigger
// pushes it past the line through the pivot (the snap angle) the spring
// drives the plate shut onto the branch.
//
// Frame conventions (millimetres, right-hand half): pivot at (D_e/2, 0), +y
// away from the branch. Closing rotates the plate clockwise; `psi` is the
// closing angle in degrees. All torques are reported positive in the closing
// direction.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "perchsim/branch.hpp"
#include "perchsim/common.hpp"
#include "perchsim/ode.hpp"

namespace perchsim::claw {

struct SpringSpec {
  double free_length_mm = 40.0;
  double rate_n_per_mm = 5.0;
  double max_force_n = 111.0;
  double mass_g = 8.0;
};

/// Plate kinematics, spring anchors and contact-line shape. Defaults are the
/// calibrated values produced by tools/calibrate_claw.
struct ClawGeometry {
  double straight_segment_mm = 22.1823;  // D_s: straight part of the contact line
  double round_radius_mm = 10.3651;     // D_r: radius of the rounded part
  double inner_radius_mm = 34.0;        // R_c: inner clearance radius of the claw
  double pivot_spacing_mm = 50.0;       // D_e
  double psi_open_deg = -4.0;           // open rest angle against the stop
  double psi_closed_deg = 55.0;         // closure stop
  double trigger_lever_mm = 17.5;       // pivot to trigger protrusion
  Vec2 spring_anchor_claw{33.9551, 2.0021};  // plate frame at psi = 0, relative to pivot
  Vec2 spring_anchor_frame{-26.4767, 0.0};  // frame anchor relative to pivot
  double claw_inertia_kgm2 = 4.0e-5;    // one plate about its pivot, spring mass lumped in
  double spike_offset_mm = 2.0;         // spike protrusion past the rounded part
  Vec2 profile_origin_mm{9.7773, -2.1466};  // start of the straight segment, plate frame
  double profile_heading_deg = -52.0752;  // direction of the straight segment, plate frame
  double tip_sweep_deg = 35.2534;       // turn of the rounded part
  double seat_depth_mm = 24.9726;       // branch top below the pivot line when seated
  double plate_spacing_mm = 30.0;       // spacing of the plate rows along the branch axis
  double trigger_force_n = 15.0;        // branch push on the trigger until the snap point
};

inline constexpr double kDefaultClosingDamping = 20.0;  // 1/s

enum class ClawMode { Open, Closing, Locked };

struct ClawState {
  double psi_deg = -4.0;
  double psi_rate_dps = 0.0;
  double spring_extension_mm = 0.0;
  ClawMode mode = ClawMode::Open;
};

// ---------------------------------------------------------------------------
// Spring

/// Linear spring with no preload. The rating is a validation bound only.
inline double spring_force(const SpringSpec& spec, double extension_mm) {
  return std::max(0.0, spec.rate_n_per_mm * extension_mm);
}

inline bool exceeds_rating(const SpringSpec& spec, double extension_mm) {
  return spring_force(spec, extension_mm) > spec.max_force_n;
}

/// Stored energy in joules.
inline double spring_energy_j(const SpringSpec& spec, double extension_mm) {
  const double e = std::max(0.0, extension_mm);
  return 0.5 * spec.rate_n_per_mm * e * e * 1e-3;
}

// ---------------------------------------------------------------------------
// Plate kinematics

/// Plate-frame point expressed in the pivot frame at closing angle psi.
inline Vec2 plate_to_pivot(Vec2 p, double psi_deg) { return rotate(p, -deg2rad(psi_deg)); }

inline double spring_length_mm(const ClawGeometry& g, double psi_deg) {
  return norm(plate_to_pivot(g.spring_anchor_claw, psi_deg) - g.spring_anchor_frame);
}

inline double spring_extension_mm(const ClawGeometry& g, const SpringSpec& s, double psi_deg) {
  return spring_length_mm(g, psi_deg) - s.free_length_mm;
}

/// Spring potential of one half, joules.
inline double spring_potential_j(const ClawGeometry& g, const SpringSpec& s, double psi_deg) {
  return spring_energy_j(s, spring_extension_mm(g, s, psi_deg));
}

namespace detail {

// Torque without the domain check, N*m.
inline double torque_unchecked(const ClawGeometry& g, const SpringSpec& s, double psi_deg) {
  const Vec2 p = plate_to_pivot(g.spring_anchor_claw, psi_deg);
  const Vec2 f = g.spring_anchor_frame;
  const double len = norm(p - f);
  const double force = spring_force(s, len - s.free_length_mm);
  if (force == 0.0 || len == 0.0) return 0.0;
  // d(len)/d(psi) per radian; dp/dpsi = (p.y, -p.x) for clockwise closing.
  const double dlen = (f.y * p.x - f.x * p.y) / len;
  return -force * dlen * 1e-3;
}

}  // namespace detail

/// Spring torque about the pivot of one half, N*m, positive closing.
inline double claw_torque(const ClawGeometry& g, const SpringSpec& s, double psi_deg) {
  constexpr double tol = 1e-9;
  if (psi_deg < g.psi_open_deg - tol || psi_deg > g.psi_closed_deg + tol)
    throw DomainError("claw angle outside [psi_open, psi_closed]");
  return detail::torque_unchecked(g, s, psi_deg);
}

struct SnapPoint {
  double angle_deg = 0.0;
  bool at_boundary = false;  // spring line already through the pivot at psi_open
};

/// Unique zero of the spring torque between the open and closed angles.
inline SnapPoint snap_angle(const ClawGeometry& g, const SpringSpec& s) {
  const double lo0 = g.psi_open_deg;
  const double hi0 = g.psi_closed_deg;
  const double t_lo = detail::torque_unchecked(g, s, lo0);
  if (std::abs(t_lo) < 1e-12) return {lo0, true};
  const double t_hi = detail::torque_unchecked(g, s, hi0);
  if (!(t_lo < 0.0 && t_hi > 0.0)) throw GeometryNotBistable("spring torque does not change sign over the claw stroke");
  double lo = lo0;
  double hi = hi0;
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    if (detail::torque_unchecked(g, s, mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return {0.5 * (lo + hi), false};
}

/// Force at the trigger needed to tip the open claw past its stop.
inline double release_force(const ClawGeometry& g, const SpringSpec& s) {
  if (!(g.trigger_lever_mm > 0.0)) throw DomainError("trigger lever must be positive");
  return std::abs(claw_torque(g, s, g.psi_open_deg)) / (g.trigger_lever_mm * 1e-3);
}

// ---------------------------------------------------------------------------
// Contact line and seating on a branch

/// Contact line of one plate in its own frame: straight segment, rounded
/// part, then the spike.
struct ContactLine {
  Vec2 seg_start;
  Vec2 seg_end;
  Vec2 arc_center;
  double arc_radius;
  double arc_start_rad;  // polar angle of seg_end about arc_center
  double arc_sweep_rad;  // swept clockwise
  Vec2 arc_end;
  Vec2 spike_tip;
};

inline ContactLine contact_line(const ClawGeometry& g) {
  ContactLine c{};
  const double h = deg2rad(g.profile_heading_deg);
  const Vec2 u{std::cos(h), std::sin(h)};
  const Vec2 inward{u.y, -u.x};
  c.seg_start = g.profile_origin_mm;
  c.seg_end = c.seg_start + u * g.straight_segment_mm;
  c.arc_radius = g.round_radius_mm;
  c.arc_center = c.seg_end + inward * g.round_radius_mm;
  c.arc_start_rad = std::atan2(c.seg_end.y - c.arc_center.y, c.seg_end.x - c.arc_center.x);
  c.arc_sweep_rad = deg2rad(g.tip_sweep_deg);
  const double a_end = c.arc_start_rad - c.arc_sweep_rad;
  c.arc_end = c.arc_center + Vec2{std::cos(a_end), std::sin(a_end)} * c.arc_radius;
  const Vec2 tangent = rotate(u, -c.arc_sweep_rad);
  c.spike_tip = c.arc_end + tangent * g.spike_offset_mm;
  return c;
}

namespace detail {

inline Vec2 closest_on_segment(Vec2 a, Vec2 b, Vec2 p) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

inline Vec2 closest_on_arc(const ContactLine& c, Vec2 p) {
  const Vec2 d = p - c.arc_center;
  if (c.arc_radius <= 0.0) return c.seg_end;
  double a = std::atan2(d.y, d.x);
  // Offset clockwise from the arc start, in [0, 2pi).
  double off = std::fmod(c.arc_start_rad - a, 2.0 * std::numbers::pi);
  if (off < 0.0) off += 2.0 * std::numbers::pi;
  if (off <= c.arc_sweep_rad) return c.arc_center + Vec2{std::cos(a), std::sin(a)} * c.arc_radius;
  return norm(p - c.seg_end) < norm(p - c.arc_end) ? c.seg_end : c.arc_end;
}

/// Closest point of the contact line to `p`, all in the plate frame.
inline Vec2 closest_on_line(const ContactLine& c, Vec2 p) {
  const Vec2 cands[3] = {closest_on_segment(c.seg_start, c.seg_end, p), closest_on_arc(c, p),
                         closest_on_segment(c.arc_end, c.spike_tip, p)};
  Vec2 best = cands[0];
  for (const Vec2& q : cands)
    if (norm(q - p) < norm(best - p)) best = q;
  return best;
}

}  // namespace detail

inline Vec2 pivot_position_mm(const ClawGeometry& g) { return {0.5 * g.pivot_spacing_mm, 0.0}; }

/// Branch centre when seated against the triggers.
inline Vec2 seated_branch_center_mm(const ClawGeometry& g, double diameter_m) {
  return {0.0, -(g.seat_depth_mm + 500.0 * diameter_m)};
}

/// Where the closing plate meets a seated branch.
struct Seat {
  double angle_deg = 0.0;  // closing angle at first contact
  Vec2 point_mm;           // contact point, claw frame
  double lever_mm = 0.0;   // pivot to the contact normal line
};

/// Closes one plate onto a seated branch of the given diameter. Throws
/// NoSpikeContact when the plate tips cross the symmetry plane first or the
/// plate reaches its stop without touching the branch.
inline Seat seat_on_branch(const ClawGeometry& g, double diameter_m) {
  if (!(diameter_m > 0.0)) throw DomainError("branch diameter must be positive");
  const ContactLine line = contact_line(g);
  const Vec2 pivot = pivot_position_mm(g);
  const Vec2 center = seated_branch_center_mm(g, diameter_m);
  const double radius = 500.0 * diameter_m;
  // Express the branch centre in the plate frame instead of moving the plate.
  const auto gap = [&](double psi) {
    const Vec2 local = rotate(center - pivot, deg2rad(psi));
    return norm(detail::closest_on_line(line, local) - local) - radius;
  };
  const auto tip_x = [&](double psi) { return (pivot + plate_to_pivot(line.spike_tip, psi)).x; };

  constexpr double step = 0.05;
  double prev = g.psi_open_deg;
  if (gap(prev) <= 0.0) {
    // Already touching while open: contact at the stop.
    const Vec2 local = rotate(center - pivot, deg2rad(prev));
    const Vec2 k = detail::closest_on_line(line, local);
    const Vec2 kw = pivot + plate_to_pivot(k, prev);
    const Vec2 n = (kw - center) * (1.0 / norm(kw - center));
    return {prev, kw, std::abs(cross(kw - pivot, n))};
  }
  for (double psi = prev + step; psi <= g.psi_closed_deg + 1e-12; psi += step) {
    if (tip_x(psi) <= 0.0 && gap(psi) > 0.0) throw NoSpikeContact("claw tips meet before reaching the branch");
    if (gap(psi) <= 0.0) {
      double lo = prev;
      double hi = psi;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? lo : hi) = mid;
      }
      const double a = hi;
      if (tip_x(a) <= 0.0) throw NoSpikeContact("claw tips meet before reaching the branch");
      const Vec2 local = rotate(center - pivot, deg2rad(a));
      const Vec2 k = pivot + plate_to_pivot(detail::closest_on_line(line, local), a);
      const Vec2 n = (k - center) * (1.0 / norm(k - center));
      return {a, k, std::abs(cross(k - pivot, n))};
    }
    prev = psi;
  }
  throw NoSpikeContact("claw reaches its stop without touching the branch");
}

/// Total normal force of both halves on a seated branch, N. Zero when the
/// plates meet the branch before passing the snap angle.
inline double contact_force(const ClawGeometry& g, const SpringSpec& s, const BranchSpec& branch) {
  const Seat seat = seat_on_branch(g, branch.diameter_m);
  const double torque = detail::torque_unchecked(g, s, seat.angle_deg);
  if (torque <= 0.0 || seat.lever_mm <= 0.0) return 0.0;
  return 2.0 * torque / (seat.lever_mm * 1e-3);
}

/// Slip-limited torque about the branch axis, N*m.
inline double holding_torque(const ClawGeometry& g, const SpringSpec& s, const BranchSpec& branch) {
  return branch.mu_eff() * contact_force(g, s, branch) * branch.radius_m();
}

/// Smallest diameter (m) that still gets spike contact, by bisection over
/// [lo, hi]. Returns hi if even hi fails.
inline double minimum_branch_diameter(const ClawGeometry& g, double lo = 0.005, double hi = 0.08) {
  const auto ok = [&](double d) {
    try {
      seat_on_branch(g, d);
      return true;
    } catch (const NoSpikeContact&) {
      return false;
    }
  };
  if (ok(lo)) return lo;
  if (!ok(hi)) return hi;
  for (int i = 0; i < 50; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// Torque the plate rows can resist about an axis normal to the branch in
/// the flight plane before the claw twists off.
inline double twist_capacity(const ClawGeometry& g, const SpringSpec& s, const BranchSpec& branch) {
  return 0.5 * contact_force(g, s, branch) * g.plate_spacing_mm * 1e-3;
}

// ---------------------------------------------------------------------------
// Closing dynamics

struct ClosingResult {
  std::vector<ClawState> series;  // one sample per integration step
  std::vector<double> time_s;
  double close_time_ms = 0.0;
  double closing_rate_dps = 0.0;  // plate rate on reaching psi_closed
};

/// Trigger release to closure: I*psi'' = tau(psi) + tau_trigger - I*c*psi'.
/// The branch keeps pushing the trigger with `trigger_force_n` until the
/// plate passes the snap angle; from there the spring alone closes it.
inline ClosingResult closing_dynamics(const ClawGeometry& g, const SpringSpec& s,
                                      double damping_per_s = kDefaultClosingDamping, double dt_s = 1e-4) {
  if (!(dt_s > 0.0 && dt_s <= 1e-4 + 1e-15)) throw DomainError("closing dynamics needs 0 < dt <= 0.1 ms");
  if (!(g.claw_inertia_kgm2 > 0.0)) throw DomainError("claw inertia must be positive");
  const double inertia = g.claw_inertia_kgm2;
  const double psi_end = deg2rad(g.psi_closed_deg);
  const double snap = deg2rad(snap_angle(g, s).angle_deg);
  const double push = g.trigger_force_n * g.trigger_lever_mm * 1e-3;
  const auto rhs = [&](double, const StateVec<2>& y) {
    const double psi_deg = std::clamp(rad2deg(y[0]), g.psi_open_deg, g.psi_closed_deg);
    const double drive = detail::torque_unchecked(g, s, psi_deg) + (y[0] < snap ? push : 0.0);
    return StateVec<2>{y[1], drive / inertia - damping_per_s * y[1]};
  };
  StateVec<2> y{deg2rad(g.psi_open_deg), 0.0};
  ClosingResult out;
  const auto record = [&](double t, const StateVec<2>& st, ClawMode mode) {
    const double psi = rad2deg(st[0]);
    out.series.push_back({psi, rad2deg(st[1]), spring_extension_mm(g, s, psi), mode});
    out.time_s.push_back(t);
  };
  double t = 0.0;
  record(t, y, ClawMode::Closing);
  while (t < 1.0) {
    StateVec<2> next = rk4_step(y, t, dt_s, rhs);
    if (!all_finite(next)) throw IntegrationError("claw closing diverged");
    if (next[0] >= psi_end) {
      // Shorten the final step so the plate lands exactly on the stop.
      double lo = 0.0;
      double hi = dt_s;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (rk4_step(y, t, mid, rhs)[0] < psi_end ? lo : hi) = mid;
      }
      next = rk4_step(y, t, hi, rhs);
      next[0] = psi_end;
      t += hi;
      record(t, next, ClawMode::Locked);
      out.close_time_ms = t * 1e3;
      out.closing_rate_dps = rad2deg(next[1]);
      return out;
    }
    y = next;
    t += dt_s;
    record(t, y, ClawMode::Closing);
  }
  throw StalledClaw("claw did not reach its closed angle within 1 s");
}

// ---------------------------------------------------------------------------
// Tendon re-opening

struct ReopenParams {
  double pull_capacity_n = 200.0;
  double travel_mm = 12.0;
  double speed_mm_s = 0.6;
  double drive_efficiency = 0.02;  // electrical to tendon work, leadscrew + motor
};

struct ReopenResult {
  double duration_s = 0.0;
  double avg_power_w = 0.0;
  double peak_tendon_force_n = 0.0;
  double work_j = 0.0;
};

/// Pulls both plates from the closure stop back to the open stop. The tendon
/// stroke maps linearly onto the closing angle.
inline ReopenResult reopen_profile(const ClawGeometry& g, const SpringSpec& s, const ReopenParams& p = {}) {
  if (p.travel_mm < 0.0 || !(p.speed_mm_s > 0.0) || !(p.drive_efficiency > 0.0))
    throw DomainError("re-opening needs travel >= 0, speed > 0 and efficiency > 0");
  if (p.travel_mm == 0.0) return {};
  const double span_rad = deg2rad(g.psi_closed_deg - g.psi_open_deg);
  const double lever_m = p.travel_mm * 1e-3 / span_rad;  // tendon metres per radian
  const auto force_at = [&](double x_mm) {
    const double psi = g.psi_closed_deg - (g.psi_closed_deg - g.psi_open_deg) * x_mm / p.travel_mm;
    return 2.0 * std::max(0.0, detail::torque_unchecked(g, s, psi)) / lever_m;
  };
  constexpr int n = 4000;  // Simpson panels
  const double h = p.travel_mm / n;
  double peak = 0.0;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double f = force_at(i * h);
    peak = std::max(peak, f);
    sum += f * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  const double work = sum * h / 3.0 * 1e-3;
  if (peak > p.pull_capacity_n) throw CannotReopen("tendon force exceeds the drive's pull capacity");
  ReopenResult r;
  r.duration_s = p.travel_mm / p.speed_mm_s;
  r.work_j = work;
  r.avg_power_w = work / (r.duration_s * p.drive_efficiency);
  r.peak_tendon_force_n = peak;
  return r;
}

// ---------------------------------------------------------------------------

/// Type invariants; throws DomainError on violation.
inline void validate(const ClawGeometry& g, const SpringSpec& s) {
  if (!(s.rate_n_per_mm > 0.0 && s.max_force_n > 0.0)) throw DomainError("spring rate and rating must be positive");
  if (!(g.pivot_spacing_mm > 0.0)) throw DomainError("pivot spacing must be positive");
  if (!(g.inner_radius_mm > 30.0)) throw DomainError("inner radius must clear the 6 cm nominal branch");
  if (!(g.psi_open_deg < 0.0 && g.psi_open_deg < g.psi_closed_deg)) throw DomainError("open angle must be negative");
  // Largest extension over the stroke stays within the spring rating.
  double max_ext = 0.0;
  for (double psi = g.psi_open_deg; psi <= g.psi_closed_deg; psi += 0.1)
    max_ext = std::max(max_ext, spring_extension_mm(g, s, psi));
  if (exceeds_rating(s, max_ext)) throw DomainError("spring rating exceeded over the stroke");
  snap_angle(g, s);
}

}  // namespace perchsim::claw
