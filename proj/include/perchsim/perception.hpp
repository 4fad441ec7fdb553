// Line-scan branch sensing on the claw and the leg loop that uses it.
//
// The sensor is a single column of pixels looking forward along the flight
// line. Pixel 0 is the lowest in the scene and the index grows upwards. A
// branch shows as a dark band on a bright background; the detector divides
// out the off-axis cosine falloff, thresholds at a fraction of the mean
// brightness and keeps the highest dark run.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "perchsim/branch.hpp"
#include "perchsim/common.hpp"
#include "perchsim/rng.hpp"

namespace perchsim::perception {

struct SensorSpec {
  int pixels = 128;
  double ifov_arcmin = 28.0;
  double read_rate_hz = 330.0;
  double effective_rate_hz = 200.0;
  double noise_sigma = 0.02;       // additive, in brightness units
  double threshold_fraction = 0.6;  // dark below this fraction of the mean
  int min_run_px = 2;
  double background = 1.0;
  double branch_brightness = 0.1;

  double ifov_rad() const { return deg2rad(ifov_arcmin / 60.0); }
  /// Angle of the pixel centre above the boresight, rad.
  double pixel_angle(int i) const { return (i - 0.5 * (pixels - 1)) * ifov_rad(); }
  double centre_px() const { return 0.5 * (pixels - 1); }
};

inline void validate(const SensorSpec& s) {
  if (s.pixels != 128) throw DomainError("the line-scan sensor has 128 pixels");
  if (!(s.ifov_arcmin > 0.0)) throw DomainError("pixel field of view must be positive");
  if (s.effective_rate_hz > s.read_rate_hz) throw DomainError("effective rate above the sensor read rate");
  if (s.min_run_px < 1) throw DomainError("minimum run length must be at least one pixel");
}

struct SensorFrame {
  std::vector<double> brightness;  // one value per pixel, in [0, 1]
  double timestamp_s = 0.0;
};

/// Sensor position in the vertical flight plane (x forward, z up) and the
/// boresight elevation above horizontal.
struct SensorPose {
  double x_m = 0.0;
  double z_m = 0.0;
  double boresight_deg = 0.0;
};

/// Pixel index the branch centre projects to, possibly outside the array.
inline double true_branch_pixel(const SensorPose& pose, const BranchSpec& b, const SensorSpec& spec) {
  const double elev = std::atan2(b.center.z - pose.z_m, b.center.x - pose.x_m) - deg2rad(pose.boresight_deg);
  return spec.centre_px() + elev / spec.ifov_rad();
}

/// `rng` may be null for a noise-free frame. `gain` scales the whole scene.
inline SensorFrame render_scan(const SensorPose& pose, const BranchSpec& b, const SensorSpec& spec, RandomStream* rng,
                               double timestamp_s = 0.0, double gain = 1.0) {
  validate(spec);
  SensorFrame f;
  f.timestamp_s = timestamp_s;
  f.brightness.assign(static_cast<std::size_t>(spec.pixels), 0.0);
  const double dx = b.center.x - pose.x_m;
  const double dz = b.center.z - pose.z_m;
  const double dist = std::hypot(dx, dz);
  const double w = spec.ifov_rad();
  double lo = 0.0, hi = 0.0;  // branch angular extent relative to the boresight
  const bool visible = dx > 0.0 && dist > b.radius_m();
  if (visible) {
    const double centre = std::atan2(dz, dx) - deg2rad(pose.boresight_deg);
    const double half = std::asin(b.radius_m() / dist);
    lo = centre - half;
    hi = centre + half;
  }
  for (int i = 0; i < spec.pixels; ++i) {
    const double a = spec.pixel_angle(i);
    double cover = 0.0;
    if (visible) cover = std::max(0.0, std::min(hi, a + 0.5 * w) - std::max(lo, a - 0.5 * w)) / w;
    const double scene = spec.background + cover * (spec.branch_brightness - spec.background);
    double v = gain * std::cos(a) * scene;
    if (rng) v += spec.noise_sigma * rng->normal();
    f.brightness[static_cast<std::size_t>(i)] = std::clamp(v, 0.0, 1.0);
  }
  return f;
}

/// Centre of the highest dark run, in pixels, or nothing.
inline std::optional<double> detect_branch(const SensorFrame& frame, const SensorSpec& spec) {
  const int n = static_cast<int>(frame.brightness.size());
  if (n == 0) return std::nullopt;
  std::vector<double> rect(static_cast<std::size_t>(n));
  double mean = 0.0;
  for (int i = 0; i < n; ++i) {
    rect[static_cast<std::size_t>(i)] = frame.brightness[static_cast<std::size_t>(i)] / std::cos(spec.pixel_angle(i));
    mean += rect[static_cast<std::size_t>(i)];
  }
  mean /= n;
  const double threshold = spec.threshold_fraction * mean;
  // Walk downwards from the top so the first qualifying run is the highest.
  int run_end = -1;
  for (int i = n - 1; i >= -1; --i) {
    const bool dark = i >= 0 && rect[static_cast<std::size_t>(i)] < threshold;
    if (dark && run_end < 0) run_end = i;
    if (!dark && run_end >= 0) {
      const int run_start = i + 1;
      if (run_end - run_start + 1 >= spec.min_run_px) return 0.5 * (run_start + run_end);
      run_end = -1;
    }
  }
  return std::nullopt;
}

/// Distance at which a branch of `diameter_m` spans `min_pixels` pixels.
inline double detection_limit(const SensorSpec& spec, double diameter_m, double min_pixels = 1.0) {
  if (!(diameter_m > 0.0)) throw DomainError("branch diameter must be positive");
  if (!(min_pixels > 0.0)) throw DomainError("pixel count must be positive");
  return diameter_m / std::tan(min_pixels * spec.ifov_rad());
}

// ---------------------------------------------------------------------------
// Leg loop

struct LegLoopGains {
  double kp = 150.0;  // deg/s of leg command per pixel of offset
  double kd = 1.0;    // deg of leg command per pixel change
  double max_rate_dps = 600.0;
  double beta_min_deg = 0.0;
  double beta_max_deg = 90.0;
};

struct LegLoopState {
  double beta_cmd_deg = 90.0;
  double prev_offset_px = 0.0;
};

/// One sensor update. The command moves by kp*e*dt + kd*(e - e_prev), so a
/// held zero offset leaves it where it is; a positive offset (branch above
/// the boresight) raises the claw by opening the leg towards horizontal.
inline LegLoopState leg_pd_step(double offset_px, const LegLoopGains& g, double dt_s, LegLoopState st) {
  if (!(dt_s > 0.0)) throw DomainError("leg loop step must be positive");
  double step = g.kp * offset_px * dt_s + g.kd * (offset_px - st.prev_offset_px);
  const double lim = g.max_rate_dps * dt_s;
  step = std::clamp(step, -lim, lim);
  st.beta_cmd_deg = std::clamp(st.beta_cmd_deg + step, g.beta_min_deg, g.beta_max_deg);
  st.prev_offset_px = offset_px;
  return st;
}

/// Leg servo: first-order lag towards the command with a rate limit.
struct ServoSpec {
  double lag_s = 0.030;
  double max_rate_dps = 600.0;
};

inline double servo_step(double beta_deg, double beta_cmd_deg, const ServoSpec& s, double dt_s) {
  const double rate = std::clamp((beta_cmd_deg - beta_deg) / s.lag_s, -s.max_rate_dps, s.max_rate_dps);
  const double next = beta_deg + rate * dt_s;
  // Never step past the command.
  return (beta_cmd_deg - beta_deg) * (beta_cmd_deg - next) < 0.0 ? beta_cmd_deg : next;
}

}  // namespace perchsim::perception
