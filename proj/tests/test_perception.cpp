#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "perchsim/perception.hpp"

using namespace perchsim;
using namespace perchsim::perception;

namespace {

BranchSpec branch_at(double x, double z) {
  BranchSpec b;
  b.center = {x, 0.0, z};
  return b;
}

// Residual pixel offset RMS of a branch seen from a claw on a body heaving
// at `hz`. The leg loop runs at the sensor rate; the servo at 10 kHz.
double tracking_rms(bool closed, double amplitude_m, double hz, double range_m) {
  const SensorSpec spec;
  const BranchSpec b = branch_at(range_m, 2.0);
  RandomStream rng(7, 0);
  const LegLoopGains g;
  LegLoopState st;
  st.beta_cmd_deg = 60.0;
  double beta = 60.0;
  const ServoSpec servo;
  const double reach = 0.3;
  const double dt = 1e-4;
  const double frame = 1.0 / spec.effective_rate_hz;
  double next = 0.0, sum2 = 0.0;
  int n = 0;
  const int steps = 30000;
  for (int i = 0; i < steps; ++i) {
    const double t = i * dt;
    const double body = 2.0 + reach * std::cos(deg2rad(60.0)) + amplitude_m * std::sin(2.0 * std::numbers::pi * hz * t);
    const SensorPose pose{0.0, body - reach * std::cos(deg2rad(beta)), 0.0};
    if (t + 1e-12 >= next) {
      next += frame;
      const auto px = detect_branch(render_scan(pose, b, spec, &rng, t), spec);
      if (closed) st = leg_pd_step(px ? *px - spec.centre_px() : 0.0, g, frame, st);
      if (t > 1.0) {
        const double e = true_branch_pixel(pose, b, spec) - spec.centre_px();
        sum2 += e * e;
        ++n;
      }
    }
    beta = servo_step(beta, st.beta_cmd_deg, servo, dt);
  }
  return std::sqrt(sum2 / n);
}

}  // namespace

TEST(Detection, GeometricLimitNearSevenPointSevenMetres) {
  const double d = detection_limit(SensorSpec{}, 0.06);
  EXPECT_NEAR(d, 7.7, 0.77);
  // Recomputed: 28 arcmin per pixel.
  EXPECT_NEAR(d, 0.06 / std::tan(28.0 / 60.0 * std::numbers::pi / 180.0), 1e-12);
  EXPECT_NEAR(detection_limit(SensorSpec{}, 0.06, 2.0), 0.5 * d, 1e-3);
  EXPECT_THROW(detection_limit(SensorSpec{}, 0.0), DomainError);
  EXPECT_THROW(detection_limit(SensorSpec{}, 0.06, 0.0), DomainError);
}

TEST(Detection, ReliableAtOnePointNineMetres) {
  const SensorSpec spec;
  RandomStream rng(2024, 0);
  int hits = 0;
  for (int k = 0; k < 1000; ++k) {
    // Branch anywhere within +-20 px of the boresight.
    const double z = 1.9 * std::tan((rng.uniform() - 0.5) * 40.0 * spec.ifov_rad());
    const BranchSpec b = branch_at(1.9, z);
    const SensorPose pose{};
    const auto px = detect_branch(render_scan(pose, b, spec, &rng), spec);
    if (px && std::abs(*px - true_branch_pixel(pose, b, spec)) <= 1.0) ++hits;
  }
  EXPECT_GE(hits, 990);
}

TEST(Detection, NoiseFreeCentreIsExact) {
  const SensorSpec spec;
  const BranchSpec b = branch_at(0.8, 0.0);
  const auto px = detect_branch(render_scan({}, b, spec, nullptr), spec);
  ASSERT_TRUE(px.has_value());
  EXPECT_NEAR(*px, spec.centre_px(), 0.5);
}

TEST(Detection, InvariantToUniformGain) {
  const SensorSpec spec;
  for (double z : {-0.2, 0.0, 0.1, 0.25}) {
    const BranchSpec b = branch_at(1.2, z);
    const auto ref = detect_branch(render_scan({}, b, spec, nullptr, 0.0, 1.0), spec);
    for (double gain : {0.2, 0.5, 0.9}) {
      const auto px = detect_branch(render_scan({}, b, spec, nullptr, 0.0, gain), spec);
      ASSERT_EQ(px.has_value(), ref.has_value());
      if (px) {
        EXPECT_EQ(*px, *ref) << z << " " << gain;
      }
    }
  }
}

TEST(Detection, HighestDarkRunWins) {
  const SensorSpec spec;
  SensorFrame f;
  f.brightness.assign(128, 0.0);
  for (int i = 0; i < 128; ++i) f.brightness[static_cast<std::size_t>(i)] = std::cos(spec.pixel_angle(i));
  for (int i = 20; i < 26; ++i) f.brightness[static_cast<std::size_t>(i)] = 0.05;
  for (int i = 90; i < 94; ++i) f.brightness[static_cast<std::size_t>(i)] = 0.05;
  f.brightness[110] = 0.05;  // single pixel: below the minimum run
  const auto px = detect_branch(f, spec);
  ASSERT_TRUE(px.has_value());
  EXPECT_DOUBLE_EQ(*px, 91.5);
}

TEST(Detection, NothingToSee) {
  const SensorSpec spec;
  EXPECT_FALSE(detect_branch(render_scan({}, branch_at(-1.0, 0.0), spec, nullptr), spec).has_value());
  EXPECT_FALSE(detect_branch(SensorFrame{}, spec).has_value());
  SensorSpec bad;
  bad.pixels = 64;
  EXPECT_THROW(validate(bad), DomainError);
  bad = SensorSpec{};
  bad.effective_rate_hz = 400.0;
  EXPECT_THROW(validate(bad), DomainError);
}

TEST(LegLoop, HeldZeroOffsetKeepsTheCommand) {
  LegLoopState st;
  st.beta_cmd_deg = 45.0;
  for (int i = 0; i < 100; ++i) st = leg_pd_step(0.0, LegLoopGains{}, 0.005, st);
  EXPECT_EQ(st.beta_cmd_deg, 45.0);
}

TEST(LegLoop, RateLimitedAndClamped) {
  const LegLoopGains g;
  LegLoopState st;
  st.beta_cmd_deg = 45.0;
  const LegLoopState up = leg_pd_step(100.0, g, 0.005, st);
  EXPECT_NEAR(up.beta_cmd_deg - 45.0, g.max_rate_dps * 0.005, 1e-12);
  st.beta_cmd_deg = 89.9;
  EXPECT_EQ(leg_pd_step(100.0, g, 0.005, st).beta_cmd_deg, 90.0);
  EXPECT_THROW(leg_pd_step(1.0, g, 0.0, st), DomainError);
}

TEST(LegLoop, ServoNeverOvershootsTheCommand) {
  const ServoSpec s;
  double beta = 0.0;
  for (int i = 0; i < 10000; ++i) {
    beta = servo_step(beta, 30.0, s, 1e-3);
    ASSERT_LE(beta, 30.0);
  }
  EXPECT_NEAR(beta, 30.0, 1e-9);
  EXPECT_NEAR(servo_step(0.0, 90.0, s, 0.01), s.max_rate_dps * 0.01, 1e-12);
}

TEST(LegLoop, SuppressesATwoHertzOscillation) {
  const double open = tracking_rms(false, 0.05, 2.0, 0.5);
  const double closed = tracking_rms(true, 0.05, 2.0, 0.5);
  EXPECT_GT(open, 3.0);
  EXPECT_LT(closed, 0.25 * open);
}
