#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "perchsim/flight_plant.hpp"

using namespace perchsim;
using namespace perchsim::flight;

namespace {

RobotState trimmed(double pitch_deg, const RobotParams& p, double z = 2.0) {
  const auto t = trim_state(pitch_deg, p);
  RobotState s;
  s.vx = t->speed_mps;
  s.z = z;
  s.pitch_deg = pitch_deg;
  return s;
}

RobotState fly(RobotState s, const ControlCommand& c, const RobotParams& p, double duration, double dt) {
  const int n = static_cast<int>(std::lround(duration / dt));
  for (int i = 0; i < n; ++i) s = plant_step(s, c, p, dt);
  return s;
}

}  // namespace

TEST(Trim, ThirtyDegreesFliesSlowly) {
  const auto t = trim_state(30.0, RobotParams{});
  ASSERT_TRUE(t.has_value());
  EXPECT_GE(t->speed_mps, 2.5);
  EXPECT_LE(t->speed_mps, 3.0);
  EXPECT_LE(t->flap_hz, RobotParams{}.max_flap_hz);
}

TEST(Trim, InfeasibleAboveFortyDegrees) {
  EXPECT_TRUE(trim_state(40.0, RobotParams{}).has_value());
  for (double th = 40.5; th <= 60.0; th += 0.5) EXPECT_FALSE(trim_state(th, RobotParams{}).has_value()) << th;
  EXPECT_THROW(trim_state(61.0, RobotParams{}), DomainError);
  EXPECT_THROW(trim_state(-1.0, RobotParams{}), DomainError);
}

TEST(Trim, SpeedFallsAsPitchRises) {
  double prev = 1e9;
  for (double th = 0.0; th <= 40.0; th += 2.0) {
    const auto t = trim_state(th, RobotParams{});
    ASSERT_TRUE(t.has_value());
    EXPECT_LT(t->speed_mps, prev);
    prev = t->speed_mps;
  }
}

// The trim solver and the equations of motion are separate code paths; at
// the trim point the translational accelerations must vanish.
TEST(Trim, IsAnEquilibriumOfTheDynamics) {
  RobotParams p;
  p.flap_oscillation_gain = 0.0;
  for (double th : {0.0, 15.0, 30.0, 40.0}) {
    const auto t = *trim_state(th, p);
    const RobotState s = trimmed(th, p);
    ControlCommand c;
    c.flap_hz = t.flap_hz;
    const auto d = detail::derivative(0.0, detail::pack(s), c, p, {}, 0.0, 0.0);
    EXPECT_NEAR(d[3], 0.0, 1e-9) << th;
    EXPECT_NEAR(d[5], 0.0, 1e-9) << th;
  }
}

TEST(Thrust, QuadraticInFrequencyAndClamped) {
  const RobotParams p;
  EXPECT_DOUBLE_EQ(thrust_model(p.max_flap_hz, p).force_n, p.max_flap_force_n);
  EXPECT_NEAR(thrust_model(0.5 * p.max_flap_hz, p).force_n, 0.25 * p.max_flap_force_n, 1e-12);
  EXPECT_FALSE(thrust_model(3.0, p).clamped);
  const Thrust hi = thrust_model(9.0, p);
  EXPECT_TRUE(hi.clamped);
  EXPECT_DOUBLE_EQ(hi.force_n, p.max_flap_force_n);
  const Thrust lo = thrust_model(-1.0, p);
  EXPECT_TRUE(lo.clamped);
  EXPECT_EQ(lo.force_n, 0.0);
}

// Independent DFT of the heave signal: the dominant line sits at the flap
// frequency.
TEST(Heave, OscillatesAtTheFlapFrequency) {
  const RobotParams p;
  const double f = trim_state(30.0, p)->flap_hz;
  RobotState s = trimmed(30.0, p);
  ControlCommand c;
  c.flap_hz = f;
  const double dt = 1.0 / 960.0;
  s = fly(s, c, p, 2.0, dt);  // let the transient die out
  std::vector<double> heave;
  for (int i = 0; i < 960 * 4; ++i) {
    s = plant_step(s, c, p, dt);
    heave.push_back(s.heave_m);
  }
  double best_hz = 0.0, best_mag = 0.0;
  for (double hz = 0.5; hz <= 12.0; hz += 0.01) {
    std::complex<double> acc{};
    for (std::size_t k = 0; k < heave.size(); ++k)
      acc += heave[k] * std::polar(1.0, -2.0 * std::numbers::pi * hz * static_cast<double>(k) * dt);
    if (std::abs(acc) > best_mag) {
      best_mag = std::abs(acc);
      best_hz = hz;
    }
  }
  EXPECT_NEAR(best_hz, f, 0.05);
  EXPECT_GT(best_mag, 0.0);
}

TEST(Heave, AbsentWithoutFlapping) {
  const RobotParams p;
  RobotState s = trimmed(30.0, p);
  s = fly(s, ControlCommand{}, p, 0.5, 1.0 / 960.0);
  EXPECT_EQ(s.heave_m, 0.0);
  EXPECT_EQ(s.heave_rate_mps, 0.0);
}

TEST(Plant, HalvingTheStepBarelyMovesTheState) {
  const RobotParams p;
  const RobotState s0 = trimmed(30.0, p);
  ControlCommand c;
  c.flap_hz = trim_state(30.0, p)->flap_hz;
  c.delta_e_deg = 3.0;
  c.delta_r_deg = 2.0;
  const RobotState a = fly(s0, c, p, 1.0, 1.0 / 480.0);
  const RobotState b = fly(s0, c, p, 1.0, 1.0 / 960.0);
  EXPECT_NEAR(a.x, b.x, 1e-4);
  EXPECT_NEAR(a.z, b.z, 1e-4);
  EXPECT_NEAR(a.pitch_deg, b.pitch_deg, 1e-3);
  EXPECT_NEAR(a.yaw_deg, b.yaw_deg, 1e-3);
}

TEST(Plant, ElevatorStepIsNonMinimumPhaseInAltitude) {
  RobotParams p;
  p.flap_oscillation_gain = 0.0;
  RobotState s = trimmed(0.0, p);
  ControlCommand c;
  c.flap_hz = trim_state(0.0, p)->flap_hz;
  c.delta_e_deg = 10.0;
  const double z0 = s.z;
  double z_min = z0;
  const double dt = 1.0 / 960.0;
  for (int i = 0; i < 960 * 2; ++i) {
    s = plant_step(s, c, p, dt);
    z_min = std::min(z_min, s.z);
  }
  EXPECT_LT(z_min, z0 - 1e-3);  // dips first
  EXPECT_GT(s.z, z0 + 0.1);     // then climbs
  EXPECT_GT(s.pitch_deg, 10.0);
}

TEST(Plant, BallisticFlightConservesEnergy) {
  RobotParams p;
  p.cl0 = 0.0;
  p.cl_amp = 0.0;
  p.cd0 = 0.0;
  p.induced_k = 0.0;
  RobotState s;
  s.z = 3.0;
  s.vx = 3.0;
  s.vz = 2.0;
  const double e0 = specific_energy(s);
  s = fly(s, ControlCommand{}, p, 0.8, 1.0 / 960.0);
  EXPECT_NEAR(specific_energy(s), e0, 1e-9 * e0);
  EXPECT_NEAR(s.x, 2.4, 1e-9);
}

TEST(Plant, LegServoIsRateLimited) {
  const RobotParams p;
  RobotState s = trimmed(30.0, p);
  s.beta_deg = 90.0;
  ControlCommand c;
  c.flap_hz = trim_state(30.0, p)->flap_hz;
  c.beta_cmd_deg = 0.0;
  s = fly(s, c, p, 0.05, 1.0 / 960.0);
  EXPECT_NEAR(s.beta_deg, 90.0 - p.servo_rate_dps * 0.05, 0.5);
}

TEST(Plant, RejectsCoarseStepsAndStaysAboveGround) {
  const RobotParams p;
  RobotState s;
  EXPECT_THROW(plant_step(s, {}, p, 1.0 / 60.0), DomainError);
  EXPECT_THROW(plant_step(s, {}, p, 0.0), DomainError);
  s.z = 0.01;
  s = fly(s, ControlCommand{}, p, 0.5, 1.0 / 960.0);
  EXPECT_GE(s.z, 0.0);
}
