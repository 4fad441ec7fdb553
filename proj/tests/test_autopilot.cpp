#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "perchsim/autopilot.hpp"

using namespace perchsim;
using namespace perchsim::autopilot;

namespace {

MissionConfig flight_only(double altitude_m) {
  MissionConfig m;
  m.altitude_setpoint_m = altitude_m;
  m.robot = flight::without_appendage(m.robot);
  m.branch_mode = BranchMode::None;
  m.disturbance = DisturbanceSpec::none();
  return m;
}

}  // namespace

TEST(Pid, ProportionalIntegralDerivative) {
  const LoopGains g{2.0, 0.5, 0.1, -100.0, 100.0, 100.0};
  PidState st;
  auto r = pid_step(g, 1.0, 0.0, 0.1, st);
  EXPECT_NEAR(r.actuation, 2.0 + 0.5 * 0.1, 1e-12);  // no derivative on the first call
  r = pid_step(g, 1.0, 0.5, 0.1, r.state);
  EXPECT_NEAR(r.actuation, 1.0 + 0.5 * 0.15 + 0.1 * (0.5 - 1.0) / 0.1, 1e-12);
}

TEST(Pid, IntegratorAndOutputAreClamped) {
  const LoopGains g{0.0, 1.0, 0.0, -0.5, 0.5, 0.3};
  PidState st;
  for (int i = 0; i < 1000; ++i) st = pid_step(g, 1.0, 0.0, 0.01, st).state;
  EXPECT_NEAR(g.ki * st.integral, 0.3, 1e-12);
  const LoopGains big{10.0, 0.0, 0.0, -0.5, 0.5, 0.0};
  EXPECT_EQ(pid_step(big, 1.0, 0.0, 0.01, {}).actuation, 0.5);
  EXPECT_EQ(pid_step(big, -1.0, 0.0, 0.01, {}).actuation, -0.5);
  EXPECT_THROW(pid_step(big, 0.0, 0.0, 0.0, {}), DomainError);
}

TEST(Pid, InvalidGainsAreRejected) {
  LoopGains g;
  g.out_min = 1.0;
  g.out_max = -1.0;
  EXPECT_ANY_THROW(validate(g));
}

TEST(PitchLoop, StepSettlesWithinOneSecond) {
  const StepResponse r = pitch_step_test(MissionConfig{});
  EXPECT_LE(r.settle_time_s, 1.0);
  EXPECT_LT(r.overshoot_deg, 5.0);
  EXPECT_NEAR(r.pitch_deg.back(), 30.0, 2.0);
}

TEST(PitchLoop, TrimElevatorIsIndependentOfSpeed) {
  MissionConfig c;
  const double e30 = Autopilot::trim_elevator(c);
  c.pitch_setpoint_deg = 0.0;
  EXPECT_EQ(Autopilot::trim_elevator(c), 0.0);
  EXPECT_GT(e30, 0.0);
}

TEST(AltitudeLoop, ErrorAtTheBranchWithinTenCentimetres) {
  const MissionConfig m = flight_only(2.0);
  const MissionResult r = run_mission(m);
  ASSERT_TRUE(r.crossing.has_value());
  EXPECT_LE(std::abs(altitude_error_at_branch(r, m)), 0.10);
}

TEST(AltitudeLoop, MeanErrorAcrossSetpoints) {
  double sum = 0.0;
  for (double h : {1.75, 2.0, 2.25}) {
    const MissionConfig m = flight_only(h);
    const MissionResult r = run_mission(m);
    ASSERT_TRUE(r.crossing.has_value()) << h;
    sum += std::abs(altitude_error_at_branch(r, m));
  }
  EXPECT_LE(sum / 3.0, 0.16);
}

TEST(Mission, PhasesRunInOrder) {
  MissionConfig m;
  m.disturbance = DisturbanceSpec::none();
  const MissionResult r = run_mission(m);
  const std::vector<Phase> expected{Phase::Launch,    Phase::ControlledFlight, Phase::Approach,
                                    Phase::GlideStop, Phase::Impact,           Phase::Terminal};
  ASSERT_EQ(r.phase_log.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(r.phase_log[i].second, expected[i]);
    if (i > 0) {
      EXPECT_GE(r.phase_log[i].first, r.phase_log[i - 1].first);
    }
  }
  for (std::size_t i = 1; i < r.trajectory.size(); ++i)
    EXPECT_GE(static_cast<int>(r.trajectory[i].phase), static_cast<int>(r.trajectory[i - 1].phase));
}

TEST(Mission, FlapsStopForTheGlide) {
  MissionConfig m;
  m.disturbance = DisturbanceSpec::none();
  for (const Sample& s : run_mission(m).trajectory) {
    if (s.phase == Phase::GlideStop) {
      EXPECT_EQ(s.cmd.flap_hz, 0.0);
    }
  }
}

TEST(Mission, RailExitMatchesTheLaunchSpeed) {
  MissionConfig m;
  m.disturbance = DisturbanceSpec::none();
  const MissionResult r = run_mission(m);
  const auto exit = std::find_if(r.trajectory.begin(), r.trajectory.end(),
                                 [](const Sample& s) { return s.phase == Phase::ControlledFlight; });
  ASSERT_NE(exit, r.trajectory.end());
  EXPECT_NEAR(std::hypot(exit->state.vx, exit->state.vy), m.launch_speed_mps, 1e-9);
  EXPECT_NEAR(exit->state.x, 0.0, 1e-12);
}

TEST(Mission, DeterministicPerSeed) {
  MissionConfig m;
  m.seed = 3;
  const MissionResult a = run_mission(m);
  const MissionResult b = run_mission(m);
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    EXPECT_EQ(a.trajectory[i].state.z, b.trajectory[i].state.z);
    EXPECT_EQ(a.trajectory[i].state.y, b.trajectory[i].state.y);
  }
  EXPECT_EQ(a.outcome, b.outcome);
  m.seed = 4;
  const MissionResult c = run_mission(m);
  EXPECT_NE(a.trajectory.back().state.z, c.trajectory.back().state.z);
}

TEST(Mission, SoftBranchNeverLocks) {
  MissionConfig m;
  m.branch_mode = BranchMode::Soft;
  m.disturbance = DisturbanceSpec::none();
  const MissionResult r = run_mission(m);
  EXPECT_TRUE(r.contact);
  EXPECT_FALSE(r.impact.locked);
  EXPECT_EQ(r.outcome, touchdown::PerchOutcome::Missed);
}

TEST(Mission, BranchOffToTheSideIsMissed) {
  MissionConfig m;
  m.disturbance = DisturbanceSpec::none();
  m.branch.center.y = 2.0;
  const MissionResult r = run_mission(m);
  EXPECT_FALSE(r.contact);
  EXPECT_EQ(r.outcome, touchdown::PerchOutcome::Missed);
}

TEST(Mission, InvalidConfigsAreRejected) {
  MissionConfig m;
  m.pitch_setpoint_deg = 45.0;
  EXPECT_THROW(run_mission(m), ConfigError);
  m = MissionConfig{};
  m.launch_speed_mps = 5.5;
  EXPECT_THROW(run_mission(m), ConfigError);
  m = MissionConfig{};
  m.glide_range_m = 2.0;
  EXPECT_THROW(run_mission(m), ConfigError);
}

TEST(Disturbance, NoneIsSilent) {
  DisturbanceField f(DisturbanceSpec::none(), 7);
  for (int i = 0; i < 100; ++i) {
    const flight::Disturbance d = f.step(0.01);
    EXPECT_EQ(d.force_n.z, 0.0);
    EXPECT_EQ(d.pitch_moment_nm, 0.0);
  }
}

TEST(Disturbance, StationaryVarianceMatchesSigma) {
  DisturbanceSpec spec;
  DisturbanceField f(spec, 11);
  double s2 = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double v = f.step(0.05).force_n.z;
    s2 += v * v;
  }
  EXPECT_NEAR(std::sqrt(s2 / n), spec.force_z_sigma_n, 0.05 * spec.force_z_sigma_n);
}

TEST(Tuning, StagesMustRunInOrder) {
  TuningProgress p;
  EXPECT_THROW(tuning_procedure(3, MissionConfig{}, p), OrderingError);
  EXPECT_THROW(tuning_procedure(5, MissionConfig{}, p), DomainError);
  for (int s = 1; s <= 3; ++s) {
    const StageReport rep = tuning_procedure(s, MissionConfig{}, p);
    EXPECT_TRUE(rep.passed) << s << ": " << rep.summary;
    EXPECT_TRUE(p.passed(s));
  }
}

TEST(Tuning, FailedStageBlocksTheNext) {
  TuningProgress p;
  MissionConfig bad;
  bad.gains.altitude.kp = 0.0;
  bad.gains.altitude.ki = 0.0;
  bad.gains.altitude.kd = 0.0;
  bad.altitude_setpoint_m = 3.0;
  ASSERT_TRUE(tuning_procedure(1, bad, p).passed);
  EXPECT_FALSE(tuning_procedure(2, bad, p).passed);
  EXPECT_THROW(tuning_procedure(3, bad, p), OrderingError);
}
