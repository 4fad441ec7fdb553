// Flight autopilot and perching mission.
//
// Three loops run at the control rate: pitch to elevator (PI), yaw to rudder
// (PD) and altitude to flap frequency (PI around the trim frequency). During
// the approach the leg loop steers the claw onto the branch from line-scan
// detections at the sensor rate. The mission sequencer runs the launch rail,
// controlled flight, approach, glide and impact, and hands the lock moment
// to the touchdown model.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perchsim/branch.hpp"
#include "perchsim/claw.hpp"
#include "perchsim/common.hpp"
#include "perchsim/flight_plant.hpp"
#include "perchsim/leg_impact.hpp"
#include "perchsim/perception.hpp"
#include "perchsim/rng.hpp"
#include "perchsim/touchdown.hpp"

namespace perchsim::autopilot {

// ---------------------------------------------------------------------------
// PID

struct LoopGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double out_min = -1.0;
  double out_max = 1.0;
  double integrator_limit = 1.0;  // bound on the integral contribution ki*I
};

inline void validate(const LoopGains& g) {
  if (!(std::isfinite(g.out_min) && std::isfinite(g.out_max) && g.out_min < g.out_max))
    throw DomainError("loop output limits must be finite with min < max");
  if (!(g.integrator_limit >= 0.0 && g.integrator_limit <= 0.5 * (g.out_max - g.out_min) + 1e-12))
    throw DomainError("integrator clamp must fit inside the output window");
}

struct PidState {
  double integral = 0.0;  // of the error, unscaled
  double prev_error = 0.0;
  bool primed = false;
};

struct PidOutput {
  double actuation = 0.0;
  PidState state;
};

/// Clamped-integrator PID on the error. The derivative is zero on the first
/// call.
inline PidOutput pid_step(const LoopGains& g, double setpoint, double measurement, double dt, PidState st) {
  if (!(dt > 0.0)) throw DomainError("control step must be positive");
  const double e = setpoint - measurement;
  if (g.ki != 0.0) {
    st.integral += e * dt;
    const double bound = g.integrator_limit / std::abs(g.ki);
    st.integral = std::clamp(st.integral, -bound, bound);
  }
  const double de = st.primed ? (e - st.prev_error) / dt : 0.0;
  st.prev_error = e;
  st.primed = true;
  const double u = g.kp * e + g.ki * st.integral + g.kd * de;
  return {std::clamp(u, g.out_min, g.out_max), st};
}

// ---------------------------------------------------------------------------
// Mission configuration

enum class Phase { Launch, ControlledFlight, Approach, GlideStop, Impact, Terminal };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Launch: return "Launch";
    case Phase::ControlledFlight: return "ControlledFlight";
    case Phase::Approach: return "Approach";
    case Phase::GlideStop: return "GlideStop";
    case Phase::Impact: return "Impact";
    case Phase::Terminal: return "Terminal";
  }
  return "?";
}

/// What the branch does on contact.
enum class BranchMode {
  None,  // flight only: the run ends when the robot passes the branch station
  Soft,  // contact is logged but the claw never locks
  Full,
};

struct GainSet {
  LoopGains pitch{6.5, 1.8, 0.0, -30.0, 30.0, 10.0};  // deg elevator per deg
  LoopGains yaw{1.0, 0.0, 0.25, -30.0, 30.0, 0.0};  // deg rudder per deg
  LoopGains altitude{10.0, 1.05, 0.96, -5.5, 5.5, 1.5};  // Hz per m, around trim
  perception::LegLoopGains leg{};
};

/// Band-limited random forcing: one Ornstein-Uhlenbeck process per channel.
/// Defaults are sized so the nine-seed ensemble perches in 7 of 9 runs.
struct DisturbanceSpec {
  double force_z_sigma_n = 0.10;
  double force_y_sigma_n = 0.03;
  double pitch_moment_sigma_nm = 0.005;
  double yaw_moment_sigma_nm = 0.002;
  double correlation_time_s = 0.5;

  static DisturbanceSpec none() { return {0.0, 0.0, 0.0, 0.0, 0.5}; }
};

struct MissionConfig {
  double launch_speed_mps = 4.0;
  double rail_length_m = 1.6;
  double launch_height_m = 1.5;
  double launch_pitch_deg = 0.0;
  double launch_yaw_deg = -2.0;  // heading bias of the rail
  double pitch_setpoint_deg = 30.0;
  double altitude_setpoint_m = 2.0;
  double control_rate_hz = 120.0;
  int plant_substeps = 8;  // plant steps per control step
  double approach_range_m = 1.5;
  double glide_range_m = 0.2;
  double leg_ready_deg = 85.0;  // leg command before the approach
  double max_time_s = 12.0;
  BranchSpec branch{};
  double branch_half_length_m = 0.4;
  BranchMode branch_mode = BranchMode::Full;
  GainSet gains{};
  DisturbanceSpec disturbance{};
  std::uint64_t seed = 0;
  flight::RobotParams robot{};
  leg::LegParams leg{};
  leg::ContactParams contact{};
  double leg_reach_m = 0.30;  // hip to claw mouth
  perception::SensorSpec sensor{};
  perception::ServoSpec servo{};
  claw::ClawGeometry claw{};
  claw::SpringSpec spring{};
  touchdown::TouchdownGeometry touchdown{};
};

inline void validate(const MissionConfig& c) {
  if (!(c.launch_speed_mps >= 0.0 && c.launch_speed_mps <= 5.0)) throw ConfigError("launch speed must lie in [0, 5] m/s");
  if (!(c.rail_length_m > 0.0)) throw ConfigError("rail length must be positive");
  if (!(c.pitch_setpoint_deg >= 0.0 && c.pitch_setpoint_deg <= 40.0))
    throw ConfigError("pitch setpoint outside the flyable 0-40 deg range");
  if (!(c.altitude_setpoint_m > 0.5 && c.altitude_setpoint_m < 6.0)) throw ConfigError("altitude setpoint outside 0.5-6 m");
  if (!(c.control_rate_hz > 0.0 && c.plant_substeps >= 1)) throw ConfigError("bad control or plant rate");
  if (!(c.approach_range_m > c.glide_range_m && c.glide_range_m > 0.0))
    throw ConfigError("approach range must exceed the glide range");
  for (const LoopGains* g : {&c.gains.pitch, &c.gains.yaw, &c.gains.altitude}) validate(*g);
}

// ---------------------------------------------------------------------------
// Autopilot

/// Claw position of a robot state: the reference point is the leg root.
inline Vec2 claw_position(const flight::RobotState& s, double reach_m) {
  const double b = deg2rad(s.beta_deg);
  return {s.x + reach_m * std::sin(b), s.z - reach_m * std::cos(b)};
}

class Autopilot {
 public:
  explicit Autopilot(const MissionConfig& cfg)
      : cfg_(cfg),
        sensor_rng_(cfg.seed, 1000),
        trim_hz_(trim_frequency(cfg)),
        trim_elevator_deg_(trim_elevator(cfg)) {
    leg_.beta_cmd_deg = cfg.leg_ready_deg;
  }

  /// One pass of the flight loops. Leg command comes from the last leg
  /// update; outside the approach it is the ready pose.
  flight::ControlCommand control_cycle(const flight::RobotState& s, Phase phase) {
    flight::ControlCommand cmd;
    const double dt = 1.0 / cfg_.control_rate_hz;
    const GainSet& g = cfg_.gains;
    auto pr = pid_step(g.pitch, cfg_.pitch_setpoint_deg, s.pitch_deg, dt, pitch_);
    pitch_ = pr.state;
    cmd.delta_e_deg = std::clamp(trim_elevator_deg_ + pr.actuation, g.pitch.out_min, g.pitch.out_max);
    auto yr = pid_step(g.yaw, 0.0, s.yaw_deg, dt, yaw_);
    yaw_ = yr.state;
    cmd.delta_r_deg = yr.actuation;
    auto ar = pid_step(g.altitude, cfg_.altitude_setpoint_m, s.z, dt, altitude_);
    altitude_ = ar.state;
    cmd.flap_hz = std::clamp(trim_hz_ + ar.actuation, 0.0, cfg_.robot.max_flap_hz);
    if (phase == Phase::GlideStop || phase == Phase::Impact || phase == Phase::Terminal) cmd.flap_hz = 0.0;
    cmd.beta_cmd_deg = phase == Phase::Approach || phase == Phase::GlideStop ? leg_.beta_cmd_deg : cfg_.leg_ready_deg;
    return cmd;
  }

  /// One line-scan read and leg-loop update; returns the detected pixel
  /// offset from the boresight when the branch is seen.
  std::optional<double> leg_cycle(const flight::RobotState& s, double t) {
    const Vec2 claw = claw_position(s, cfg_.leg_reach_m);
    BranchSpec seen = cfg_.branch;
    if (std::abs(s.y - cfg_.branch.center.y) > cfg_.branch_half_length_m) seen.center.x = claw.x - 1.0;  // off the end
    const perception::SensorFrame f =
        perception::render_scan({claw.x, claw.y, 0.0}, seen, cfg_.sensor, &sensor_rng_, t);
    const auto px = perception::detect_branch(f, cfg_.sensor);
    if (!px) return std::nullopt;
    const double offset = *px - cfg_.sensor.centre_px();
    leg_ = perception::leg_pd_step(offset, cfg_.gains.leg, 1.0 / cfg_.sensor.effective_rate_hz, leg_);
    return offset;
  }

  double leg_command_deg() const { return leg_.beta_cmd_deg; }
  void set_leg_command(double beta_deg) { leg_.beta_cmd_deg = beta_deg; }
  double trim_hz() const { return trim_hz_; }

  /// Elevator that balances the weathercock moment at the pitch setpoint in
  /// level flight. Both moments scale with the tail dynamic pressure, so the
  /// result does not depend on speed.
  static double trim_elevator(const MissionConfig& cfg) {
    return cfg.robot.pitch_stiffness * deg2rad(cfg.pitch_setpoint_deg) / cfg.robot.elevator_nm_per_deg;
  }

  static double trim_frequency(const MissionConfig& cfg) {
    const auto t = flight::trim_state(cfg.pitch_setpoint_deg, cfg.robot);
    return t ? t->flap_hz : cfg.robot.max_flap_hz;
  }

 private:
  MissionConfig cfg_;
  RandomStream sensor_rng_;
  double trim_hz_;
  double trim_elevator_deg_;
  PidState pitch_{}, yaw_{}, altitude_{};
  perception::LegLoopState leg_{};
};

// ---------------------------------------------------------------------------
// Disturbances

class DisturbanceField {
 public:
  DisturbanceField(const DisturbanceSpec& spec, std::uint64_t seed)
      : spec_(spec), fz_(seed, 1), fy_(seed, 2), my_(seed, 3), mz_(seed, 4) {}

  /// Advances every channel by dt and returns the new forcing.
  flight::Disturbance step(double dt) {
    const double a = std::exp(-dt / spec_.correlation_time_s);
    const double b = std::sqrt(1.0 - a * a);
    state_[0] = a * state_[0] + b * spec_.force_z_sigma_n * fz_.normal();
    state_[1] = a * state_[1] + b * spec_.force_y_sigma_n * fy_.normal();
    state_[2] = a * state_[2] + b * spec_.pitch_moment_sigma_nm * my_.normal();
    state_[3] = a * state_[3] + b * spec_.yaw_moment_sigma_nm * mz_.normal();
    return current();
  }

  flight::Disturbance current() const {
    flight::Disturbance d;
    d.force_n = {0.0, state_[1], state_[0]};
    d.pitch_moment_nm = state_[2];
    d.yaw_moment_nm = state_[3];
    return d;
  }

 private:
  DisturbanceSpec spec_;
  RandomStream fz_, fy_, my_, mz_;
  std::array<double, 4> state_{};
};

// ---------------------------------------------------------------------------
// Mission

struct Sample {
  double t_s = 0.0;
  flight::RobotState state;
  flight::ControlCommand cmd;
  Phase phase = Phase::Launch;
};

struct CrossingState {
  double vx_mps = 0.0;
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
  double y_m = 0.0;
  double z_m = 0.0;
  double beta_deg = 0.0;
  double claw_z_m = 0.0;
  double t_s = 0.0;
};

struct MissionResult {
  std::vector<Sample> trajectory;  // one sample per control cycle
  std::vector<std::pair<double, Phase>> phase_log;  // entry time of each phase
  std::optional<CrossingState> crossing;
  leg::ImpactRecord impact;
  touchdown::PerchOutcome outcome = touchdown::PerchOutcome::Missed;
  bool contact = false;
  double max_lateral_m = 0.0;
  std::string diagnostic;
};

inline double altitude_error_at_branch(const MissionResult& r, const MissionConfig& cfg) {
  if (!r.crossing) return std::numeric_limits<double>::infinity();
  return r.crossing->z_m - cfg.altitude_setpoint_m;
}

namespace detail {

inline void enter(MissionResult& r, Phase& current, Phase next, double t) {
  if (static_cast<int>(next) < static_cast<int>(current)) throw Error("mission phase went backwards");
  if (next == current) return;
  current = next;
  r.phase_log.emplace_back(t, next);
}

inline CrossingState crossing_of(const flight::RobotState& s, double reach_m, double t) {
  CrossingState c;
  c.vx_mps = s.vx;
  c.yaw_deg = s.yaw_deg;
  c.pitch_deg = s.pitch_deg;
  c.y_m = s.y;
  c.z_m = s.z;
  c.beta_deg = s.beta_deg;
  c.claw_z_m = claw_position(s, reach_m).y;
  c.t_s = t;
  return c;
}

/// Branch contact: impact transient, then the touchdown outcome.
inline void resolve_contact(MissionResult& r, const MissionConfig& cfg, const flight::RobotState& s) {
  const CrossingState& c = *r.crossing;
  if (std::abs(c.y_m - cfg.branch.center.y) > cfg.branch_half_length_m) {
    r.diagnostic = "passed beside the branch";
    return;
  }
  const double misalignment = cfg.branch.center.z - c.claw_z_m;
  const double speed = std::clamp(s.vx, 0.0, 6.0);
  r.impact = leg::simulate_impact(cfg.leg, cfg.robot.mass_kg, speed, misalignment, cfg.branch, 1e-4, cfg.contact);
  r.contact = r.impact.peak_force_n > 0.0;
  if (!r.contact) {
    r.diagnostic = "claw passed the branch without contact";
    return;
  }
  if (cfg.branch_mode == BranchMode::Soft) {
    r.impact.locked = false;
    r.diagnostic = "soft branch contact";
    return;
  }
  if (!r.impact.locked) {
    r.diagnostic = "contact without lock";
    return;
  }
  const double heading = rad2deg(std::atan2(s.vy, s.vx));
  const double psi_branch = wrap_deg(heading - cfg.branch.axis_yaw_deg);
  auto td = touchdown::make_touchdown_state(speed, std::clamp(s.beta_deg, 0.0, 90.0), psi_branch, s.pitch_deg,
                                            cfg.touchdown);
  const double hold = claw::holding_torque(cfg.claw, cfg.spring, cfg.branch);
  r.outcome = touchdown::evaluate_touchdown(td, hold, cfg.touchdown);
}

}  // namespace detail

/// Launch, fly and perch. Deterministic for a given config and seed.
inline MissionResult run_mission(const MissionConfig& cfg) {
  validate(cfg);
  MissionResult r;
  Autopilot ap(cfg);
  DisturbanceField field(cfg.disturbance, cfg.seed);
  const double dt_ctrl = 1.0 / cfg.control_rate_hz;
  const int substeps = cfg.plant_substeps;
  const double dt_plant = dt_ctrl / substeps;
  const double dt_sensor = 1.0 / cfg.sensor.effective_rate_hz;

  Phase phase = Phase::Launch;
  r.phase_log.emplace_back(0.0, phase);

  // Launch rail: constant acceleration, controls off.
  const double accel = cfg.launch_speed_mps * cfg.launch_speed_mps / (2.0 * cfg.rail_length_m);
  const double yaw0 = deg2rad(cfg.launch_yaw_deg);
  flight::RobotState s;
  s.z = cfg.launch_height_m;
  s.pitch_deg = cfg.launch_pitch_deg;
  s.yaw_deg = cfg.launch_yaw_deg;
  s.beta_deg = cfg.leg_ready_deg;
  double t = 0.0;
  const double rail_time = accel > 0.0 ? cfg.launch_speed_mps / accel : 0.0;
  for (; t + 1e-12 < rail_time; t += dt_ctrl) {
    const double along = 0.5 * accel * t * t - cfg.rail_length_m;
    s.x = along * std::cos(yaw0);
    s.y = along * std::sin(yaw0);
    s.vx = accel * t * std::cos(yaw0);
    s.vy = accel * t * std::sin(yaw0);
    r.trajectory.push_back({t, s, {0.0, 0.0, 0.0, cfg.leg_ready_deg}, phase});
  }
  // Rail exit marks the origin.
  t = rail_time;
  s.x = 0.0;
  s.y = 0.0;
  s.vx = cfg.launch_speed_mps * std::cos(yaw0);
  s.vy = cfg.launch_speed_mps * std::sin(yaw0);
  detail::enter(r, phase, Phase::ControlledFlight, t);

  const double branch_x = cfg.branch.center.x;
  double next_sensor = t;
  while (phase != Phase::Terminal) {
    if (t > cfg.max_time_s) {
      r.diagnostic = "mission timed out";
      detail::enter(r, phase, Phase::Terminal, t);
      break;
    }
    const double range = branch_x - claw_position(s, cfg.leg_reach_m).x;
    if (cfg.branch_mode != BranchMode::None) {
      if (phase == Phase::ControlledFlight && range <= cfg.approach_range_m) detail::enter(r, phase, Phase::Approach, t);
      if (phase == Phase::Approach && range <= cfg.glide_range_m) detail::enter(r, phase, Phase::GlideStop, t);
    }
    if (range <= 0.0) {
      r.crossing = detail::crossing_of(s, cfg.leg_reach_m, t);
      if (cfg.branch_mode == BranchMode::None) {
        detail::enter(r, phase, Phase::Terminal, t);
        break;
      }
      detail::enter(r, phase, Phase::Impact, t);
      detail::resolve_contact(r, cfg, s);
      detail::enter(r, phase, Phase::Terminal, t);
      break;
    }

    const flight::ControlCommand cmd = ap.control_cycle(s, phase);
    r.trajectory.push_back({t, s, cmd, phase});
    r.max_lateral_m = std::max(r.max_lateral_m, std::abs(s.y));
    flight::ControlCommand held = cmd;
    const flight::Disturbance dist = field.step(dt_ctrl);
    for (int k = 0; k < substeps; ++k) {
      if ((phase == Phase::Approach || phase == Phase::GlideStop) && t + 1e-12 >= next_sensor) {
        ap.leg_cycle(s, t);
        held.beta_cmd_deg = ap.leg_command_deg();
        next_sensor += dt_sensor;
      } else if (t + 1e-12 >= next_sensor) {
        next_sensor += dt_sensor;
      }
      s = flight::plant_step(s, held, cfg.robot, dt_plant, dist);
      t += dt_plant;
      if (s.z <= 0.0) break;
    }
    if (s.z <= 0.0) {
      r.diagnostic = "ground strike";
      r.trajectory.push_back({t, s, held, phase});
      detail::enter(r, phase, Phase::Terminal, t);
      break;
    }
  }
  return r;
}

struct StepResponse {
  double settle_time_s = std::numeric_limits<double>::infinity();  // last entry into the band
  double overshoot_deg = 0.0;
  std::vector<double> pitch_deg;  // one sample per control cycle
};

/// Pitch setpoint step from level trimmed flight, with all loops closed.
/// Settling is the last time the pitch enters +-band_deg of the target.
inline StepResponse pitch_step_test(const MissionConfig& base, double duration_s = 3.0, double band_deg = 2.0) {
  MissionConfig cfg = base;
  validate(cfg);
  const auto level = flight::trim_state(0.0, cfg.robot);
  if (!level) throw DomainError("no level trim for this robot");
  flight::RobotState s;
  s.z = cfg.altitude_setpoint_m;
  s.vx = level->speed_mps;
  s.beta_deg = cfg.leg_ready_deg;
  Autopilot ap(cfg);
  const double dt = 1.0 / cfg.control_rate_hz;
  StepResponse out;
  double last_outside = 0.0;
  const int n = static_cast<int>(std::lround(duration_s * cfg.control_rate_hz));
  for (int i = 0; i < n; ++i) {
    const flight::ControlCommand cmd = ap.control_cycle(s, Phase::ControlledFlight);
    for (int k = 0; k < cfg.plant_substeps; ++k) s = flight::plant_step(s, cmd, cfg.robot, dt / cfg.plant_substeps);
    const double t = (i + 1) * dt;
    out.pitch_deg.push_back(s.pitch_deg);
    out.overshoot_deg = std::max(out.overshoot_deg, s.pitch_deg - cfg.pitch_setpoint_deg);
    if (std::abs(s.pitch_deg - cfg.pitch_setpoint_deg) > band_deg) last_outside = t;
  }
  if (last_outside < duration_s - dt) out.settle_time_s = last_outside;
  return out;
}

// ---------------------------------------------------------------------------
// Staged tuning

struct StageReport {
  int stage = 0;
  bool passed = false;
  std::vector<std::pair<std::string, bool>> checks;
  std::string summary;
};

/// Remembers which stages have passed so later stages can refuse to run
/// ahead of their prerequisites.
class TuningProgress {
 public:
  bool passed(int stage) const { return stage >= 1 && stage <= 4 && done_[static_cast<std::size_t>(stage - 1)]; }
  void mark(int stage, bool ok) { done_[static_cast<std::size_t>(stage - 1)] = ok; }

 private:
  std::array<bool, 4> done_{};
};

namespace detail {

inline void check(StageReport& rep, std::string name, bool ok) {
  rep.checks.emplace_back(std::move(name), ok);
  rep.passed = rep.passed && ok;
}

}  // namespace detail

/// Stage 1 launcher claw tests, 2 flight without the appendage, 3 soft
/// branch, 4 full perch. Throws OrderingError when an earlier stage has not
/// passed.
inline StageReport tuning_procedure(int stage, const MissionConfig& base, TuningProgress& progress) {
  if (stage < 1 || stage > 4) throw DomainError("tuning stage must be 1..4");
  for (int k = 1; k < stage; ++k)
    if (!progress.passed(k)) throw OrderingError("stage " + std::to_string(stage) + " needs stage " + std::to_string(k));
  StageReport rep;
  rep.stage = stage;
  rep.passed = true;
  switch (stage) {
    case 1: {
      // Claw on the launcher carriage: no flight, aligned strikes up to 5 m/s.
      int locks = 0, runs = 0;
      for (double v = 0.5; v <= 5.0 + 1e-9; v += 0.25) {
        const auto rec = leg::simulate_impact(base.leg, base.robot.mass_kg, v, 0.0, base.branch, 1e-4, base.contact);
        ++runs;
        locks += rec.locked ? 1 : 0;
      }
      detail::check(rep, "lock on every launcher strike up to 5 m/s", locks == runs);
      rep.summary = std::to_string(locks) + "/" + std::to_string(runs) + " locked";
      break;
    }
    case 2: {
      MissionConfig cfg = base;
      cfg.robot = flight::without_appendage(cfg.robot);
      cfg.branch_mode = BranchMode::None;
      cfg.disturbance = DisturbanceSpec::none();
      const MissionResult r = run_mission(cfg);
      const double err = altitude_error_at_branch(r, cfg);
      detail::check(rep, "reaches the branch station", r.crossing.has_value());
      detail::check(rep, "altitude error at branch within 10 cm", std::abs(err) <= 0.10);
      detail::check(rep, "lateral deviation within 0.6 m", r.max_lateral_m <= 0.6);
      rep.summary = "altitude error " + std::to_string(err) + " m";
      break;
    }
    case 3: {
      MissionConfig cfg = base;
      cfg.branch_mode = BranchMode::Soft;
      cfg.disturbance = DisturbanceSpec::none();
      const MissionResult r = run_mission(cfg);
      detail::check(rep, "branch contact logged", r.contact);
      detail::check(rep, "claw never locks", !r.impact.locked);
      rep.summary = "peak force " + std::to_string(r.impact.peak_force_n) + " N";
      break;
    }
    case 4: {
      MissionConfig cfg = base;
      cfg.branch_mode = BranchMode::Full;
      const MissionResult r = run_mission(cfg);
      detail::check(rep, "perched", r.outcome == touchdown::PerchOutcome::Perched);
      rep.summary = std::string("outcome ") + touchdown::to_string(r.outcome);
      break;
    }
  }
  progress.mark(stage, rep.passed);
  return rep;
}

}  // namespace perchsim::autopilot
