// Run configuration, launcher kinematics and scenario orchestration.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "perchsim/autopilot.hpp"
#include "perchsim/claw.hpp"
#include "perchsim/config.hpp"
#include "perchsim/csv.hpp"
#include "perchsim/leg_impact.hpp"
#include "perchsim/pso.hpp"
#include "perchsim/touchdown.hpp"

namespace perchsim::harness {

// ---------------------------------------------------------------------------
// Launcher

inline constexpr double kLaunchSpeedCap = 5.0;  // m/s

struct LaunchProfile {
  double target_speed_mps = 4.0;
  double rail_length_m = 1.6;
  double acceleration_mps2 = 5.0;
  double lateral_offset_m = 0.4;

  double exit_time_s() const { return acceleration_mps2 > 0.0 ? target_speed_mps / acceleration_mps2 : 0.0; }
};

/// Constant acceleration along the rail up to the target speed.
inline LaunchProfile launch_profile(double target_speed_mps, double rail_length_m, double lateral_offset_m = 0.4) {
  if (target_speed_mps > kLaunchSpeedCap) throw ConfigError("launch speed above the 5 m/s safety cap");
  if (target_speed_mps < 0.0 || !(rail_length_m > 0.0)) throw ConfigError("launch needs speed >= 0 and a positive rail");
  return {target_speed_mps, rail_length_m, target_speed_mps * target_speed_mps / (2.0 * rail_length_m),
          lateral_offset_m};
}

// ---------------------------------------------------------------------------
// Run configuration

enum class Scenario { ClawSweep, ImpactSuite, FlightOnly, SoftBranch, FullPerch, Envelope, Optimize, LauncherProfile };

inline constexpr std::array<std::pair<Scenario, std::string_view>, 8> kScenarioNames{{
    {Scenario::ClawSweep, "ClawSweep"},
    {Scenario::ImpactSuite, "ImpactSuite"},
    {Scenario::FlightOnly, "FlightOnly"},
    {Scenario::SoftBranch, "SoftBranch"},
    {Scenario::FullPerch, "FullPerch"},
    {Scenario::Envelope, "Envelope"},
    {Scenario::Optimize, "Optimize"},
    {Scenario::LauncherProfile, "LauncherProfile"},
}};

inline std::string_view to_string(Scenario s) {
  for (const auto& [v, name] : kScenarioNames)
    if (v == s) return name;
  return "?";
}

inline Scenario parse_scenario(std::string_view text) {
  for (const auto& [v, name] : kScenarioNames)
    if (name == text) return v;
  throw ConfigError("unknown scenario '" + std::string(text) + "'");
}

struct ClawSweepSettings {
  double diameter_min_m = 0.030;
  double diameter_max_m = 0.120;
  double diameter_step_m = 0.005;
};

struct ImpactSuiteSettings {
  double speed_max_mps = 5.0;
  double speed_step_mps = 0.25;
  double misalignment_max_m = 0.03;
  double misalignment_step_m = 0.01;
  double force_limit_n = 150.0;
  double force_limit_speed_mps = 4.0;  // the limit applies up to this speed
};

struct EnvelopeSettings {
  double theta_min_deg = 0.0;
  double theta_max_deg = 90.0;
  double theta_step_deg = 10.0;
  double speed_max_mps = 6.0;
  double speed_step_mps = 0.25;
  double psi_max_deg = 30.0;
  double psi_step_deg = 1.0;
  double yaw_grid_speed_mps = 2.5;
};

struct OptimizeSettings {
  std::int64_t particles = 30;
  std::int64_t iterations = 60;
  double inertia = 0.72;
  double cognitive = 1.49;
  double social = 1.49;
  leg::CostWeights weights{};
  leg::LegDesignSpace space{};
};

struct EnsembleSettings {
  std::int64_t runs = 9;  // seeds seed .. seed + runs - 1
  std::int64_t min_perched = 6;
};

struct RunConfig {
  Scenario scenario = Scenario::FullPerch;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  double launch_lateral_offset_m = 0.4;
  autopilot::MissionConfig mission{};
  ClawSweepSettings claw_sweep{};
  ImpactSuiteSettings impact{};
  EnvelopeSettings envelope{};
  OptimizeSettings optimize{};
  EnsembleSettings ensemble{};
};

namespace detail {

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

template <class T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
  else if constexpr (std::is_same_v<T, double>) return config::format_number(v);
  else if constexpr (std::is_integral_v<T>) return std::to_string(v);
  else if constexpr (std::is_same_v<T, std::string>) return v;
  else if constexpr (std::is_same_v<T, Scenario>) return std::string(to_string(v));
  else if constexpr (std::is_same_v<T, Surface>) return std::string(perchsim::to_string(v));
  else if constexpr (std::is_same_v<T, autopilot::BranchMode>) {
    switch (v) {
      case autopilot::BranchMode::None: return "none";
      case autopilot::BranchMode::Soft: return "soft";
      case autopilot::BranchMode::Full: return "full";
    }
    return "?";
  }
}

template <class T>
T parse_value(std::string_view key, std::string_view text) {
  if constexpr (std::is_same_v<T, bool>) return config::parse_bool(key, text);
  else if constexpr (std::is_same_v<T, double>) return config::parse_number(key, text);
  else if constexpr (std::is_integral_v<T>) return config::parse_integer<T>(key, text);
  else if constexpr (std::is_same_v<T, std::string>) return std::string(text);
  else if constexpr (std::is_same_v<T, Scenario>) return parse_scenario(text);
  else if constexpr (std::is_same_v<T, Surface>) {
    for (Surface s : {Surface::BareCarbon, Surface::SpikesOnly, Surface::SpikesPlusPads})
      if (perchsim::to_string(s) == text) return s;
    throw ConfigError("'" + std::string(key) + "' needs bare_carbon, spikes_only or spikes_plus_pads");
  } else if constexpr (std::is_same_v<T, autopilot::BranchMode>) {
    if (text == "none") return autopilot::BranchMode::None;
    if (text == "soft") return autopilot::BranchMode::Soft;
    if (text == "full") return autopilot::BranchMode::Full;
    throw ConfigError("'" + std::string(key) + "' needs none, soft or full");
  }
}

// `access` is a generic lambda returning a reference into the config; it
// serves both the const read and the write.
template <class Access>
Field field(std::string key, Access access) {
  using T = std::remove_cvref_t<decltype(access(std::declval<RunConfig&>()))>;
  Field f;
  f.key = key;
  f.get = [access](const RunConfig& c) { return format_value<T>(access(c)); };
  f.set = [access, key](RunConfig& c, std::string_view text) { access(c) = parse_value<T>(key, text); };
  return f;
}

#define PERCHSIM_FIELD(key, expr) field(key, [](auto& c) -> auto& { return c.expr; })

inline std::vector<Field> build_fields() {
  std::vector<Field> f;
  f.push_back(PERCHSIM_FIELD("scenario", scenario));
  f.push_back(PERCHSIM_FIELD("output.dir", output_dir));
  f.push_back(PERCHSIM_FIELD("seed", seed));
  f.push_back(PERCHSIM_FIELD("launch.lateral_offset_m", launch_lateral_offset_m));

  f.push_back(PERCHSIM_FIELD("mission.launch_speed_mps", mission.launch_speed_mps));
  f.push_back(PERCHSIM_FIELD("mission.rail_length_m", mission.rail_length_m));
  f.push_back(PERCHSIM_FIELD("mission.launch_height_m", mission.launch_height_m));
  f.push_back(PERCHSIM_FIELD("mission.launch_pitch_deg", mission.launch_pitch_deg));
  f.push_back(PERCHSIM_FIELD("mission.launch_yaw_deg", mission.launch_yaw_deg));
  f.push_back(PERCHSIM_FIELD("mission.pitch_setpoint_deg", mission.pitch_setpoint_deg));
  f.push_back(PERCHSIM_FIELD("mission.altitude_setpoint_m", mission.altitude_setpoint_m));
  f.push_back(PERCHSIM_FIELD("mission.control_rate_hz", mission.control_rate_hz));
  f.push_back(PERCHSIM_FIELD("mission.plant_substeps", mission.plant_substeps));
  f.push_back(PERCHSIM_FIELD("mission.approach_range_m", mission.approach_range_m));
  f.push_back(PERCHSIM_FIELD("mission.glide_range_m", mission.glide_range_m));
  f.push_back(PERCHSIM_FIELD("mission.leg_ready_deg", mission.leg_ready_deg));
  f.push_back(PERCHSIM_FIELD("mission.max_time_s", mission.max_time_s));
  f.push_back(PERCHSIM_FIELD("mission.branch_half_length_m", mission.branch_half_length_m));
  f.push_back(PERCHSIM_FIELD("mission.branch_mode", mission.branch_mode));
  f.push_back(PERCHSIM_FIELD("mission.leg_reach_m", mission.leg_reach_m));

  f.push_back(PERCHSIM_FIELD("branch.diameter_m", mission.branch.diameter_m));
  f.push_back(PERCHSIM_FIELD("branch.x_m", mission.branch.center.x));
  f.push_back(PERCHSIM_FIELD("branch.y_m", mission.branch.center.y));
  f.push_back(PERCHSIM_FIELD("branch.z_m", mission.branch.center.z));
  f.push_back(PERCHSIM_FIELD("branch.axis_yaw_deg", mission.branch.axis_yaw_deg));
  f.push_back(PERCHSIM_FIELD("branch.surface", mission.branch.surface));
  f.push_back(PERCHSIM_FIELD("branch.friction.bare_carbon", mission.branch.friction.bare_carbon));
  f.push_back(PERCHSIM_FIELD("branch.friction.spikes_only", mission.branch.friction.spikes_only));
  f.push_back(PERCHSIM_FIELD("branch.friction.spikes_plus_pads", mission.branch.friction.spikes_plus_pads));

  const auto gains = [&f](const std::string& name, auto pick) {
    const auto add = [&](const char* leaf, auto member) {
      f.push_back(field("gains." + name + "." + leaf,
                        [pick, member](auto& c) -> auto& { return pick(c.mission.gains).*member; }));
    };
    add("kp", &autopilot::LoopGains::kp);
    add("ki", &autopilot::LoopGains::ki);
    add("kd", &autopilot::LoopGains::kd);
    add("out_min", &autopilot::LoopGains::out_min);
    add("out_max", &autopilot::LoopGains::out_max);
    add("integrator_limit", &autopilot::LoopGains::integrator_limit);
  };
  gains("pitch", [](auto& g) -> auto& { return g.pitch; });
  gains("yaw", [](auto& g) -> auto& { return g.yaw; });
  gains("altitude", [](auto& g) -> auto& { return g.altitude; });
  f.push_back(PERCHSIM_FIELD("gains.leg.kp", mission.gains.leg.kp));
  f.push_back(PERCHSIM_FIELD("gains.leg.kd", mission.gains.leg.kd));
  f.push_back(PERCHSIM_FIELD("gains.leg.max_rate_dps", mission.gains.leg.max_rate_dps));

  f.push_back(PERCHSIM_FIELD("disturbance.force_z_sigma_n", mission.disturbance.force_z_sigma_n));
  f.push_back(PERCHSIM_FIELD("disturbance.force_y_sigma_n", mission.disturbance.force_y_sigma_n));
  f.push_back(PERCHSIM_FIELD("disturbance.pitch_moment_sigma_nm", mission.disturbance.pitch_moment_sigma_nm));
  f.push_back(PERCHSIM_FIELD("disturbance.yaw_moment_sigma_nm", mission.disturbance.yaw_moment_sigma_nm));
  f.push_back(PERCHSIM_FIELD("disturbance.correlation_time_s", mission.disturbance.correlation_time_s));

  f.push_back(PERCHSIM_FIELD("robot.mass_kg", mission.robot.mass_kg));
  f.push_back(PERCHSIM_FIELD("robot.wingspan_m", mission.robot.wingspan_m));
  f.push_back(PERCHSIM_FIELD("robot.wing_area_m2", mission.robot.wing_area_m2));
  f.push_back(PERCHSIM_FIELD("robot.max_flap_hz", mission.robot.max_flap_hz));
  f.push_back(PERCHSIM_FIELD("robot.pitch_inertia", mission.robot.pitch_inertia));
  f.push_back(PERCHSIM_FIELD("robot.yaw_inertia", mission.robot.yaw_inertia));
  f.push_back(PERCHSIM_FIELD("robot.elevator_nm_per_deg", mission.robot.elevator_nm_per_deg));
  f.push_back(PERCHSIM_FIELD("robot.rudder_nm_per_deg", mission.robot.rudder_nm_per_deg));
  f.push_back(PERCHSIM_FIELD("robot.tail_download_n_per_deg", mission.robot.tail_download_n_per_deg));
  f.push_back(PERCHSIM_FIELD("robot.pitch_damping", mission.robot.pitch_damping));
  f.push_back(PERCHSIM_FIELD("robot.pitch_stiffness", mission.robot.pitch_stiffness));
  f.push_back(PERCHSIM_FIELD("robot.yaw_damping", mission.robot.yaw_damping));
  f.push_back(PERCHSIM_FIELD("robot.weathervane", mission.robot.weathervane));
  f.push_back(PERCHSIM_FIELD("robot.heading_time_constant_s", mission.robot.heading_time_constant_s));
  f.push_back(PERCHSIM_FIELD("robot.cl0", mission.robot.cl0));
  f.push_back(PERCHSIM_FIELD("robot.cl_amp", mission.robot.cl_amp));
  f.push_back(PERCHSIM_FIELD("robot.cd0", mission.robot.cd0));
  f.push_back(PERCHSIM_FIELD("robot.induced_k", mission.robot.induced_k));
  f.push_back(PERCHSIM_FIELD("robot.flap_tilt_deg", mission.robot.flap_tilt_deg));
  f.push_back(PERCHSIM_FIELD("robot.max_flap_force_n", mission.robot.max_flap_force_n));
  f.push_back(PERCHSIM_FIELD("robot.flap_oscillation_gain", mission.robot.flap_oscillation_gain));
  f.push_back(PERCHSIM_FIELD("robot.heave_frequency_rad_s", mission.robot.heave_frequency_rad_s));
  f.push_back(PERCHSIM_FIELD("robot.heave_damping_ratio", mission.robot.heave_damping_ratio));
  f.push_back(PERCHSIM_FIELD("robot.reference_speed_mps", mission.robot.reference_speed_mps));
  f.push_back(PERCHSIM_FIELD("robot.wash_speed_mps", mission.robot.wash_speed_mps));

  f.push_back(PERCHSIM_FIELD("leg.link_length_m", mission.leg.link_length_m));
  f.push_back(PERCHSIM_FIELD("leg.leg_mass_kg", mission.leg.leg_mass_kg));
  f.push_back(PERCHSIM_FIELD("leg.com_fraction", mission.leg.com_fraction));
  f.push_back(PERCHSIM_FIELD("leg.spring_rate_n_per_m", mission.leg.spring_rate_n_per_m));
  f.push_back(PERCHSIM_FIELD("leg.spring_body_drop_m", mission.leg.spring_body_drop_m));
  f.push_back(PERCHSIM_FIELD("leg.spring_leg_anchor_m", mission.leg.spring_leg_anchor_m));
  f.push_back(PERCHSIM_FIELD("leg.servo_limit_torque_nm", mission.leg.servo_limit_torque_nm));
  f.push_back(PERCHSIM_FIELD("leg.servo_stiffness_nm_per_rad", mission.leg.servo_stiffness_nm_per_rad));
  f.push_back(PERCHSIM_FIELD("leg.servo_damping_nms", mission.leg.servo_damping_nms));
  f.push_back(PERCHSIM_FIELD("leg.hip_angle_deg", mission.leg.hip_angle_deg));
  f.push_back(PERCHSIM_FIELD("leg.stop_stiffness_nm_per_rad", mission.leg.stop_stiffness_nm_per_rad));
  f.push_back(PERCHSIM_FIELD("leg.mass_budget_kg", mission.leg.mass_budget_kg));

  f.push_back(PERCHSIM_FIELD("contact.stiffness_n_per_m", mission.contact.stiffness_n_per_m));
  f.push_back(PERCHSIM_FIELD("contact.damping_ratio", mission.contact.damping_ratio));
  f.push_back(PERCHSIM_FIELD("contact.claw_radius_m", mission.contact.claw_radius_m));
  f.push_back(PERCHSIM_FIELD("contact.trigger_force_n", mission.contact.trigger_force_n));
  f.push_back(PERCHSIM_FIELD("contact.capture_half_window_m", mission.contact.capture_half_window_m));
  f.push_back(PERCHSIM_FIELD("contact.max_sim_time_s", mission.contact.max_sim_time_s));

  f.push_back(PERCHSIM_FIELD("sensor.ifov_arcmin", mission.sensor.ifov_arcmin));
  f.push_back(PERCHSIM_FIELD("sensor.read_rate_hz", mission.sensor.read_rate_hz));
  f.push_back(PERCHSIM_FIELD("sensor.effective_rate_hz", mission.sensor.effective_rate_hz));
  f.push_back(PERCHSIM_FIELD("sensor.noise_sigma", mission.sensor.noise_sigma));
  f.push_back(PERCHSIM_FIELD("sensor.threshold_fraction", mission.sensor.threshold_fraction));
  f.push_back(PERCHSIM_FIELD("sensor.min_run_px", mission.sensor.min_run_px));
  f.push_back(PERCHSIM_FIELD("sensor.background", mission.sensor.background));
  f.push_back(PERCHSIM_FIELD("sensor.branch_brightness", mission.sensor.branch_brightness));
  f.push_back(PERCHSIM_FIELD("servo.lag_s", mission.servo.lag_s));
  f.push_back(PERCHSIM_FIELD("servo.max_rate_dps", mission.servo.max_rate_dps));

  f.push_back(PERCHSIM_FIELD("claw.straight_segment_mm", mission.claw.straight_segment_mm));
  f.push_back(PERCHSIM_FIELD("claw.round_radius_mm", mission.claw.round_radius_mm));
  f.push_back(PERCHSIM_FIELD("claw.inner_radius_mm", mission.claw.inner_radius_mm));
  f.push_back(PERCHSIM_FIELD("claw.pivot_spacing_mm", mission.claw.pivot_spacing_mm));
  f.push_back(PERCHSIM_FIELD("claw.psi_open_deg", mission.claw.psi_open_deg));
  f.push_back(PERCHSIM_FIELD("claw.psi_closed_deg", mission.claw.psi_closed_deg));
  f.push_back(PERCHSIM_FIELD("claw.trigger_lever_mm", mission.claw.trigger_lever_mm));
  f.push_back(PERCHSIM_FIELD("claw.spring_anchor_claw_x_mm", mission.claw.spring_anchor_claw.x));
  f.push_back(PERCHSIM_FIELD("claw.spring_anchor_claw_y_mm", mission.claw.spring_anchor_claw.y));
  f.push_back(PERCHSIM_FIELD("claw.spring_anchor_frame_x_mm", mission.claw.spring_anchor_frame.x));
  f.push_back(PERCHSIM_FIELD("claw.spring_anchor_frame_y_mm", mission.claw.spring_anchor_frame.y));
  f.push_back(PERCHSIM_FIELD("claw.inertia_kgm2", mission.claw.claw_inertia_kgm2));
  f.push_back(PERCHSIM_FIELD("claw.spike_offset_mm", mission.claw.spike_offset_mm));
  f.push_back(PERCHSIM_FIELD("claw.profile_origin_x_mm", mission.claw.profile_origin_mm.x));
  f.push_back(PERCHSIM_FIELD("claw.profile_origin_y_mm", mission.claw.profile_origin_mm.y));
  f.push_back(PERCHSIM_FIELD("claw.profile_heading_deg", mission.claw.profile_heading_deg));
  f.push_back(PERCHSIM_FIELD("claw.tip_sweep_deg", mission.claw.tip_sweep_deg));
  f.push_back(PERCHSIM_FIELD("claw.seat_depth_mm", mission.claw.seat_depth_mm));
  f.push_back(PERCHSIM_FIELD("claw.plate_spacing_mm", mission.claw.plate_spacing_mm));
  f.push_back(PERCHSIM_FIELD("claw.trigger_force_n", mission.claw.trigger_force_n));
  f.push_back(PERCHSIM_FIELD("spring.free_length_mm", mission.spring.free_length_mm));
  f.push_back(PERCHSIM_FIELD("spring.rate_n_per_mm", mission.spring.rate_n_per_mm));
  f.push_back(PERCHSIM_FIELD("spring.max_force_n", mission.spring.max_force_n));
  f.push_back(PERCHSIM_FIELD("spring.mass_g", mission.spring.mass_g));

  f.push_back(PERCHSIM_FIELD("touchdown.body_mass_kg", mission.touchdown.body_mass_kg));
  f.push_back(PERCHSIM_FIELD("touchdown.appendage_mass_kg", mission.touchdown.appendage_mass_kg));
  f.push_back(PERCHSIM_FIELD("touchdown.reach_m", mission.touchdown.reach_m));
  f.push_back(PERCHSIM_FIELD("touchdown.hip_offset_x_m", mission.touchdown.hip_offset_body_m.x));
  f.push_back(PERCHSIM_FIELD("touchdown.hip_offset_z_m", mission.touchdown.hip_offset_body_m.y));
  f.push_back(PERCHSIM_FIELD("touchdown.body_inertia_kgm2", mission.touchdown.body_inertia_kgm2));
  f.push_back(PERCHSIM_FIELD("touchdown.rotation_budget_deg", mission.touchdown.rotation_budget_deg));
  f.push_back(PERCHSIM_FIELD("touchdown.lock_time_s", mission.touchdown.lock_time_s));
  f.push_back(PERCHSIM_FIELD("touchdown.twist_capacity_nm", mission.touchdown.twist_capacity_nm));

  f.push_back(PERCHSIM_FIELD("claw_sweep.diameter_min_m", claw_sweep.diameter_min_m));
  f.push_back(PERCHSIM_FIELD("claw_sweep.diameter_max_m", claw_sweep.diameter_max_m));
  f.push_back(PERCHSIM_FIELD("claw_sweep.diameter_step_m", claw_sweep.diameter_step_m));
  f.push_back(PERCHSIM_FIELD("impact.speed_max_mps", impact.speed_max_mps));
  f.push_back(PERCHSIM_FIELD("impact.speed_step_mps", impact.speed_step_mps));
  f.push_back(PERCHSIM_FIELD("impact.misalignment_max_m", impact.misalignment_max_m));
  f.push_back(PERCHSIM_FIELD("impact.misalignment_step_m", impact.misalignment_step_m));
  f.push_back(PERCHSIM_FIELD("impact.force_limit_n", impact.force_limit_n));
  f.push_back(PERCHSIM_FIELD("impact.force_limit_speed_mps", impact.force_limit_speed_mps));
  f.push_back(PERCHSIM_FIELD("envelope.theta_min_deg", envelope.theta_min_deg));
  f.push_back(PERCHSIM_FIELD("envelope.theta_max_deg", envelope.theta_max_deg));
  f.push_back(PERCHSIM_FIELD("envelope.theta_step_deg", envelope.theta_step_deg));
  f.push_back(PERCHSIM_FIELD("envelope.speed_max_mps", envelope.speed_max_mps));
  f.push_back(PERCHSIM_FIELD("envelope.speed_step_mps", envelope.speed_step_mps));
  f.push_back(PERCHSIM_FIELD("envelope.psi_max_deg", envelope.psi_max_deg));
  f.push_back(PERCHSIM_FIELD("envelope.psi_step_deg", envelope.psi_step_deg));
  f.push_back(PERCHSIM_FIELD("envelope.yaw_grid_speed_mps", envelope.yaw_grid_speed_mps));
  f.push_back(PERCHSIM_FIELD("optimize.particles", optimize.particles));
  f.push_back(PERCHSIM_FIELD("optimize.iterations", optimize.iterations));
  f.push_back(PERCHSIM_FIELD("optimize.inertia", optimize.inertia));
  f.push_back(PERCHSIM_FIELD("optimize.cognitive", optimize.cognitive));
  f.push_back(PERCHSIM_FIELD("optimize.social", optimize.social));
  f.push_back(PERCHSIM_FIELD("optimize.weight.servo_torque", optimize.weights.servo_torque));
  f.push_back(PERCHSIM_FIELD("optimize.weight.angular_momentum", optimize.weights.angular_momentum));
  f.push_back(PERCHSIM_FIELD("optimize.weight.mass", optimize.weights.mass));
  f.push_back(PERCHSIM_FIELD("optimize.length_lo_m", optimize.space.length_lo));
  f.push_back(PERCHSIM_FIELD("optimize.length_hi_m", optimize.space.length_hi));
  f.push_back(PERCHSIM_FIELD("optimize.rate_lo_n_per_m", optimize.space.rate_lo));
  f.push_back(PERCHSIM_FIELD("optimize.rate_hi_n_per_m", optimize.space.rate_hi));
  f.push_back(PERCHSIM_FIELD("optimize.servo_lo_nm_per_rad", optimize.space.servo_lo));
  f.push_back(PERCHSIM_FIELD("optimize.servo_hi_nm_per_rad", optimize.space.servo_hi));
  f.push_back(PERCHSIM_FIELD("ensemble.runs", ensemble.runs));
  f.push_back(PERCHSIM_FIELD("ensemble.min_perched", ensemble.min_perched));
  return f;
}

#undef PERCHSIM_FIELD

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = build_fields();
  return table;
}

}  // namespace detail

/// Sorted list of every accepted key.
inline std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& f : detail::fields()) keys.push_back(f.key);
  std::sort(keys.begin(), keys.end());
  return keys;
}

inline void validate(const RunConfig& c) {
  autopilot::validate(c.mission);
  validate(c.mission.branch);
  launch_profile(c.mission.launch_speed_mps, c.mission.rail_length_m, c.launch_lateral_offset_m);
  const auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(c.claw_sweep.diameter_step_m, "claw_sweep.diameter_step_m");
  positive(c.impact.speed_step_mps, "impact.speed_step_mps");
  positive(c.impact.misalignment_step_m, "impact.misalignment_step_m");
  positive(c.envelope.theta_step_deg, "envelope.theta_step_deg");
  positive(c.envelope.speed_step_mps, "envelope.speed_step_mps");
  positive(c.envelope.psi_step_deg, "envelope.psi_step_deg");
  if (c.optimize.particles < 2 || c.optimize.iterations < 1) throw ConfigError("optimize needs >= 2 particles and >= 1 iteration");
  if (c.ensemble.runs < 1 || c.ensemble.min_perched < 0) throw ConfigError("ensemble needs at least one run");
}

/// Overlays `kv` on the defaults. Unknown keys and a missing scenario are
/// rejected.
inline RunConfig from_keys(const config::KeyValues& kv) {
  if (!kv.contains("scenario")) throw ConfigError("config must name a scenario");
  RunConfig c;
  for (const auto& [key, value] : kv) {
    const auto& table = detail::fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const detail::Field& f) { return f.key == key; });
    if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
    it->set(c, value);
  }
  validate(c);
  return c;
}

/// Every key with its current value.
inline config::KeyValues to_keys(const RunConfig& c) {
  config::KeyValues kv;
  for (const auto& f : detail::fields()) kv.emplace(f.key, f.get(c));
  return kv;
}

inline RunConfig parse_run_config(std::string_view text) { return from_keys(config::parse_text(text)); }

inline std::string serialize(const RunConfig& c) { return config::serialize(to_keys(c)); }

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

// ---------------------------------------------------------------------------
// Scenarios

enum ExitCode : int { kSuccess = 0, kCriteriaFailed = 1, kConfigError = 2 };

struct ScenarioReport {
  int exit_code = kSuccess;
  std::vector<std::string> files;  // written, relative to the output dir
  std::vector<std::pair<std::string, std::string>> summary;  // key, value
};

/// Worker count from PERCHSIM_THREADS, else the hardware concurrency.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PERCHSIM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Runs job(i) for i in [0, count) on up to `workers` threads. Each job
/// writes only its own slot, so the result is independent of scheduling.
template <class Job>
void parallel_for(std::size_t count, unsigned workers, Job job) {
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(count, 1)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) job(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Inclusive grid lo, lo + step, ... up to hi (with a small tolerance).
inline std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

/// Symmetric grid around zero that always contains zero exactly.
inline std::vector<double> symmetric_grid(double half, double step) {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor(half / step + 1e-9));
  for (long i = -n; i <= n; ++i) out.push_back(static_cast<double>(i) * step);
  return out;
}

inline void write_trajectory(std::ostream& out, const autopilot::MissionResult& r) {
  csv::Writer w(out, {"t_s", "X", "Y", "Z", "Vx", "theta_deg", "psi_deg", "flap_hz", "delta_e", "delta_r", "beta_deg",
                      "phase"});
  for (const autopilot::Sample& s : r.trajectory)
    w.row({s.t_s, s.state.x, s.state.y, s.state.z, s.state.vx, s.state.pitch_deg, s.state.yaw_deg, s.cmd.flap_hz,
           s.cmd.delta_e_deg, s.cmd.delta_r_deg, s.state.beta_deg, std::string(autopilot::to_string(s.phase))});
}

namespace detail {

class Output {
 public:
  Output(const std::filesystem::path& dir, ScenarioReport& rep) : dir_(dir), rep_(rep) {
    std::filesystem::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir_ / name).string());
    rep_.files.push_back(name);
    return f;
  }

 private:
  std::filesystem::path dir_;
  ScenarioReport& rep_;
};

inline void note(ScenarioReport& rep, std::string key, std::string value) {
  rep.summary.emplace_back(std::move(key), std::move(value));
}

inline void criterion(ScenarioReport& rep, const std::string& name, bool ok) {
  note(rep, "criterion " + name, ok ? "pass" : "FAIL");
  if (!ok) rep.exit_code = kCriteriaFailed;
}

inline std::string num(double v) { return config::format_number(v); }

inline void claw_sweep(const RunConfig& c, Output& out, ScenarioReport& rep) {
  const auto& g = c.mission.claw;
  const auto& s = c.mission.spring;
  claw::validate(g, s);
  auto file = out.open("claw_sweep.csv");
  csv::Writer w(file, {"diameter_m", "contact_force_N", "holding_torque_Nm"});
  for (double d : grid(c.claw_sweep.diameter_min_m, c.claw_sweep.diameter_max_m, c.claw_sweep.diameter_step_m)) {
    BranchSpec b = c.mission.branch;
    b.diameter_m = d;
    try {
      w.row({d, claw::contact_force(g, s, b), claw::holding_torque(g, s, b)});
    } catch (const NoSpikeContact&) {
      w.row({d, 0.0, 0.0});
    }
  }
  BranchSpec nominal = c.mission.branch;
  nominal.diameter_m = 0.06;
  const double force = claw::contact_force(g, s, nominal);
  const double hold = claw::holding_torque(g, s, nominal);
  const double open = std::abs(claw::claw_torque(g, s, g.psi_open_deg));
  const double release = claw::release_force(g, s);
  note(rep, "contact_force_6cm_N", num(force));
  note(rep, "holding_torque_6cm_Nm", num(hold));
  note(rep, "open_torque_Nm", num(open));
  note(rep, "release_force_N", num(release));
  note(rep, "minimum_diameter_m", num(claw::minimum_branch_diameter(g)));
  criterion(rep, "contact force at 6 cm within 5% of 56.8 N", std::abs(force - 56.8) <= 0.05 * 56.8);
  criterion(rep, "open torque at most 0.2 N*m", open <= 0.2);
  criterion(rep, "release force within 15% of 11.4 N", std::abs(release - 11.4) <= 0.15 * 11.4);
  criterion(rep, "holding torque at 6 cm at least 2.0 N*m", hold >= 2.0);
}

inline void impact_suite(const RunConfig& c, Output& out, ScenarioReport& rep) {
  const auto& s = c.impact;
  const std::vector<double> speeds = grid(0.0, s.speed_max_mps, s.speed_step_mps);
  const std::vector<double> offsets = symmetric_grid(s.misalignment_max_m, s.misalignment_step_m);
  std::vector<leg::ImpactRecord> recs(speeds.size() * offsets.size());
  parallel_for(recs.size(), worker_count(), [&](std::size_t i) {
    recs[i] = leg::simulate_impact(c.mission.leg, c.mission.robot.mass_kg, speeds[i % speeds.size()],
                                   offsets[i / speeds.size()], c.mission.branch, 1e-4, c.mission.contact);
  });
  auto file = out.open("impact_sweep.csv");
  csv::Writer w(file, {"speed_mps", "misalignment_m", "peak_force_N", "time_to_bounce_ms"});
  double worst = 0.0;
  bool monotone = true;
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    double prev = 0.0;
    for (std::size_t i = 0; i < speeds.size(); ++i) {
      const leg::ImpactRecord& r = recs[j * speeds.size() + i];
      w.row({speeds[i], offsets[j], r.peak_force_n, r.time_to_bounce_ms});
      if (speeds[i] <= s.force_limit_speed_mps + 1e-9) worst = std::max(worst, r.peak_force_n);
      monotone = monotone && r.peak_force_n >= prev;
      prev = r.peak_force_n;
    }
  }
  note(rep, "worst_peak_force_N", num(worst));
  criterion(rep, "peak force below the limit", worst < s.force_limit_n);
  criterion(rep, "peak force monotone in speed", monotone);
}

inline void mission_run(const RunConfig& c, autopilot::MissionConfig m, Output& out, ScenarioReport& rep,
                        bool flight_only) {
  m.seed = c.seed;
  m.disturbance = autopilot::DisturbanceSpec::none();
  if (flight_only) {
    m.robot = flight::without_appendage(m.robot);
    m.branch_mode = autopilot::BranchMode::None;
  } else {
    m.branch_mode = autopilot::BranchMode::Soft;
  }
  const autopilot::MissionResult r = autopilot::run_mission(m);
  auto file = out.open("trajectory.csv");
  write_trajectory(file, r);
  note(rep, "diagnostic", r.diagnostic.empty() ? "none" : r.diagnostic);
  if (flight_only) {
    const double err = autopilot::altitude_error_at_branch(r, m);
    note(rep, "altitude_error_at_branch_m", r.crossing ? num(err) : "no crossing");
    note(rep, "max_lateral_m", num(r.max_lateral_m));
    criterion(rep, "reaches the branch station", r.crossing.has_value());
    criterion(rep, "altitude error at branch within 10 cm", std::abs(err) <= 0.10);
  } else {
    note(rep, "contact", r.contact ? "true" : "false");
    note(rep, "peak_force_N", num(r.impact.peak_force_n));
    criterion(rep, "branch contact logged", r.contact);
    criterion(rep, "claw never locks", !r.impact.locked);
  }
}

}  // namespace detail

/// Branch-crossing state of a successful perch.
inline bool in_flight_envelope(const autopilot::CrossingState& x) {
  return x.vx_mps >= 2.07 && x.vx_mps <= 2.8 && x.yaw_deg >= -8.3 && x.yaw_deg <= 4.0 && x.pitch_deg >= 23.6 &&
         x.pitch_deg <= 31.8 && x.y_m >= -0.23 && x.y_m <= 0.02 && x.z_m >= 1.95 && x.z_m <= 2.06;
}

namespace detail {

inline void full_perch(const RunConfig& c, Output& out, ScenarioReport& rep) {
  const auto runs = static_cast<std::size_t>(c.ensemble.runs);
  std::vector<autopilot::MissionResult> results(runs);
  parallel_for(runs, worker_count(), [&](std::size_t i) {
    autopilot::MissionConfig m = c.mission;
    m.seed = c.seed + i;
    results[i] = autopilot::run_mission(m);
  });
  auto table = out.open("ensemble.csv");
  csv::Writer w(table, {"seed", "outcome", "Vx_mps", "psi_deg", "theta_deg", "Y_m", "Z_m", "peak_force_N"});
  int perched = 0;
  bool inside = true;
  for (std::size_t i = 0; i < runs; ++i) {
    const auto& r = results[i];
    const auto seed = static_cast<std::int64_t>(c.seed + i);
    auto traj = out.open("trajectory_seed" + std::to_string(seed) + ".csv");
    write_trajectory(traj, r);
    const autopilot::CrossingState x = r.crossing.value_or(autopilot::CrossingState{});
    w.row({seed, std::string(touchdown::to_string(r.outcome)), x.vx_mps, x.yaw_deg, x.pitch_deg, x.y_m, x.z_m,
           r.impact.peak_force_n});
    if (r.outcome == touchdown::PerchOutcome::Perched) {
      ++perched;
      inside = inside && r.crossing && in_flight_envelope(*r.crossing);
    }
  }
  note(rep, "perched", std::to_string(perched) + "/" + std::to_string(runs));
  criterion(rep, "enough perched runs", perched >= c.ensemble.min_perched);
  criterion(rep, "perched crossings inside the flight envelope", inside);
}

inline void envelope(const RunConfig& c, Output& out, ScenarioReport& rep) {
  const auto& e = c.envelope;
  const auto& m = c.mission;
  const double hold = claw::holding_torque(m.claw, m.spring, m.branch);
  const std::vector<double> thetas = grid(e.theta_min_deg, e.theta_max_deg, e.theta_step_deg);
  const std::vector<double> speeds = grid(0.0, e.speed_max_mps, e.speed_step_mps);
  const std::vector<double> psis = symmetric_grid(e.psi_max_deg, e.psi_step_deg);
  const auto by_speed = touchdown::sweep_speed(thetas, speeds, hold, m.touchdown);
  const auto by_yaw = touchdown::sweep_yaw(thetas, psis, hold, e.yaw_grid_speed_mps, m.touchdown);
  {
    auto file = out.open("envelope_speed.csv");
    csv::Writer w(file, {"theta_leg_deg", "speed_mps", "outcome"});
    for (const auto& cell : by_speed) w.row({cell.theta_leg_deg, cell.value, std::string(touchdown::to_string(cell.outcome))});
  }
  {
    auto file = out.open("envelope_yaw.csv");
    csv::Writer w(file, {"theta_leg_deg", "psi_branch_deg", "outcome"});
    for (const auto& cell : by_yaw) w.row({cell.theta_leg_deg, cell.value, std::string(touchdown::to_string(cell.outcome))});
  }
  bool ordered = true;
  double best = -1.0, best_theta = 0.0;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    ordered = ordered && touchdown::ordered_by_speed(std::span(by_speed).subspan(i * speeds.size(), speeds.size()));
    const double hw = touchdown::perched_half_width(std::span(by_yaw).subspan(i * psis.size(), psis.size()));
    if (hw > best) {
      best = hw;
      best_theta = thetas[i];
    }
  }
  note(rep, "hold_torque_Nm", num(hold));
  note(rep, "best_theta_leg_deg", num(best_theta));
  note(rep, "perched_half_width_deg", num(best));
  criterion(rep, "speed rows ordered backward, perched, forward", ordered);
  criterion(rep, "yaw half-width between 10 and 20 deg", best >= 10.0 && best <= 20.0);
}

inline void optimize(const RunConfig& c, Output& out, ScenarioReport& rep) {
  const auto& o = c.optimize;
  const double mass = c.mission.robot.mass_kg;
  const std::vector<leg::SuiteCase> suite{{2.0, mass}, {3.0, mass}, {4.0, mass}};
  const leg::CostScale scale = leg::baseline_scale(suite, c.mission.leg);
  pso::PsoConfig pc;
  pc.particles = static_cast<std::size_t>(o.particles);
  pc.iterations = static_cast<std::size_t>(o.iterations);
  pc.inertia = o.inertia;
  pc.cognitive = o.cognitive;
  pc.social = o.social;
  pc.seed = c.seed;
  pc.workers = worker_count();
  pc.bounds = {{o.space.length_lo, o.space.length_hi}, {o.space.rate_lo, o.space.rate_hi}, {o.space.servo_lo, o.space.servo_hi}};
  const auto res = pso::pso_minimize(
      [&](std::span<const double> x) { return leg::leg_cost(o.space.make(x, c.mission.leg), suite, o.weights, scale); },
      pc);
  auto file = out.open("pso_log.csv");
  csv::Writer w(file, {"iteration", "best_cost", "best_x0", "best_x1", "best_x2"});
  bool monotone = true;
  for (std::size_t i = 0; i < res.history.size(); ++i) {
    const auto& x = res.best_x_history[i];
    w.row({static_cast<std::int64_t>(i + 1), res.history[i], x[0], x[1], x[2]});
    if (i > 0 && res.history[i] > res.history[i - 1]) monotone = false;
  }
  note(rep, "best_cost", num(res.best_cost));
  note(rep, "best_link_length_m", num(res.best_x[0]));
  note(rep, "best_spring_rate_n_per_m", num(res.best_x[1]));
  note(rep, "best_servo_stiffness_nm_per_rad", num(res.best_x[2]));
  criterion(rep, "best cost history monotone", monotone);
}

inline void launcher(const RunConfig& c, Output& out, ScenarioReport& rep) {
  const LaunchProfile p = launch_profile(c.mission.launch_speed_mps, c.mission.rail_length_m, c.launch_lateral_offset_m);
  auto file = out.open("launch_profile.csv");
  csv::Writer w(file, {"t_s", "position_m", "speed_mps"});
  const double t_end = p.exit_time_s();
  constexpr int kSamples = 100;
  for (int i = 0; i <= kSamples; ++i) {
    const double t = t_end * i / kSamples;
    w.row({t, 0.5 * p.acceleration_mps2 * t * t, p.acceleration_mps2 * t});
  }
  note(rep, "acceleration_mps2", num(p.acceleration_mps2));
  note(rep, "exit_time_s", num(t_end));
  note(rep, "lateral_offset_m", num(p.lateral_offset_m));
  const double exit_speed = p.acceleration_mps2 * t_end;
  criterion(rep, "exit speed equals the target", std::abs(exit_speed - p.target_speed_mps) <= 1e-9);
}

}  // namespace detail

/// Runs the scenario, writes its CSVs and summary.txt into the output
/// directory and returns the exit code. Config problems map to exit 2.
inline ScenarioReport run_scenario(const RunConfig& cfg) {
  ScenarioReport rep;
  try {
    validate(cfg);
  } catch (const ConfigError& e) {
    rep.exit_code = kConfigError;
    detail::note(rep, "config_error", e.what());
    return rep;
  }
  detail::Output out(cfg.output_dir, rep);
  detail::note(rep, "scenario", std::string(to_string(cfg.scenario)));
  detail::note(rep, "seed", std::to_string(cfg.seed));
  switch (cfg.scenario) {
    case Scenario::ClawSweep: detail::claw_sweep(cfg, out, rep); break;
    case Scenario::ImpactSuite: detail::impact_suite(cfg, out, rep); break;
    case Scenario::FlightOnly: detail::mission_run(cfg, cfg.mission, out, rep, true); break;
    case Scenario::SoftBranch: detail::mission_run(cfg, cfg.mission, out, rep, false); break;
    case Scenario::FullPerch: detail::full_perch(cfg, out, rep); break;
    case Scenario::Envelope: detail::envelope(cfg, out, rep); break;
    case Scenario::Optimize: detail::optimize(cfg, out, rep); break;
    case Scenario::LauncherProfile: detail::launcher(cfg, out, rep); break;
  }
  detail::note(rep, "result", rep.exit_code == kSuccess ? "criteria met" : "criteria failed");
  auto summary = out.open("summary.txt");
  for (const auto& [k, v] : rep.summary) summary << k << ": " << v << '\n';
  return rep;
}

}  // namespace perchsim::harness
