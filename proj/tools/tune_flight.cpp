// Tunes the pitch and altitude loop gains on the disturbance-free plant:
// pitch step settling and overshoot, and altitude at the branch station for
// the three altitude setpoints. Prints the gains to freeze as defaults.
#include <cmath>
#include <cstdio>
#include <span>

#include "perchsim/autopilot.hpp"
#include "perchsim/pso.hpp"

using namespace perchsim;
using namespace perchsim::autopilot;

namespace {

MissionConfig from_vector(std::span<const double> x) {
  MissionConfig c;
  c.gains.pitch.kp = x[0];
  c.gains.pitch.ki = x[1];
  c.gains.altitude.kp = x[2];
  c.gains.altitude.ki = x[3];
  c.gains.altitude.kd = x[4];
  c.branch_mode = BranchMode::None;
  return c;
}

struct Score {
  double cost = 0.0;
  double settle = 0.0, overshoot = 0.0;
  double err[3]{};
  double vx = 0.0, pitch = 0.0;
};

Score evaluate(std::span<const double> x) {
  Score sc;
  MissionConfig c = from_vector(x);
  try {
    const StepResponse step = pitch_step_test(c);
    sc.settle = step.settle_time_s;
    sc.overshoot = step.overshoot_deg;
    sc.cost += 10.0 * std::pow(std::max(0.0, step.overshoot_deg - 3.0), 2);
    sc.cost += std::isfinite(step.settle_time_s) ? 10.0 * std::max(0.0, step.settle_time_s - 0.8) : 50.0;
    const double setpoints[3] = {1.75, 2.0, 2.25};
    for (int i = 0; i < 3; ++i) {
      c.altitude_setpoint_m = setpoints[i];
      const MissionResult r = run_mission(c);
      if (!r.crossing) return {1e3};
      sc.err[i] = r.crossing->z_m - setpoints[i];
      double ise = 0.0;
      for (const Sample& q : r.trajectory)
        if (q.state.x > 8.0) ise += std::pow(q.state.z - setpoints[i], 2) / c.control_rate_hz;
      sc.cost += 20.0 * ise + 50.0 * std::pow(std::max(0.0, std::abs(sc.err[i]) - 0.04), 2) * 100.0;
      if (i == 1) {
        sc.vx = r.crossing->vx_mps;
        sc.pitch = r.crossing->pitch_deg;
        sc.cost += 10.0 * std::pow(std::max(0.0, std::abs(sc.vx - 2.45) - 0.2), 2);
        sc.cost += 0.1 * std::pow(std::max(0.0, std::abs(sc.pitch - 28.0) - 2.5), 2);
      }
    }
  } catch (const Error&) {
    return {1e3};
  }
  return sc;
}

}  // namespace

int main() {
  pso::PsoConfig cfg;
  cfg.particles = 24;
  cfg.iterations = 40;
  cfg.bounds = {{2.0, 12.0}, {0.0, 3.0}, {0.5, 10.0}, {0.0, 5.0}, {0.0, 2.0}};
  cfg.seed = 11;
  const auto r = pso::pso_minimize([](std::span<const double> x) { return evaluate(x).cost; }, cfg);
  const Score s = evaluate(r.best_x);
  std::printf("cost %.5g\nx =", r.best_cost);
  for (double v : r.best_x) std::printf(" %.4f", v);
  std::printf("\nsettle %.3f s overshoot %.2f deg\n", s.settle, s.overshoot);
  std::printf("altitude error at branch: %.3f %.3f %.3f m\n", s.err[0], s.err[1], s.err[2]);
  std::printf("crossing vx %.3f pitch %.2f\n", s.vx, s.pitch);
}
