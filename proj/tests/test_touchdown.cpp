#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "perchsim/claw.hpp"
#include "perchsim/touchdown.hpp"
#include "oracles.hpp"

using namespace perchsim;
using namespace perchsim::touchdown;

namespace {

double default_hold() { return claw::holding_torque(claw::ClawGeometry{}, claw::SpringSpec{}, BranchSpec{}); }

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
  return v;
}

}  // namespace

TEST(Touchdown, MatchesThePivotOracleOverSpeed) {
  const TouchdownGeometry g;
  const double hold = default_hold();
  int agree = 0, total = 0;
  for (double th : linspace(0.0, 90.0, 20))
    for (double v : linspace(0.0, 6.0, 20)) {
      const TouchdownState st = make_touchdown_state(v, th, 0.0, 30.0, g);
      agree += evaluate_touchdown(st, hold, g) == oracle::pivot(st, hold, g) ? 1 : 0;
      ++total;
    }
  EXPECT_GE(agree, 0.95 * total);
}

TEST(Touchdown, MatchesThePivotOracleOverYaw) {
  const TouchdownGeometry g;
  const double hold = default_hold();
  int agree = 0, total = 0;
  for (double th : linspace(0.0, 90.0, 20))
    for (double psi : linspace(-30.0, 30.0, 20)) {
      const TouchdownState st = make_touchdown_state(2.5, th, psi, 30.0, g);
      agree += evaluate_touchdown(st, hold, g) == oracle::pivot(st, hold, g) ? 1 : 0;
      ++total;
    }
  EXPECT_GE(agree, 0.95 * total);
}

TEST(Touchdown, MassLayoutRecomputed) {
  TouchdownGeometry g;
  g.hip_offset_body_m = {0.0, -0.2};
  const TouchdownState st = make_touchdown_state(1.0, 0.0, 0.0, 0.0, g);
  // Claw straight below the hip: body CoM sits reach + 0.2 above the branch,
  // the leg CoM half a reach above it.
  const double m = g.total_mass_kg();
  const double z = (g.body_mass_kg * (g.reach_m + 0.2) + g.appendage_mass_kg * 0.5 * g.reach_m) / m;
  EXPECT_NEAR(st.com_offset_m.x, 0.0, 1e-15);
  EXPECT_NEAR(st.com_offset_m.y, z, 1e-15);
  const double inertia = g.body_mass_kg * std::pow(g.reach_m + 0.2, 2) +
                         g.appendage_mass_kg * std::pow(0.5 * g.reach_m, 2) + g.body_inertia_kgm2;
  EXPECT_NEAR(st.inertia_kgm2, inertia, 1e-15);
  EXPECT_NEAR(lock_rate(st, g), m * z * 1.0 / inertia, 1e-12);
}

TEST(Touchdown, SpeedRowsAreOrdered) {
  const TouchdownGeometry g;
  std::vector<double> thetas, speeds;
  for (double th = 0.0; th <= 90.0; th += 10.0) thetas.push_back(th);
  for (double v = 0.0; v <= 6.0; v += 0.25) speeds.push_back(v);
  const auto cells = sweep_speed(thetas, speeds, default_hold(), g);
  ASSERT_EQ(cells.size(), thetas.size() * speeds.size());
  int rows_with_perch = 0;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const std::span<const EnvelopeCell> row(cells.data() + i * speeds.size(), speeds.size());
    EXPECT_TRUE(ordered_by_speed(row)) << thetas[i];
    for (const auto& c : row)
      if (c.outcome == PerchOutcome::Perched) {
        ++rows_with_perch;
        break;
      }
  }
  EXPECT_GT(rows_with_perch, 0);
}

TEST(Touchdown, YawHalfWidthOfTheBestLegAngle) {
  std::vector<double> thetas, psis;
  for (double th = 0.0; th <= 90.0; th += 10.0) thetas.push_back(th);
  for (double p = -30.0; p <= 30.0; p += 1.0) psis.push_back(p);
  const auto cells = sweep_yaw(thetas, psis, default_hold(), 2.5);
  double best = -1.0;
  for (std::size_t i = 0; i < thetas.size(); ++i)
    best = std::max(best, perched_half_width(std::span(cells).subspan(i * psis.size(), psis.size())));
  EXPECT_GE(best, 10.0);
  EXPECT_LE(best, 20.0);
}

TEST(Touchdown, SymmetricInBranchYaw) {
  const double hold = default_hold();
  for (double th = 0.0; th <= 90.0; th += 15.0)
    for (double psi = 1.0; psi <= 40.0; psi += 3.0)
      EXPECT_EQ(evaluate_touchdown(make_touchdown_state(2.5, th, psi), hold),
                evaluate_touchdown(make_touchdown_state(2.5, th, -psi), hold));
}

TEST(Touchdown, InfiniteHoldAlwaysPerches) {
  const double inf = std::numeric_limits<double>::infinity();
  for (double v : {0.0, 2.0, 6.0, 20.0})
    for (double th : {0.0, 45.0, 90.0})
      EXPECT_EQ(evaluate_touchdown(make_touchdown_state(v, th, 25.0), inf), PerchOutcome::Perched);
}

TEST(Touchdown, NoLockIsAMiss) {
  TouchdownState st = make_touchdown_state(2.5, 90.0, 0.0);
  st.locked = false;
  EXPECT_EQ(evaluate_touchdown(st, default_hold()), PerchOutcome::Missed);
  EXPECT_THROW(make_touchdown_state(-1.0, 0.0, 0.0), DomainError);
  EXPECT_THROW(make_touchdown_state(1.0, 95.0, 0.0), DomainError);
  TouchdownState bad;
  bad.inertia_kgm2 = 0.0;
  EXPECT_THROW(evaluate_touchdown(bad, 1.0), DomainError);
}

TEST(Touchdown, MoreHoldNeverHurts) {
  // A stronger claw can only widen the perched set at a given speed.
  for (double th = 0.0; th <= 90.0; th += 10.0)
    for (double v = 0.0; v <= 6.0; v += 0.5) {
      const TouchdownState st = make_touchdown_state(v, th, 0.0);
      if (evaluate_touchdown(st, 2.0) == PerchOutcome::Perched) {
        EXPECT_EQ(evaluate_touchdown(st, 4.0), PerchOutcome::Perched) << th << " " << v;
      }
    }
}

TEST(Envelope, OrderingOnSyntheticRows) {
  using O = PerchOutcome;
  const auto row = [](std::initializer_list<O> os) {
    std::vector<EnvelopeCell> v;
    double s = 0.0;
    for (O o : os) v.push_back({0.0, s += 1.0, o});
    return v;
  };
  EXPECT_TRUE(ordered_by_speed(row({O::FallBackward, O::Perched, O::Perched, O::FallForward})));
  EXPECT_TRUE(ordered_by_speed(row({O::Perched, O::FallForward})));
  EXPECT_TRUE(ordered_by_speed(row({O::FallForward, O::FallBackward})));  // no perched cell
  EXPECT_FALSE(ordered_by_speed(row({O::Perched, O::FallBackward})));
  EXPECT_FALSE(ordered_by_speed(row({O::FallForward, O::Perched})));
  EXPECT_FALSE(ordered_by_speed(row({O::Perched, O::Missed})));
}

TEST(Envelope, HalfWidthOnSyntheticRows) {
  using O = PerchOutcome;
  std::vector<EnvelopeCell> r;
  for (int p = -3; p <= 3; ++p) r.push_back({0.0, double(p), std::abs(p) <= 2 ? O::Perched : O::FallBackward});
  EXPECT_EQ(perched_half_width(r), 2.0);
  r[2].outcome = O::FallForward;  // psi = -1
  EXPECT_EQ(perched_half_width(r), 0.0);
  r[3].outcome = O::FallForward;  // psi = 0
  EXPECT_EQ(perched_half_width(r), -1.0);
}

TEST(Scaling, ConstantLengthTimesSpeedSquared) {
  EXPECT_DOUBLE_EQ(scaling_envelope(1.5), 4.0);
  for (double l : {0.1, 0.5, 3.0, 10.0}) EXPECT_NEAR(l * std::pow(scaling_envelope(l), 2), 1.5 * 16.0, 1e-9);
  EXPECT_GT(scaling_envelope(0.5), scaling_envelope(1.0));
  EXPECT_THROW(scaling_envelope(0.0), DomainError);
}
