// Everything in one include.
#pragma once

#include "perchsim/autopilot.hpp"
#include "perchsim/branch.hpp"
#include "perchsim/claw.hpp"
#include "perchsim/common.hpp"
#include "perchsim/config.hpp"
#include "perchsim/csv.hpp"
#include "perchsim/flight_plant.hpp"
#include "perchsim/harness.hpp"
#include "perchsim/leg_impact.hpp"
#include "perchsim/ode.hpp"
#include "perchsim/perception.hpp"
#include "perchsim/pso.hpp"
#include "perchsim/rng.hpp"
#include "perchsim/touchdown.hpp"
