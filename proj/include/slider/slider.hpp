#pragma once

// Umbrella header for the simulator library. The WebSocket transport
// (slider/teleop_server.hpp) is separate because it pulls in Boost.Beast.

#include "slider/air_budget.hpp"
#include "slider/allocation.hpp"
#include "slider/dynamics.hpp"
#include "slider/errors.hpp"
#include "slider/profile.hpp"
#include "slider/protocol.hpp"
#include "slider/pwm.hpp"
#include "slider/scenario.hpp"
#include "slider/scenario_file.hpp"
#include "slider/teleop.hpp"
#include "slider/teleop_loop.hpp"
#include "slider/thrusters.hpp"
#include "slider/trajectory_io.hpp"
