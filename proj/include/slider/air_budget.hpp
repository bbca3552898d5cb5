#pragma once

#include <algorithm>

#include "slider/errors.hpp"

namespace slider {

/**
 * Linear tank-pressure drain: the bearings bleed continuously and each open
 * thruster adds a fixed drain rate.
 */
struct AirBudget {
    double tank_pressure = 200.0;       // [bar]
    double bearing_flow_rate = 0.0;     // [bar/s]
    double thruster_flow_rate = 0.0;    // [bar/s] per open thruster
    double depleted_threshold = 7.0;    // [bar] thruster regulator set point

    bool depleted() const { return tank_pressure <= depleted_threshold; }
};

/// Operating point the default drain rates are fitted to.
struct AirCalibration {
    double fill_pressure = 200.0;        // [bar]
    double depleted_threshold = 7.0;     // [bar]
    double flight_time = 420.0;          // [s]
    double thruster_duty = 0.30;         // fraction of flight time with a thruster set open
    double thrusters_per_burst = 2.0;    // a translation command opens two thrusters
    double thruster_to_bearing_ratio = 1.0;  // drain of one open thruster relative to all bearings
};

inline AirBudget calibrated_air_budget(const AirCalibration& c = {}) {
    if (!(c.flight_time > 0.0) || !(c.fill_pressure > c.depleted_threshold))
        throw ParameterError("air calibration needs a positive flight time and usable pressure");
    const double mean_open = c.thruster_duty * c.thrusters_per_burst;
    const double bearing = (c.fill_pressure - c.depleted_threshold) /
                           (c.flight_time * (1.0 + c.thruster_to_bearing_ratio * mean_open));
    return AirBudget{c.fill_pressure, bearing, c.thruster_to_bearing_ratio * bearing, c.depleted_threshold};
}

inline AirBudget update_air_budget(AirBudget budget, double dt, int active_thruster_count) {
    if (dt < 0.0) throw ParameterError("air budget step must be non-negative");
    if (active_thruster_count < 0) throw ParameterError("active thruster count must be non-negative");
    const double drain = (budget.bearing_flow_rate + active_thruster_count * budget.thruster_flow_rate) * dt;
    budget.tank_pressure = std::max(0.0, budget.tank_pressure - std::max(0.0, drain));
    return budget;
}

}  // namespace slider
