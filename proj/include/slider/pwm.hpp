#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "slider/allocation.hpp"
#include "slider/dynamics.hpp"
#include "slider/errors.hpp"
#include "slider/thrusters.hpp"

namespace slider {

/// Integer count of `unit` in `value`, or a ConfigurationError when `value` is not a whole multiple.
inline std::int64_t whole_multiple(double value, double unit, const char* what) {
    if (!(value > 0.0) || !(unit > 0.0) || !std::isfinite(value) || !std::isfinite(unit))
        throw ConfigurationError(std::string(what) + ": periods must be positive");
    const double ratio = value / unit;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw ConfigurationError(std::string(what) + ": " + std::to_string(value) + " is not a whole multiple of " +
                                 std::to_string(unit));
    return static_cast<std::int64_t>(rounded);
}

struct PwmSettings {
    double control_period = 0.5;  // [s] zero-order hold of the allocator output
    double pwm_period = 0.1;      // [s] 10 Hz
    double min_on_time = 0.01;    // [s] valve minimum on-time
    double tick = 0.001;          // [s] scheduler resolution
    double delay = 0.0;           // [s] pure valve delay; pulses start this late within each period
};

/**
 * On/off pulse train for each thruster over one control period.
 *
 * Every PWM period carries the same leading-edge pulse of on_ticks[k] ticks.
 * An on-time is either zero or lies in [min_on_ticks, period_ticks].
 */
struct PwmSchedule {
    std::array<std::int64_t, kThrusterCount> on_ticks{};
    std::int64_t period_ticks = 100;
    std::int64_t min_on_ticks = 10;
    std::int64_t periods_per_control = 5;
    std::int64_t delay_ticks = 0;
    double tick = 0.001;  // [s]

    double on_time(std::size_t k) const { return static_cast<double>(on_ticks.at(k)) * tick; }
    double period() const { return static_cast<double>(period_ticks) * tick; }
    double control_period() const { return period() * static_cast<double>(periods_per_control); }

    /// Mean thrust over a control period when thruster k fires at t_max during its pulses.
    double mean_thrust(std::size_t k, double t_max) const {
        return t_max * static_cast<double>(on_ticks.at(k)) / static_cast<double>(period_ticks);
    }
};

/**
 * On-time in ticks for one thrust level.
 *
 * Round to the nearest tick; an on-time that would fall strictly between zero and
 * the minimum on-time becomes the minimum when the ideal duty is at least half
 * the minimum duty, and zero otherwise.
 */
inline std::int64_t pwm_on_ticks(double thrust, double t_max, std::int64_t period_ticks, std::int64_t min_on_ticks) {
    const double duty = std::clamp(thrust / t_max, 0.0, 1.0);
    const auto ticks = static_cast<std::int64_t>(std::llround(duty * static_cast<double>(period_ticks)));
    if (ticks > 0 && ticks < min_on_ticks) {
        const double half_min_duty = static_cast<double>(min_on_ticks) / (2.0 * static_cast<double>(period_ticks));
        return duty >= half_min_duty ? min_on_ticks : 0;
    }
    return ticks;
}

inline PwmSchedule pwm_modulate(const ThrusterDuties& duties, const ThrusterBank& bank, const PwmSettings& settings = {}) {
    PwmSchedule schedule;
    schedule.tick = settings.tick;
    schedule.period_ticks = whole_multiple(settings.pwm_period, settings.tick, "pwm period");
    schedule.periods_per_control = whole_multiple(settings.control_period, settings.pwm_period, "control period");
    schedule.min_on_ticks = static_cast<std::int64_t>(std::llround(settings.min_on_time / settings.tick));
    if (schedule.min_on_ticks < 0 || schedule.min_on_ticks > schedule.period_ticks)
        throw ConfigurationError("minimum on-time must lie within one PWM period");
    schedule.delay_ticks = static_cast<std::int64_t>(std::llround(settings.delay / settings.tick));
    if (schedule.delay_ticks < 0) throw ConfigurationError("thruster delay must be non-negative");

    for (std::size_t k = 0; k < kThrusterCount; ++k) {
        schedule.on_ticks[k] = pwm_on_ticks(duties.magnitudes[static_cast<Eigen::Index>(k)], bank.thruster(k).t_max,
                                            schedule.period_ticks, schedule.min_on_ticks);
    }
    return schedule;
}

/// One propagation sample of the pulse train.
struct PulseSample {
    ThrusterSet on;
    Wrench wrench;
};

/**
 * Samples a schedule onto a propagation grid of step `dt`.
 *
 * A thruster counts as on for a sample when its pulse covers at least half of
 * the sample window, so each thruster contributes exactly 0 or t_max. With a
 * nonzero delay, pulse time pushed past the end of the control period is dropped.
 */
inline std::vector<PulseSample> pulses_to_wrench_series(const PwmSchedule& schedule, const ThrusterBank& bank, double dt) {
    // Work in integer microseconds so the window arithmetic is exact.
    constexpr double us_per_s = 1e6;
    const std::int64_t tick_us = whole_multiple(schedule.tick, 1.0 / us_per_s, "scheduler tick");
    const std::int64_t dt_us = whole_multiple(dt, 1.0 / us_per_s, "propagation step");
    const std::int64_t period_us = schedule.period_ticks * tick_us;
    const std::int64_t control_us = period_us * schedule.periods_per_control;
    if (control_us % dt_us != 0)
        throw ConfigurationError("propagation step must divide the control period");
    const std::int64_t samples = control_us / dt_us;
    const std::int64_t delay_us = schedule.delay_ticks * tick_us;

    auto on_overlap = [&](std::size_t k, std::int64_t begin, std::int64_t end) {
        const std::int64_t on_us = schedule.on_ticks[k] * tick_us;
        if (on_us == 0) return std::int64_t{0};
        std::int64_t total = 0;
        for (std::int64_t p = 0; p < schedule.periods_per_control; ++p) {
            const std::int64_t pulse_begin = p * period_us + delay_us;
            const std::int64_t pulse_end = std::min(pulse_begin + on_us, control_us);
            total += std::max<std::int64_t>(0, std::min(end, pulse_end) - std::max(begin, pulse_begin));
        }
        return total;
    };

    std::vector<PulseSample> series;
    series.reserve(static_cast<std::size_t>(samples));
    for (std::int64_t j = 0; j < samples; ++j) {
        const std::int64_t begin = j * dt_us;
        const std::int64_t end = begin + dt_us;
        PulseSample sample;
        for (std::size_t k = 0; k < kThrusterCount; ++k)
            if (2 * on_overlap(k, begin, end) >= dt_us) sample.on.set(k);
        sample.wrench = wrench_from_set(bank, sample.on);
        series.push_back(sample);
    }
    return series;
}

}  // namespace slider
