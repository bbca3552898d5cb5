#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "slider/allocation.hpp"
#include "slider/dynamics.hpp"
#include "slider/errors.hpp"
#include "slider/profile.hpp"
#include "slider/pwm.hpp"
#include "slider/thrusters.hpp"

namespace slider {

enum class ActuationMode { Ideal, ThrusterActuated };

struct ScenarioConfig {
    SliderState initial_state;
    WrenchProfile command_profile;
    double duration = 40.0;         // [s]
    double control_dt = 0.5;        // [s] zero-order hold of the command
    double propagation_dt = 0.01;   // [s]
    double pwm_period = 0.1;        // [s]
    double min_on_time = 0.01;      // [s]
    double thruster_delay = 0.0;    // [s]
    ActuationMode mode = ActuationMode::Ideal;
    double table_size = 4.0;        // [m] side of the square table, origin at a corner

    struct Timing {
        std::int64_t steps_per_control;
        std::int64_t control_steps;
    };

    /// Checks the period nesting and returns the integer step counts.
    Timing validate() const {
        if (!initial_state.finite()) throw ConfigurationError("initial state must be finite");
        if (!(table_size > 0.0)) throw ConfigurationError("table size must be positive");
        whole_multiple(pwm_period, propagation_dt, "pwm period");
        whole_multiple(control_dt, pwm_period, "control period");
        Timing timing{};
        timing.steps_per_control = whole_multiple(control_dt, propagation_dt, "control period");
        timing.control_steps = whole_multiple(duration, control_dt, "duration");
        return timing;
    }
};

/// One recorded propagation sample; wrenches are those applied over [t, t + dt).
struct TrajectorySample {
    double t = 0.0;
    SliderState state;
    Wrench commanded;
    Wrench realized;
    ThrusterSet thrusters;

    friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

/// The slider crossed the table edge at this sample (after having been on the table).
struct BoundaryEvent {
    std::size_t sample = 0;
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const BoundaryEvent&, const BoundaryEvent&) = default;
};

struct TrajectoryRecord {
    std::vector<TrajectorySample> samples;
    std::vector<BoundaryEvent> boundary_events;

    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }
    const TrajectorySample& back() const { return samples.back(); }

    friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

inline bool on_table(const SliderState& s, double table_size) {
    return s.x >= 0.0 && s.x <= table_size && s.y >= 0.0 && s.y <= table_size;
}

/// Appends samples and raises an out-of-bounds event at each crossing from table to off-table.
class TrajectoryRecorder {
public:
    explicit TrajectoryRecorder(double table_size) : table_size_(table_size) {}

    void add(const TrajectorySample& sample) {
        const bool inside = on_table(sample.state, table_size_);
        if (!inside && was_inside_)
            record_.boundary_events.push_back({record_.samples.size(), sample.t, sample.state.x, sample.state.y});
        was_inside_ = inside;
        record_.samples.push_back(sample);
    }

    const TrajectoryRecord& record() const { return record_; }
    TrajectoryRecord take() { return std::move(record_); }

private:
    double table_size_;
    bool was_inside_ = true;
    TrajectoryRecord record_;
};

/**
 * @brief Runs one open-loop scenario.
 *
 * The command profile is sampled at the start of every control step and held.
 * Ideal mode applies the held wrench directly. ThrusterActuated mode allocates
 * it to thrust magnitudes, modulates them to pulses and propagates under the
 * resulting on/off thrust.
 *
 * The record holds one sample per propagation step plus the terminal state;
 * the terminal sample repeats the last applied wrench.
 */
inline TrajectoryRecord run_scenario(const ScenarioConfig& config, const SliderParams& params, const ThrusterBank& bank,
                                     const AllocatorOptions& allocator = {}) {
    const auto timing = config.validate();
    params.validate();

    const PwmSettings pwm{config.control_dt, config.pwm_period, config.min_on_time, 0.001, config.thruster_delay};
    const double dt = config.propagation_dt;
    const std::int64_t total_steps = timing.control_steps * timing.steps_per_control;

    TrajectoryRecorder recorder(config.table_size);
    SliderState state = config.initial_state;
    TrajectorySample last{};

    std::vector<PulseSample> pulses;
    for (std::int64_t c = 0; c < timing.control_steps; ++c) {
        const std::int64_t first_step = c * timing.steps_per_control;
        const Wrench commanded = config.command_profile(static_cast<double>(first_step) * dt);
        if (config.mode == ActuationMode::ThrusterActuated) {
            const ThrusterDuties duties = allocate(bank, commanded, allocator);
            pulses = pulses_to_wrench_series(pwm_modulate(duties, bank, pwm), bank, dt);
        }
        for (std::int64_t j = 0; j < timing.steps_per_control; ++j) {
            const std::int64_t step = first_step + j;
            TrajectorySample sample;
            sample.t = static_cast<double>(step) * dt;
            sample.state = state;
            sample.commanded = commanded;
            if (config.mode == ActuationMode::ThrusterActuated) {
                const auto& p = pulses[static_cast<std::size_t>(j)];
                sample.realized = p.wrench;
                sample.thrusters = p.on;
            } else {
                sample.realized = commanded;
            }
            recorder.add(sample);
            state = integrate_step(state, sample.realized, params, dt);
            last = sample;
        }
    }
    last.t = static_cast<double>(total_steps) * dt;
    last.state = state;
    recorder.add(last);
    return recorder.take();
}

/// Per-channel state divergence between two runs on the same time grid.
struct DivergenceReport {
    static constexpr std::array<const char*, 6> kChannels = {"x", "y", "theta", "vx", "vy", "r"};

    std::array<double, 6> max_abs{};
    std::array<double, 6> rms{};
    /// Intra-PWM-period ripple of the velocity difference, per velocity channel (vx, vy, r).
    std::array<double, 3> velocity_ripple{};
    double terminal_position_error = 0.0;    // [m]
    double terminal_position_relative = 0.0; // error / reference net displacement
    std::size_t samples = 0;
};

/**
 * Compares `actuated` against `reference`.
 *
 * The ripple metric removes the slow drift of the velocity difference by
 * subtracting the straight line through its values at consecutive PWM-period
 * boundaries, then takes the largest remaining excursion.
 */
inline DivergenceReport compare_ideal_vs_actuated(const TrajectoryRecord& reference, const TrajectoryRecord& actuated,
                                                  double ripple_window = 0.1) {
    if (reference.size() != actuated.size() || reference.empty())
        throw ParameterError("records must be non-empty and share a time grid");
    for (std::size_t i = 0; i < reference.size(); ++i)
        if (std::abs(reference.samples[i].t - actuated.samples[i].t) > 1e-9)
            throw ParameterError("records have mismatched time grids");

    DivergenceReport report;
    report.samples = reference.size();
    std::vector<std::array<double, 3>> velocity_error(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const StateVector e = actuated.samples[i].state.vector() - reference.samples[i].state.vector();
        for (std::size_t c = 0; c < 6; ++c) {
            const double v = e[static_cast<Eigen::Index>(c)];
            report.max_abs[c] = std::max(report.max_abs[c], std::abs(v));
            report.rms[c] += v * v;
        }
        velocity_error[i] = {e[3], e[4], e[5]};
    }
    for (double& v : report.rms) v = std::sqrt(v / static_cast<double>(reference.size()));

    if (reference.size() > 1) {
        const double dt = reference.samples[1].t - reference.samples[0].t;
        const auto window = static_cast<std::size_t>(std::max(1.0, std::round(ripple_window / dt)));
        for (std::size_t start = 0; start + 1 < velocity_error.size(); start += window) {
            const std::size_t end = std::min(start + window, velocity_error.size() - 1);
            for (std::size_t i = start; i <= end; ++i) {
                const double s = static_cast<double>(i - start) / static_cast<double>(end - start);
                for (std::size_t c = 0; c < 3; ++c) {
                    const double trend = velocity_error[start][c] + s * (velocity_error[end][c] - velocity_error[start][c]);
                    report.velocity_ripple[c] = std::max(report.velocity_ripple[c], std::abs(velocity_error[i][c] - trend));
                }
            }
        }
    }

    const auto& ref_end = reference.back().state;
    const auto& act_end = actuated.back().state;
    report.terminal_position_error = std::hypot(act_end.x - ref_end.x, act_end.y - ref_end.y);
    const auto& ref_start = reference.samples.front().state;
    const double ref_norm = std::hypot(ref_end.x - ref_start.x, ref_end.y - ref_start.y);
    report.terminal_position_relative = ref_norm > 0.0 ? report.terminal_position_error / ref_norm
                                                       : (report.terminal_position_error > 0.0 ? INFINITY : 0.0);
    return report;
}

}  // namespace slider
