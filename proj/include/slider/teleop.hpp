#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "slider/air_budget.hpp"
#include "slider/allocation.hpp"
#include "slider/dynamics.hpp"
#include "slider/profile.hpp"
#include "slider/scenario.hpp"
#include "slider/thrusters.hpp"

namespace slider {

/// The three stick channels of the operator transmitter.
enum class Channel { Surge, Sway, Yaw };
/// Stick level; sticks act as on/off switches in either direction.
enum class Level { Off, Positive, Negative };

inline constexpr std::array<Channel, 3> kAllChannels = {Channel::Surge, Channel::Sway, Channel::Yaw};

/// A held stick level on one channel (a level, not an edge).
struct TeleopCommand {
    Channel channel = Channel::Surge;
    Level value = Level::Off;
    std::int64_t timestamp_ms = 0;  // since session start
};

struct ChannelLevels {
    std::array<Level, 3> levels{Level::Off, Level::Off, Level::Off};

    Level& operator[](Channel c) { return levels[static_cast<std::size_t>(c)]; }
    Level operator[](Channel c) const { return levels[static_cast<std::size_t>(c)]; }
    bool all_off() const { return levels == std::array<Level, 3>{Level::Off, Level::Off, Level::Off}; }

    friend bool operator==(const ChannelLevels&, const ChannelLevels&) = default;
};

/**
 * Directed motion for one channel level. Surge+ is forward, Sway+ is left
 * (+Y_B), Yaw+ is clockwise (right turn, -tau).
 */
inline std::optional<Motion> motion_for(Channel channel, Level level) {
    if (level == Level::Off) return std::nullopt;
    const bool pos = level == Level::Positive;
    switch (channel) {
        case Channel::Surge: return pos ? Motion::Forward : Motion::Backward;
        case Channel::Sway: return pos ? Motion::Left : Motion::Right;
        case Channel::Yaw: return pos ? Motion::Clockwise : Motion::CounterClockwise;
    }
    return std::nullopt;
}

/// Union of the directed-motion sets of every active channel; shared thrusters fire once.
inline ThrusterSet command_to_thruster_set(const ChannelLevels& channels) {
    ThrusterSet set;
    for (Channel c : kAllChannels)
        if (auto m = motion_for(c, channels[c])) set |= directed_motion_thrusters(*m);
    return set;
}

struct TelemetryFrame {
    double t = 0.0;
    SliderState state;
    ThrusterSet thrusters;
    double air_pressure = 0.0;  // [bar]
    ChannelLevels commanded;
};

struct TeleopSimConfig {
    SliderParams params;
    SliderState start;
    double dt = 0.01;
    AirBudget air = calibrated_air_budget();
    bool assisted = false;
    double table_size = 4.0;
};

/**
 * @brief Deterministic core of the teleoperation loop.
 *
 * Holds the slider state, the latched channel levels and the air budget, and
 * advances by one fixed step per call. In the default direct mode the selected
 * thrusters fire at full thrust; assisted mode allocates the same wrench
 * through the minimum-norm allocator and applies the continuous magnitudes.
 *
 * Every step is recorded in the same layout run_scenario produces, so a
 * session can be replayed offline.
 */
class TeleopSimulation {
public:
    TeleopSimulation(TeleopSimConfig config, ThrusterBank bank)
        : config_(std::move(config)), bank_(std::move(bank)), state_(config_.start), air_(config_.air),
          recorder_(config_.table_size) {
        config_.params.validate();
        if (!(config_.dt > 0.0)) throw ParameterError("teleop step must be positive");
    }

    void set_level(Channel channel, Level level) { levels_[channel] = level; }
    void apply(const TeleopCommand& cmd) { set_level(cmd.channel, cmd.value); }
    void set_levels(const ChannelLevels& levels) { levels_ = levels; }

    /// Returns to the start pose at rest with all channels off. Time and air keep running.
    void reset() {
        state_ = config_.start;
        levels_ = {};
    }

    void step() {
        const ThrusterSet requested = command_to_thruster_set(levels_);
        TrajectorySample sample;
        sample.t = time();
        sample.state = state_;
        sample.commanded = wrench_from_set(bank_, requested);
        int open = 0;
        if (config_.assisted && requested.any()) {
            const ThrusterDuties duties = allocate(bank_, sample.commanded);
            sample.realized = wrench_from_thrusts(bank_, duties.magnitudes);
            for (std::size_t k = 0; k < kThrusterCount; ++k)
                if (duties.magnitudes[static_cast<Eigen::Index>(k)] > 0.0) sample.thrusters.set(k);
        } else {
            sample.realized = sample.commanded;
            sample.thrusters = requested;
        }
        open = static_cast<int>(sample.thrusters.count());

        if (command_log_.empty() || command_log_.back().wrench != sample.realized)
            command_log_.push_back({sample.t, sample.realized});
        recorder_.add(sample);
        last_ = sample;

        state_ = integrate_step(state_, sample.realized, config_.params, config_.dt);
        air_ = update_air_budget(air_, config_.dt, open);
        ++steps_;
    }

    double time() const { return static_cast<double>(steps_) * config_.dt; }
    std::int64_t steps() const { return steps_; }
    const SliderState& state() const { return state_; }
    const ChannelLevels& levels() const { return levels_; }
    const AirBudget& air() const { return air_; }
    const TeleopSimConfig& config() const { return config_; }
    const ThrusterBank& bank() const { return bank_; }

    /// Thrusters applied over the most recent step.
    ThrusterSet active_thrusters() const { return last_.thrusters; }

    TelemetryFrame frame() const { return {time(), state_, last_.thrusters, air_.tank_pressure, levels_}; }

    /// Recorded steps followed by the current state as the terminal sample.
    TrajectoryRecord record() const {
        TrajectoryRecorder copy = recorder_;
        TrajectorySample terminal = last_;
        terminal.t = time();
        terminal.state = state_;
        copy.add(terminal);
        return copy.take();
    }

    /// Piecewise-constant realized wrench over the session, for offline replay.
    WrenchProfile replay_profile() const {
        return WrenchProfile(command_log_, WrenchProfile::Interpolation::Step);
    }

    /// Scenario reproducing this session through run_scenario (valid for sessions without resets).
    ScenarioConfig replay_scenario() const {
        ScenarioConfig sc;
        sc.initial_state = config_.start;
        sc.command_profile = replay_profile();
        sc.duration = time();
        sc.control_dt = config_.dt;
        sc.propagation_dt = config_.dt;
        sc.pwm_period = config_.dt;
        sc.mode = ActuationMode::Ideal;
        sc.table_size = config_.table_size;
        return sc;
    }

private:
    TeleopSimConfig config_;
    ThrusterBank bank_;
    SliderState state_;
    ChannelLevels levels_;
    AirBudget air_;
    std::int64_t steps_ = 0;
    TrajectorySample last_{};
    TrajectoryRecorder recorder_;
    std::vector<WrenchProfile::Breakpoint> command_log_;
};

}  // namespace slider
