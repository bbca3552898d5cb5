// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>

#include "allocation_oracle.hpp"
#include "slider/slider.hpp"
#include "test_seed.hpp"

using namespace slider;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    if (!ok) ++failures;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double relative(double value, double reference) {
    const double scale = std::abs(reference);
    return scale > 0.0 ? std::abs(value - reference) / scale : std::abs(value);
}

void conservation() {
    constexpr double kTol = 1e-8;
    const SliderParams params;
    std::mt19937_64 rng(fixtures::fixture_seed(1001));
    std::uniform_real_distribution<double> pos(0.0, 4.0), ang(-3.14, 3.14), vel(-0.5, 0.5), rate(-1.0, 1.0);

    Stopwatch clock;
    double worst = 0.0;
    for (int run = 0; run < 100; ++run) {
        const SliderState s0{pos(rng), pos(rng), ang(rng), vel(rng), vel(rng), rate(rng)};
        const double speed0 = std::hypot(s0.v_x, s0.v_y);
        const double ke0 = kinetic_energy(s0, params);
        const Eigen::Vector2d w0 = inertial_velocity(s0);
        SliderState s = s0;
        for (int i = 0; i < 1000; ++i) {
            s = integrate_step(s, {}, params, 0.01);
            worst = std::max({worst, relative(std::hypot(s.v_x, s.v_y), speed0), relative(s.r, s0.r),
                              relative(kinetic_energy(s, params), ke0), (inertial_velocity(s) - w0).norm() / w0.norm()});
        }
    }
    const double elapsed = clock.seconds();
    report(worst <= kTol && elapsed < 5.0, "dynamics_conservation",
           fmt("100 x 10 s, worst relative drift %.3e (tol %.0e), %.2f s (limit 5 s)", worst, kTol, elapsed));
}

void torque_arm() {
    const SliderParams params;
    const ThrusterBank bank = default_bank();
    const Wrench w = wrench_from_set(bank, directed_motion_thrusters(Motion::Clockwise));
    SliderState s;
    for (int i = 0; i < 100; ++i) s = integrate_step(s, w, params, 0.01);
    const double expected_r = 0.392 / params.inertia_zz;
    const bool couple = std::abs(w.tau + 0.392) <= 1e-12 && std::abs(w.f_x) <= 1e-12 && std::abs(w.f_y) <= 1e-12;
    const bool spin = std::abs(std::abs(s.r) - expected_r) <= 1e-6;
    report(couple && spin, "torque_arm",
           fmt("tau %.15f (-0.392 +-1e-12), |F| %.1e, |r| after 1 s %.9f (%.9f +-1e-6)", w.tau,
               std::hypot(w.f_x, w.f_y), std::abs(s.r), expected_r));
}

void translation() {
    const SliderParams params;
    const Wrench w = wrench_from_set(default_bank(), directed_motion_thrusters(Motion::Forward));
    SliderState s;
    for (int i = 0; i < 100; ++i) s = integrate_step(s, w, params, 0.01);
    const double expected = 1.4 / params.mass;
    report(std::abs(s.v_x - expected) <= 1e-6, "translation",
           fmt("v_x after 1 s %.9f (%.9f +-1e-6)", s.v_x, expected));
}

void allocator_oracle() {
    const ThrusterBank bank = default_bank();
    std::mt19937_64 rng(fixtures::fixture_seed(2002));
    std::uniform_real_distribution<double> u(0.0, 0.7);

    Stopwatch clock;
    double worst_residual = 0.0, worst_gap = -INFINITY;
    for (int i = 0; i < 100; ++i) {
        ThrustVector generator;
        for (auto& v : generator) v = u(rng);
        const Eigen::Vector3d b = bank.allocation_matrix() * generator;
        const ThrusterDuties d = allocate(bank, Wrench::from_vector(b));
        const auto grid = oracle::grid_min_norm(bank, b, 0.01, generator);
        worst_residual = std::max(worst_residual, (bank.allocation_matrix() * d.magnitudes - b).lpNorm<Eigen::Infinity>());
        worst_gap = std::max(worst_gap, d.magnitudes.norm() - grid.min_norm);
    }
    const double elapsed = clock.seconds();
    report(worst_residual <= 1e-9 && worst_gap <= 1e-3 && elapsed < 60.0, "allocator_oracle",
           fmt("100 demands, max ||Ax-b||inf %.2e (tol 1e-9), max ||x||-grid %.2e (tol 1e-3), %.1f s (limit 60 s)",
               worst_residual, worst_gap, elapsed));
}

void pwm_fidelity() {
    const ThrusterBank bank = default_bank();
    const PwmSettings settings;  // 0.1 s period, 0.01 s minimum on-time, 1 ms tick
    const double t_max = 0.7;
    double worst_outside = 0.0;
    int deadband_mismatches = 0;
    for (int milli = 0; milli <= 700; ++milli) {
        const double thrust = milli * 1e-3;
        ThrusterDuties d;
        d.magnitudes[0] = thrust;
        const PwmSchedule s = pwm_modulate(d, bank, settings);

        // Realized mean over the control period, sampled at the tick.
        const auto series = pulses_to_wrench_series(s, bank, settings.tick);
        double on = 0.0;
        for (const auto& p : series) on += p.on.test(0) ? 1.0 : 0.0;
        const double realized = t_max * on / static_cast<double>(series.size());

        if (thrust >= 0.07) {
            worst_outside = std::max(worst_outside, std::abs(realized - thrust));
        } else {
            // Below the minimum on-time: round up to it from half of it, otherwise off.
            const std::int64_t ideal = std::llround(thrust / t_max * 100.0);
            std::int64_t expected = ideal;
            if (ideal > 0 && ideal < 10) expected = 2 * milli >= 70 ? 10 : 0;
            if (s.on_ticks[0] != expected || std::abs(realized - t_max * static_cast<double>(expected) / 100.0) > 1e-12)
                ++deadband_mismatches;
        }
    }
    report(worst_outside <= 3.5e-3 + 1e-12 && deadband_mismatches == 0, "pwm_fidelity",
           fmt("701 levels, max mean error above 0.07 N %.3e N (tol 3.5e-3), deadband mismatches %d",
               worst_outside, deadband_mismatches));
}

void campaign() {
    Stopwatch clock;
    ScenarioFile file = load_scenario(SLIDER_SOURCE_DIR "/scenarios/two_step_ramp.scn");
    const ThrusterBank bank = file.bank();
    file.scenario.mode = ActuationMode::Ideal;
    const TrajectoryRecord ideal = run_scenario(file.scenario, file.params, bank);
    file.scenario.mode = ActuationMode::ThrusterActuated;
    const TrajectoryRecord actuated = run_scenario(file.scenario, file.params, bank);
    const DivergenceReport r = compare_ideal_vs_actuated(ideal, actuated, file.scenario.pwm_period);
    const double elapsed = clock.seconds();

    const double bound = 0.7 / file.params.mass * file.scenario.pwm_period;
    const double ripple = std::max({r.velocity_ripple[0], r.velocity_ripple[1], r.velocity_ripple[2]});
    report(ripple <= bound && elapsed < 10.0, "campaign_velocity_ripple",
           fmt("ripple vx %.5f vy %.5f r %.5f (bound %.5f), %.2f s (limit 10 s)", r.velocity_ripple[0],
               r.velocity_ripple[1], r.velocity_ripple[2], bound, elapsed));
    report(r.terminal_position_relative <= 0.02, "campaign_terminal_position",
           fmt("terminal error %.4f m, %.4f of net displacement (tol 0.02)", r.terminal_position_error,
               r.terminal_position_relative));
}

void teleop_equivalence() {
    TeleopLoopConfig config;
    config.sim.start = {2.0, 2.0, 0.0, 0.0, 0.0, 0.0};
    TeleopLoop loop(config, default_bank());
    loop.set_sink([](Outbound) {});
    loop.set_logger([](const std::string&) {});

    std::mt19937_64 rng(fixtures::fixture_seed(3003));
    std::uniform_int_distribution<int> hold(5, 200), pick(0, 2);
    const std::array<Level, 3> levels{Level::Off, Level::Positive, Level::Negative};
    std::int64_t next_change = 0;
    for (std::int64_t step = 0; step < 6000; ++step) {
        if (step == next_change) {
            const Channel ch = kAllChannels[static_cast<std::size_t>(pick(rng))];
            loop.post(InboundLine{1, protocol::command_message(ch, levels[static_cast<std::size_t>(pick(rng))])});
            next_change += hold(rng);
        }
        loop.tick();
    }
    const TeleopSimulation& sim = loop.simulation();
    const TrajectoryRecord live = sim.record();
    const TrajectoryRecord replay = run_scenario(sim.replay_scenario(), sim.config().params, sim.bank());

    double worst = INFINITY;
    if (live.size() == replay.size()) {
        worst = 0.0;
        for (std::size_t i = 0; i < live.size(); ++i)
            worst = std::max(worst, (live.samples[i].state.vector() - replay.samples[i].state.vector()).cwiseAbs().maxCoeff());
    }
    report(worst <= 1e-9 && sim.time() >= 60.0 - 1e-9, "teleop_physics_equivalence",
           fmt("%.0f s session, %zu samples, max component difference %.2e (tol 1e-9)", sim.time(), live.size(), worst));
}

void air_budget() {
    // Operator duty profile: a translation burst (two thrusters) 30% of every 10 s.
    TeleopSimulation sim({}, default_bank());
    while (!sim.air().depleted() && sim.steps() < 200000) {
        sim.set_level(Channel::Surge, (sim.steps() % 1000) < 300 ? Level::Positive : Level::Off);
        sim.step();
    }
    report(std::abs(sim.time() - 420.0) <= 0.05 * 420.0, "air_budget",
           fmt("200 bar depleted after %.2f s (420 s +-5%%)", sim.time()));
}

}  // namespace

int main() {
    conservation();
    torque_arm();
    translation();
    allocator_oracle();
    pwm_fidelity();
    campaign();
    teleop_equivalence();
    air_budget();
    std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "OK", failures);
    return failures ? 1 : 0;
}
