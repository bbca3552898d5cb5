#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <random>

#include "slider/teleop_loop.hpp"
#include "test_seed.hpp"

using namespace slider;
using nlohmann::json;

namespace {

ChannelLevels levels(Level surge, Level sway, Level yaw) {
    ChannelLevels c;
    c[Channel::Surge] = surge;
    c[Channel::Sway] = sway;
    c[Channel::Yaw] = yaw;
    return c;
}

TeleopSimConfig sim_at(double x, double y) {
    TeleopSimConfig c;
    c.start.x = x;
    c.start.y = y;
    return c;
}

void run_for(TeleopSimulation& sim, double seconds) {
    const auto n = std::llround(seconds / sim.config().dt);
    for (long long i = 0; i < n; ++i) sim.step();
}

struct Captured {
    SessionId target;
    json body;
};

class LoopHarness {
public:
    LoopHarness() : loop_(TeleopLoopConfig{sim_at(2.0, 2.0)}, default_bank()) {
        loop_.set_sink([this](Outbound o) { out_.push_back({o.target, json::parse(o.text)}); });
        loop_.set_logger([](const std::string&) {});
    }

    void send(SessionId s, const std::string& line) { loop_.post(InboundLine{s, line}); }
    void close(SessionId s) { loop_.post(SessionClosed{s}); }
    void ticks(int n) {
        for (int i = 0; i < n; ++i) loop_.tick();
    }

    std::vector<Captured> take() { return std::exchange(out_, {}); }
    std::vector<json> frames_from(const std::vector<Captured>& msgs) {
        std::vector<json> f;
        for (const auto& m : msgs)
            if (m.body["type"] == "state") f.push_back(m.body);
        return f;
    }
    std::vector<Captured> errors_from(const std::vector<Captured>& msgs) {
        std::vector<Captured> e;
        for (const auto& m : msgs)
            if (m.body["type"] == "error") e.push_back(m);
        return e;
    }

    TeleopLoop& loop() { return loop_; }

private:
    TeleopLoop loop_;
    std::vector<Captured> out_;
};

}  // namespace

TEST(CommandToThrusterSet, Examples) {
    EXPECT_EQ(command_to_thruster_set(levels(Level::Positive, Level::Off, Level::Off)), thruster_set({3, 5}));
    EXPECT_TRUE(command_to_thruster_set({}).none());
    EXPECT_EQ(command_to_thruster_set(levels(Level::Positive, Level::Off, Level::Positive)),
              thruster_set({1, 3, 4, 5, 8}));
    EXPECT_EQ(command_to_thruster_set(levels(Level::Negative, Level::Negative, Level::Negative)),
              thruster_set({1, 7}) | thruster_set({6, 8}) | thruster_set({2, 3, 6, 7}));
}

TEST(CommandToThrusterSet, ChannelDirections) {
    const ThrusterBank bank = default_bank();
    const auto w = [&](Level a, Level b, Level c) { return wrench_from_set(bank, command_to_thruster_set(levels(a, b, c))); };
    EXPECT_GT(w(Level::Positive, Level::Off, Level::Off).f_x, 0.0);
    EXPECT_LT(w(Level::Negative, Level::Off, Level::Off).f_x, 0.0);
    EXPECT_GT(w(Level::Off, Level::Positive, Level::Off).f_y, 0.0);
    EXPECT_LT(w(Level::Off, Level::Negative, Level::Off).f_y, 0.0);
    EXPECT_LT(w(Level::Off, Level::Off, Level::Positive).tau, 0.0);  // clockwise
    EXPECT_GT(w(Level::Off, Level::Off, Level::Negative).tau, 0.0);
}

TEST(TeleopSimulation, IdleDrainsBearingsOnly) {
    TeleopSimulation sim({}, default_bank());
    run_for(sim, 10.0);
    EXPECT_EQ(sim.state(), SliderState{});
    const double bearing = calibrated_air_budget().bearing_flow_rate;
    EXPECT_NEAR(sim.air().tank_pressure, 200.0 - 10.0 * bearing, 1e-9);
    EXPECT_TRUE(sim.active_thrusters().none());
}

TEST(TeleopSimulation, SurgeHeldOneSecond) {
    TeleopSimulation sim({}, default_bank());
    sim.set_level(Channel::Surge, Level::Positive);
    run_for(sim, 1.0);
    EXPECT_NEAR(sim.state().v_x, 1.4 / 4.436, 1e-3);
    EXPECT_NEAR(sim.state().v_x, 0.3156, 1e-3);
    EXPECT_EQ(sim.active_thrusters(), thruster_set({3, 5}));
}

TEST(TeleopSimulation, YawClockwiseHeldOneSecond) {
    TeleopSimulation sim({}, default_bank());
    sim.set_level(Channel::Yaw, Level::Positive);
    run_for(sim, 1.0);
    EXPECT_NEAR(sim.state().r, -0.392 / 1.092, 1e-3);
    EXPECT_NEAR(sim.state().r, -0.3590, 1e-3);
    EXPECT_NEAR(std::hypot(sim.state().v_x, sim.state().v_y), 0.0, 1e-12);
}

TEST(TeleopSimulation, CommandsLatchUntilChanged) {
    TeleopSimulation sim({}, default_bank());
    sim.apply({Channel::Sway, Level::Negative, 0});
    for (int i = 0; i < 50; ++i) {
        sim.step();
        EXPECT_EQ(sim.active_thrusters(), thruster_set({6, 8}));
    }
    sim.apply({Channel::Sway, Level::Off, 500});
    sim.step();
    EXPECT_TRUE(sim.active_thrusters().none());
}

TEST(TeleopSimulation, ResetReturnsToStartButKeepsClockAndAir) {
    TeleopSimulation sim(sim_at(1.0, 3.0), default_bank());
    sim.set_level(Channel::Surge, Level::Positive);
    sim.set_level(Channel::Yaw, Level::Negative);
    run_for(sim, 2.0);
    const double pressure = sim.air().tank_pressure;
    const auto steps = sim.steps();
    sim.reset();
    EXPECT_EQ(sim.state(), sim.config().start);
    EXPECT_TRUE(sim.levels().all_off());
    EXPECT_EQ(sim.steps(), steps);
    EXPECT_EQ(sim.air().tank_pressure, pressure);
}

TEST(TeleopSimulation, AssistedModeMatchesDirectForTableSets) {
    auto config = sim_at(2.0, 2.0);
    config.assisted = true;
    TeleopSimulation assisted(config, default_bank());
    TeleopSimulation direct(sim_at(2.0, 2.0), default_bank());
    for (auto* s : {&assisted, &direct}) {
        s->set_level(Channel::Surge, Level::Positive);
        run_for(*s, 1.0);
    }
    EXPECT_EQ(assisted.active_thrusters(), thruster_set({3, 5}));
    const StateVector d = assisted.state().vector() - direct.state().vector();
    EXPECT_LT(d.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TeleopSimulation, AirDepletesAt420SecondsUnderThirtyPercentDuty) {
    TeleopSimulation sim({}, default_bank());
    std::int64_t step = 0;
    while (!sim.air().depleted() && step < 100000) {
        sim.set_level(Channel::Surge, (step % 1000) < 300 ? Level::Positive : Level::Off);
        sim.step();
        ++step;
    }
    EXPECT_NEAR(sim.time(), 420.0, 0.05 * 420.0);
}

TEST(TeleopSimulation, ReplayThroughRunScenarioReproducesSession) {
    TeleopSimulation sim(sim_at(2.0, 2.0), default_bank());
    std::mt19937_64 rng(fixtures::fixture_seed(17));
    std::uniform_int_distribution<int> hold(1, 150), pick(0, 2);
    const std::array<Level, 3> lv{Level::Off, Level::Positive, Level::Negative};
    std::int64_t next_change = 0;
    while (sim.steps() < 3000) {
        if (sim.steps() == next_change) {
            sim.set_level(kAllChannels[static_cast<std::size_t>(pick(rng))], lv[static_cast<std::size_t>(pick(rng))]);
            next_change += hold(rng);
        }
        sim.step();
    }
    const auto live = sim.record();
    const auto replay = run_scenario(sim.replay_scenario(), sim.config().params, sim.bank());
    ASSERT_EQ(live.size(), replay.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < live.size(); ++i) {
        EXPECT_EQ(live.samples[i].t, replay.samples[i].t);
        worst = std::max(worst, (live.samples[i].state.vector() - replay.samples[i].state.vector()).cwiseAbs().maxCoeff());
        EXPECT_EQ(live.samples[i].realized, replay.samples[i].realized);
    }
    EXPECT_LE(worst, 1e-9);
}

TEST(Protocol, ParsesClientMessages) {
    using namespace protocol;
    const auto cmd = parse_client_message(R"({"type":"cmd","channel":"sway","value":"neg"})");
    ASSERT_TRUE(std::holds_alternative<CommandMessage>(cmd));
    EXPECT_EQ(std::get<CommandMessage>(cmd).command.channel, Channel::Sway);
    EXPECT_EQ(std::get<CommandMessage>(cmd).command.value, Level::Negative);
    EXPECT_TRUE(std::holds_alternative<ResetMessage>(parse_client_message(R"({"v":1,"type":"reset"})")));

    const auto reason = [](std::string_view line) {
        const auto m = parse_client_message(line);
        return std::holds_alternative<ProtocolError>(m) ? std::get<ProtocolError>(m).reason : std::string("ok");
    };
    EXPECT_EQ(reason("{not json"), "parse");
    EXPECT_EQ(reason("[1,2]"), "parse");
    EXPECT_EQ(reason(R"({"v":2,"type":"reset"})"), "version");
    EXPECT_EQ(reason(R"({"type":"warp"})"), "invalid");
    EXPECT_EQ(reason(R"({"type":"cmd","channel":"heave","value":"pos"})"), "invalid");
    EXPECT_EQ(reason(R"({"type":"cmd","channel":"surge"})"), "invalid");
    EXPECT_EQ(reason(R"({"channel":"surge","value":"pos"})"), "invalid");

    const auto round = parse_client_message(command_message(Channel::Yaw, Level::Positive));
    ASSERT_TRUE(std::holds_alternative<CommandMessage>(round));
    EXPECT_EQ(std::get<CommandMessage>(round).command.channel, Channel::Yaw);
}

TEST(Protocol, StateFrameFields) {
    TelemetryFrame f;
    f.t = 1.25;
    f.state = {1.0, 2.0, 3.0 * std::numbers::pi, 0.1, -0.2, 0.3};
    f.thrusters = thruster_set({3, 5});
    f.air_pressure = 150.5;
    f.commanded[Channel::Surge] = Level::Positive;
    const auto j = json::parse(protocol::state_frame(f));
    EXPECT_EQ(j["v"], 1);
    EXPECT_EQ(j["type"], "state");
    EXPECT_EQ(j["t"], 1.25);
    EXPECT_NEAR(j["theta"].get<double>(), std::numbers::pi, 1e-12);
    EXPECT_EQ(j["thr"], json({0, 0, 1, 0, 1, 0, 0, 0}));
    EXPECT_EQ(j["air"], 150.5);
    EXPECT_EQ(j["cmd"]["surge"], "pos");
    EXPECT_EQ(j["cmd"]["yaw"], "off");
    for (const char* k : {"x", "y", "vx", "vy", "r"}) EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_EQ(json::parse(protocol::error_frame("parse")), json({{"v", 1}, {"type", "error"}, {"reason", "parse"}}));
}

TEST(TeleopLoop, TelemetryAtTwentyHertzWithIncreasingTimestamps) {
    LoopHarness h;
    EXPECT_EQ(h.loop().steps_per_frame(), 5);
    h.ticks(100);
    const auto frames = h.frames_from(h.take());
    ASSERT_EQ(frames.size(), 20u);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        EXPECT_NEAR(frames[i]["t"].get<double>(), 0.05 * static_cast<double>(i + 1), 1e-12);
        if (i > 0) {
            EXPECT_GT(frames[i]["t"].get<double>(), frames[i - 1]["t"].get<double>());
        }
    }
}

TEST(TeleopLoop, FrameReportsStateAtItsTimestamp) {
    LoopHarness h;
    h.send(1, protocol::command_message(Channel::Surge, Level::Positive));
    h.ticks(5);
    const auto frames = h.frames_from(h.take());
    ASSERT_EQ(frames.size(), 1u);
    const auto& sim = h.loop().simulation();
    EXPECT_EQ(frames[0]["t"].get<double>(), sim.time());
    EXPECT_EQ(frames[0]["vx"].get<double>(), sim.state().v_x);
    EXPECT_EQ(frames[0]["thr"], json({0, 0, 1, 0, 1, 0, 0, 0}));
    EXPECT_EQ(frames[0]["cmd"]["surge"], "pos");
}

TEST(TeleopLoop, ResetShowsStartPoseInNextFrame) {
    LoopHarness h;
    h.send(1, protocol::command_message(Channel::Surge, Level::Positive));
    h.ticks(50);
    h.take();
    h.send(1, R"({"type":"reset"})");
    h.ticks(5);
    const auto frames = h.frames_from(h.take());
    ASSERT_EQ(frames.size(), 1u);
    // One idle step from the start pose at rest leaves it unchanged.
    EXPECT_EQ(frames[0]["x"], 2.0);
    EXPECT_EQ(frames[0]["y"], 2.0);
    EXPECT_EQ(frames[0]["vx"], 0.0);
    EXPECT_EQ(frames[0]["cmd"]["surge"], "off");
}

TEST(TeleopLoop, MalformedLineGetsParseErrorAndSessionContinues) {
    LoopHarness h;
    h.send(3, "{oops");
    h.ticks(1);
    const auto errors = h.errors_from(h.take());
    ASSERT_EQ(errors.size(), 1u);
    EXPECT_EQ(errors[0].target, 3u);
    EXPECT_EQ(errors[0].body["reason"], "parse");
    EXPECT_EQ(errors[0].body["v"], 1);
    EXPECT_FALSE(h.loop().commander().has_value());

    h.send(3, protocol::command_message(Channel::Sway, Level::Positive));
    h.ticks(1);
    EXPECT_EQ(h.loop().commander(), 3u);
    EXPECT_EQ(h.loop().simulation().levels()[Channel::Sway], Level::Positive);
}

TEST(TeleopLoop, SecondCommanderRejected) {
    LoopHarness h;
    h.send(1, protocol::command_message(Channel::Surge, Level::Positive));
    h.send(2, protocol::command_message(Channel::Surge, Level::Negative));
    h.send(2, R"({"type":"reset"})");
    h.ticks(1);
    const auto errors = h.errors_from(h.take());
    ASSERT_EQ(errors.size(), 2u);
    for (const auto& e : errors) {
        EXPECT_EQ(e.target, 2u);
        EXPECT_EQ(e.body["reason"], "not_commander");
    }
    EXPECT_EQ(h.loop().simulation().levels()[Channel::Surge], Level::Positive);
    EXPECT_EQ(h.loop().commander(), 1u);
}

TEST(TeleopLoop, CommanderDisconnectStopsThrustersAndFreesAuthority) {
    LoopHarness h;
    h.send(1, protocol::command_message(Channel::Yaw, Level::Positive));
    h.ticks(10);
    h.close(2);  // an observer leaving changes nothing
    h.ticks(1);
    EXPECT_EQ(h.loop().commander(), 1u);
    h.close(1);
    h.ticks(1);
    EXPECT_FALSE(h.loop().commander().has_value());
    EXPECT_TRUE(h.loop().simulation().levels().all_off());
    EXPECT_TRUE(h.loop().simulation().active_thrusters().none());

    h.send(2, protocol::command_message(Channel::Surge, Level::Positive));
    h.ticks(1);
    EXPECT_EQ(h.loop().commander(), 2u);
}

TEST(TeleopLoop, RunsPacedAndCountsOverruns) {
    TeleopLoopConfig fast{sim_at(2.0, 2.0)};
    fast.realtime_factor = 1e7;  // 1 ns per step: every step overruns
    TeleopLoop loop(fast, default_bank());
    std::atomic<int> logged{0};
    loop.set_logger([&](const std::string&) { ++logged; });
    loop.start();
    while (loop.overruns() < 10) std::this_thread::yield();
    loop.stop();
    EXPECT_GE(loop.simulation().steps(), 10);
    EXPECT_EQ(static_cast<std::uint64_t>(logged.load()), loop.overruns());
    // Simulated time advances by exactly dt per step regardless of overruns.
    EXPECT_EQ(loop.simulation().time(), static_cast<double>(loop.simulation().steps()) * 0.01);

    TeleopLoopConfig paced{sim_at(2.0, 2.0)};
    paced.realtime_factor = 10.0;
    TeleopLoop slow(paced, default_bank());
    slow.set_logger([](const std::string&) {});
    const auto t0 = std::chrono::steady_clock::now();
    slow.start();
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    slow.stop();
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double expected_steps = wall * 10.0 / 0.01;
    EXPECT_LE(static_cast<double>(slow.simulation().steps()), expected_steps + 2.0);
    EXPECT_GE(static_cast<double>(slow.simulation().steps()), 0.5 * expected_steps);
}

TEST(TeleopLoop, RejectsBadRates) {
    TeleopLoopConfig c;
    c.telemetry_rate = 0.0;
    EXPECT_THROW(TeleopLoop(c, default_bank()), ParameterError);
    c = {};
    c.realtime_factor = -1.0;
    EXPECT_THROW(TeleopLoop(c, default_bank()), ParameterError);
}
