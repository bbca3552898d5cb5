#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "slider/protocol.hpp"
#include "slider/teleop.hpp"

namespace slider {

using SessionId = std::uint64_t;

/// Server-to-client text. target == kBroadcast goes to every connected session.
struct Outbound {
    static constexpr SessionId kBroadcast = 0;
    SessionId target = kBroadcast;
    std::string text;
};

struct InboundLine {
    SessionId session = 0;
    std::string line;
};
struct SessionClosed {
    SessionId session = 0;
};
using Inbound = std::variant<InboundLine, SessionClosed>;

struct TeleopLoopConfig {
    TeleopSimConfig sim;
    double telemetry_rate = 20.0;   // [Hz]
    double realtime_factor = 1.0;   // simulated seconds per wall-clock second
};

/**
 * @brief Fixed-step teleoperation loop.
 *
 * The loop thread owns the simulation. Sessions hand it raw protocol lines
 * through post(); replies and telemetry leave through the outbound sink, called
 * on the loop thread. The first session to send a command or reset becomes the
 * commander until it disconnects; its disconnect turns every channel off.
 */
class TeleopLoop {
public:
    using Sink = std::function<void(Outbound)>;
    using Logger = std::function<void(const std::string&)>;

    TeleopLoop(TeleopLoopConfig config, ThrusterBank bank)
        : config_(config), sim_(config.sim, std::move(bank)) {
        if (!(config_.telemetry_rate > 0.0)) throw ParameterError("telemetry rate must be positive");
        if (!(config_.realtime_factor > 0.0)) throw ParameterError("realtime factor must be positive");
        steps_per_frame_ = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::llround(1.0 / (config_.telemetry_rate * config_.sim.dt))));
    }

    ~TeleopLoop() { stop(); }

    TeleopLoop(const TeleopLoop&) = delete;
    TeleopLoop& operator=(const TeleopLoop&) = delete;

    /// Set before start(); invoked from the loop thread.
    void set_sink(Sink sink) { sink_ = std::move(sink); }
    void set_logger(Logger logger) { logger_ = std::move(logger); }

    /// Thread-safe.
    void post(Inbound message) {
        std::lock_guard lock(inbox_mutex_);
        inbox_.push_back(std::move(message));
    }

    /// One loop iteration: drain the inbox, advance one step, emit telemetry when due.
    void tick() {
        std::deque<Inbound> pending;
        {
            std::lock_guard lock(inbox_mutex_);
            pending.swap(inbox_);
        }
        for (auto& m : pending) std::visit([this](auto& msg) { handle(msg); }, m);

        sim_.step();
        if (sim_.steps() % steps_per_frame_ == 0) emit({Outbound::kBroadcast, protocol::state_frame(sim_.frame())});
    }

    /// Runs ticks paced to the wall clock until the stop token fires.
    void run(std::stop_token stop) {
        using clock = std::chrono::steady_clock;
        const auto period = std::chrono::duration_cast<clock::duration>(
            std::chrono::duration<double>(config_.sim.dt / config_.realtime_factor));
        auto deadline = clock::now();
        while (!stop.stop_requested()) {
            tick();
            deadline += period;
            const auto now = clock::now();
            if (now > deadline) {
                // Overrun: simulated time already advanced by exactly dt; drop the lost wall time.
                ++overruns_;
                log("teleop step overran its " + std::to_string(config_.sim.dt) + " s budget at t=" +
                    std::to_string(sim_.time()));
                deadline = now;
            } else {
                std::this_thread::sleep_until(deadline);
            }
        }
    }

    void start() {
        thread_ = std::jthread([this](std::stop_token st) { run(st); });
    }

    void stop() {
        if (thread_.joinable()) {
            thread_.request_stop();
            thread_.join();
        }
    }

    /// Only safe to inspect while the loop thread is stopped.
    const TeleopSimulation& simulation() const { return sim_; }
    TeleopSimulation& simulation() { return sim_; }

    std::optional<SessionId> commander() const { return commander_; }
    std::uint64_t overruns() const { return overruns_.load(); }
    std::int64_t steps_per_frame() const { return steps_per_frame_; }

private:
    void handle(const InboundLine& in) {
        const auto msg = protocol::parse_client_message(in.line);
        if (const auto* err = std::get_if<protocol::ProtocolError>(&msg)) {
            emit({in.session, protocol::error_frame(err->reason)});
            return;
        }
        if (!commander_) commander_ = in.session;
        if (*commander_ != in.session) {
            emit({in.session, protocol::error_frame("not_commander")});
            return;
        }
        if (const auto* cmd = std::get_if<protocol::CommandMessage>(&msg)) sim_.apply(cmd->command);
        else sim_.reset();
    }

    void handle(const SessionClosed& closed) {
        if (commander_ && *commander_ == closed.session) {
            commander_.reset();
            sim_.set_levels({});
        }
    }

    void emit(Outbound out) {
        if (sink_) sink_(std::move(out));
    }

    void log(const std::string& text) {
        if (logger_) logger_(text);
        else std::cerr << "[teleop] " << text << '\n';
    }

    TeleopLoopConfig config_;
    TeleopSimulation sim_;
    std::int64_t steps_per_frame_ = 5;
    std::optional<SessionId> commander_;

    std::mutex inbox_mutex_;
    std::deque<Inbound> inbox_;

    Sink sink_;
    Logger logger_;
    std::atomic<std::uint64_t> overruns_{0};
    std::jthread thread_;
};

}  // namespace slider
