// slider-sim: command-line front end for the planar air-bearing simulator.
//
//   slider-sim run --scenario <file> [--mode ideal|actuated] --out <path> [--format csv|jsonl]
//   slider-sim compare <a> <b> [--window <s>]
//   slider-sim allocate --fx <N> --fy <N> --tau <Nm> [--method qp|pinv] [--bank <file>]
//   slider-sim teleop --bind <addr:port> [--scenario <file>] [--record <path.jsonl>]

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "slider/slider.hpp"
#include "slider/teleop_server.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

int cmd_run(const std::string& scenario_path, const std::string& mode, const std::string& out, const std::string& format) {
    slider::ScenarioFile file = slider::load_scenario(scenario_path);
    if (mode == "ideal") file.scenario.mode = slider::ActuationMode::Ideal;
    else if (mode == "actuated") file.scenario.mode = slider::ActuationMode::ThrusterActuated;

    const auto record = slider::run_scenario(file.scenario, file.params, file.bank());
    slider::export_trajectory(record, out, format == "jsonl" ? slider::TrajectoryFormat::Jsonl : slider::TrajectoryFormat::Csv);

    const auto& end = record.back();
    std::printf("mode: %s\nsamples: %zu\nterminal t=%.3f x=%.6f y=%.6f theta=%.6f vx=%.6f vy=%.6f r=%.6f\n",
                file.scenario.mode == slider::ActuationMode::Ideal ? "ideal" : "actuated", record.size(), end.t,
                end.state.x, end.state.y, end.state.theta, end.state.v_x, end.state.v_y, end.state.r);
    for (const auto& ev : record.boundary_events)
        std::printf("out-of-bounds: t=%.2f x=%.4f y=%.4f\n", ev.t, ev.x, ev.y);
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_compare(const std::string& a, const std::string& b, double window) {
    const auto ref = slider::load_trajectory(a);
    const auto act = slider::load_trajectory(b);
    const auto report = slider::compare_ideal_vs_actuated(ref, act, window);

    std::printf("samples: %zu\n%-6s %14s %14s\n", report.samples, "chan", "max|diff|", "rms");
    for (std::size_t c = 0; c < 6; ++c)
        std::printf("%-6s %14.6e %14.6e\n", slider::DivergenceReport::kChannels[c], report.max_abs[c], report.rms[c]);
    std::printf("velocity ripple (window %.3f s): vx=%.6e m/s vy=%.6e m/s r=%.6e rad/s\n", window,
                report.velocity_ripple[0], report.velocity_ripple[1], report.velocity_ripple[2]);
    std::printf("terminal position error: %.6e m (%.4f%% of net displacement)\n", report.terminal_position_error,
                100.0 * report.terminal_position_relative);
    return 0;
}

int cmd_allocate(double fx, double fy, double tau, const std::string& method, const std::string& bank_path) {
    const slider::ThrusterBank bank = bank_path.empty() ? slider::default_bank() : slider::load_bank(bank_path);
    const slider::Wrench demand{fx, fy, tau};
    const auto duties = method == "pinv" ? slider::allocate_pinv(bank, demand) : slider::allocate(bank, demand);
    for (std::size_t k = 0; k < slider::kThrusterCount; ++k)
        std::printf("T%zu %.9f\n", k + 1, duties.magnitudes[static_cast<Eigen::Index>(k)]);
    std::printf("residual fx=%.9g fy=%.9g tau=%.9g\n", duties.residual.f_x, duties.residual.f_y, duties.residual.tau);
    std::printf("attainable %s\n", duties.attainable ? "yes" : "no");
    return 0;
}

int cmd_teleop(const std::string& bind, const std::string& scenario_path, const std::string& record_path) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw slider::ConfigurationError("--bind expects addr:port");
    const std::string address = bind.substr(0, colon);
    const auto port = static_cast<unsigned short>(std::stoi(bind.substr(colon + 1)));

    slider::ScenarioFile file;
    if (!scenario_path.empty()) file = slider::load_scenario(scenario_path);
    else file.scenario.initial_state = {2.0, 2.0, 0.0, 0.0, 0.0, 0.0};

    slider::TeleopLoopConfig cfg;
    cfg.sim.params = file.params;
    cfg.sim.start = file.scenario.initial_state;
    cfg.sim.dt = file.scenario.propagation_dt;
    cfg.sim.air = slider::calibrated_air_budget(file.air);
    cfg.sim.assisted = file.teleop.assisted;
    cfg.sim.table_size = file.scenario.table_size;
    cfg.telemetry_rate = file.teleop.telemetry_rate;
    cfg.realtime_factor = file.teleop.realtime_factor;

    slider::TeleopLoop loop(cfg, file.bank());
    slider::TeleopServer server([&loop](slider::Inbound in) { loop.post(std::move(in)); }, address, port);
    loop.set_sink([&server](slider::Outbound out) { server.deliver(std::move(out)); });

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.start();
    loop.start();
    std::printf("teleop listening on ws://%s:%u (Ctrl-C to stop)\n", address.c_str(), server.port());
    std::fflush(stdout);
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));

    loop.stop();
    server.stop();
    const auto& sim = loop.simulation();
    std::printf("stopped at t=%.2f s, air %.1f bar, %llu overruns\n", sim.time(), sim.air().tank_pressure,
                static_cast<unsigned long long>(loop.overruns()));
    if (!record_path.empty() && sim.steps() > 0) {
        slider::export_trajectory(sim.record(), record_path, slider::TrajectoryFormat::Jsonl);
        std::printf("session recorded to %s\n", record_path.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planar air-bearing platform simulator"};
    app.require_subcommand(1);

    std::string scenario, mode, out, format = "csv";
    auto* run = app.add_subcommand("run", "Run an open-loop scenario and export the trajectory");
    run->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("--mode", mode, "Override the scenario's actuation mode")->check(CLI::IsMember({"ideal", "actuated"}));
    run->add_option("--out", out, "Output trajectory path")->required();
    run->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));

    std::string file_a, file_b;
    double window = 0.1;
    auto* compare = app.add_subcommand("compare", "Compare two trajectories (reference first)");
    compare->add_option("a", file_a, "Reference trajectory")->required()->check(CLI::ExistingFile);
    compare->add_option("b", file_b, "Trajectory to compare")->required()->check(CLI::ExistingFile);
    compare->add_option("--window", window, "Ripple detrending window [s]");

    double fx = 0, fy = 0, tau = 0;
    std::string method = "qp", bank;
    auto* alloc = app.add_subcommand("allocate", "Allocate a body wrench to the eight thrusters");
    alloc->add_option("--fx", fx, "Body force X [N]");
    alloc->add_option("--fy", fy, "Body force Y [N]");
    alloc->add_option("--tau", tau, "Torque about Z [N m]");
    alloc->add_option("--method", method, "qp or pinv")->check(CLI::IsMember({"qp", "pinv"}));
    alloc->add_option("--bank", bank, "Thruster geometry file")->check(CLI::ExistingFile);

    std::string bind = "127.0.0.1:8765", teleop_scenario, record;
    auto* teleop = app.add_subcommand("teleop", "Serve the live teleoperation WebSocket endpoint");
    teleop->add_option("--bind", bind, "addr:port");
    teleop->add_option("--scenario", teleop_scenario, "Scenario file (params, start pose, air, [teleop])")
        ->check(CLI::ExistingFile);
    teleop->add_option("--record", record, "Write the session trajectory as JSONL on exit");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(scenario, mode, out, format);
        if (*compare) return cmd_compare(file_a, file_b, window);
        if (*alloc) return cmd_allocate(fx, fy, tau, method, bank);
        if (*teleop) return cmd_teleop(bind, teleop_scenario, record);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
