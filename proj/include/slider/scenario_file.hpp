#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "slider/air_budget.hpp"
#include "slider/errors.hpp"
#include "slider/profile.hpp"
#include "slider/scenario.hpp"
#include "slider/thrusters.hpp"

namespace slider {

/// Settings read from the [teleop] section.
struct TeleopSettings {
    double realtime_factor = 1.0;      // 1 = wall clock; larger runs faster
    double telemetry_rate = 20.0;      // [Hz]
    bool assisted = false;             // route stick commands through the allocator
};

/**
 * Everything a scenario file describes. See scenarios/README.md for the schema.
 */
struct ScenarioFile {
    SliderParams params;
    std::optional<std::filesystem::path> bank_file;  // nullopt = built-in default bank
    bool beta_is_force_direction = false;
    ScenarioConfig scenario;
    TeleopSettings teleop;
    AirCalibration air;

    ThrusterBank bank() const {
        return bank_file ? load_bank(*bank_file, beta_is_force_direction)
                         : bank_from_specs(default_thruster_specs(), beta_is_force_direction);
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

struct Entry {
    std::string key;
    std::string value;
    int line;
};

inline double to_double(const Entry& e) {
    char* end = nullptr;
    const double v = std::strtod(e.value.c_str(), &end);
    if (end == e.value.c_str() || *end != '\0')
        throw ConfigurationError("line " + std::to_string(e.line) + ": '" + e.key + "' expects a number, got '" + e.value + "'");
    return v;
}

inline bool to_bool(const Entry& e) {
    if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
    if (e.value == "false" || e.value == "no" || e.value == "0") return false;
    throw ConfigurationError("line " + std::to_string(e.line) + ": '" + e.key + "' expects true/false");
}

inline std::vector<double> to_list(const Entry& e) {
    std::string text = e.value;
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream in(text);
    std::vector<double> out;
    double v = 0.0;
    while (in >> v) out.push_back(v);
    if (!in.eof()) throw ConfigurationError("line " + std::to_string(e.line) + ": bad number list '" + e.value + "'");
    return out;
}

[[noreturn]] inline void unknown_key(const std::string& section, const Entry& e) {
    throw ConfigurationError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "' in [" + section + "]");
}

}  // namespace detail

/**
 * Parses a scenario description: `[section]` headers followed by `key = value`
 * lines; `#` starts a comment. Relative bank file paths resolve against `base_dir`.
 */
inline ScenarioFile parse_scenario(std::istream& in, const std::filesystem::path& base_dir = {}) {
    std::map<std::string, std::vector<detail::Entry>> sections;
    std::string section;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigurationError("line " + std::to_string(line_no) + ": bad section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            static const std::vector<std::string> known = {"params", "bank", "run", "initial", "profile", "teleop", "air"};
            if (std::find(known.begin(), known.end(), section) == known.end())
                throw ConfigurationError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
            sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || section.empty())
            throw ConfigurationError("line " + std::to_string(line_no) + ": expected 'key = value' inside a section");
        sections[section].push_back({detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), line_no});
    }

    ScenarioFile file;
    auto& sc = file.scenario;

    for (const auto& e : sections["params"]) {
        if (e.key == "mass") file.params.mass = detail::to_double(e);
        else if (e.key == "inertia_zz") file.params.inertia_zz = detail::to_double(e);
        else detail::unknown_key("params", e);
    }
    file.params.validate();

    for (const auto& e : sections["bank"]) {
        if (e.key == "file") {
            if (e.value != "default") {
                std::filesystem::path p(e.value);
                file.bank_file = p.is_absolute() ? p : base_dir / p;
            }
        } else if (e.key == "beta_is_force_direction") {
            file.beta_is_force_direction = detail::to_bool(e);
        } else {
            detail::unknown_key("bank", e);
        }
    }

    for (const auto& e : sections["run"]) {
        if (e.key == "mode") {
            if (e.value == "ideal") sc.mode = ActuationMode::Ideal;
            else if (e.value == "actuated") sc.mode = ActuationMode::ThrusterActuated;
            else throw ConfigurationError("line " + std::to_string(e.line) + ": mode must be ideal or actuated");
        } else if (e.key == "duration") sc.duration = detail::to_double(e);
        else if (e.key == "control_dt") sc.control_dt = detail::to_double(e);
        else if (e.key == "propagation_dt") sc.propagation_dt = detail::to_double(e);
        else if (e.key == "pwm_period") sc.pwm_period = detail::to_double(e);
        else if (e.key == "min_on_time") sc.min_on_time = detail::to_double(e);
        else if (e.key == "thruster_delay") sc.thruster_delay = detail::to_double(e);
        else if (e.key == "table_size") sc.table_size = detail::to_double(e);
        else detail::unknown_key("run", e);
    }

    for (const auto& e : sections["initial"]) {
        auto& s = sc.initial_state;
        if (e.key == "x") s.x = detail::to_double(e);
        else if (e.key == "y") s.y = detail::to_double(e);
        else if (e.key == "theta") s.theta = detail::to_double(e);
        else if (e.key == "theta_deg") s.theta = deg_to_rad(detail::to_double(e));
        else if (e.key == "vx") s.v_x = detail::to_double(e);
        else if (e.key == "vy") s.v_y = detail::to_double(e);
        else if (e.key == "r") s.r = detail::to_double(e);
        else detail::unknown_key("initial", e);
    }

    {
        std::string type = "none";
        double peak_force = 0.0;
        double peak_torque = 0.0;
        RampTiming timing;
        std::vector<WrenchProfile::Breakpoint> points;
        for (const auto& e : sections["profile"]) {
            if (e.key == "type") type = e.value;
            else if (e.key == "peak_force") peak_force = detail::to_double(e);
            else if (e.key == "peak_torque") peak_torque = detail::to_double(e);
            else if (e.key == "rise_end") timing.rise_end = detail::to_double(e);
            else if (e.key == "hold_end") timing.hold_end = detail::to_double(e);
            else if (e.key == "reverse_end") timing.reverse_end = detail::to_double(e);
            else if (e.key == "reverse_hold_end") timing.reverse_hold_end = detail::to_double(e);
            else if (e.key == "return_end") timing.return_end = detail::to_double(e);
            else if (e.key == "point") {
                const auto v = detail::to_list(e);
                if (v.size() != 4)
                    throw ConfigurationError("line " + std::to_string(e.line) + ": point expects t, fx, fy, tau");
                points.push_back({v[0], {v[1], v[2], v[3]}});
            } else {
                detail::unknown_key("profile", e);
            }
        }
        if (type == "two_step_ramp") sc.command_profile = two_step_ramp_profile(peak_force, peak_torque, timing);
        else if (type == "linear") sc.command_profile = WrenchProfile(points, WrenchProfile::Interpolation::Linear);
        else if (type == "step") sc.command_profile = WrenchProfile(points, WrenchProfile::Interpolation::Step);
        else if (type == "none") sc.command_profile = {};
        else throw ConfigurationError("profile type must be two_step_ramp, linear, step or none");
    }

    for (const auto& e : sections["teleop"]) {
        if (e.key == "realtime_factor") file.teleop.realtime_factor = detail::to_double(e);
        else if (e.key == "telemetry_rate") file.teleop.telemetry_rate = detail::to_double(e);
        else if (e.key == "assisted") file.teleop.assisted = detail::to_bool(e);
        else detail::unknown_key("teleop", e);
    }

    for (const auto& e : sections["air"]) {
        auto& a = file.air;
        if (e.key == "fill_pressure") a.fill_pressure = detail::to_double(e);
        else if (e.key == "depleted_threshold") a.depleted_threshold = detail::to_double(e);
        else if (e.key == "flight_time") a.flight_time = detail::to_double(e);
        else if (e.key == "thruster_duty") a.thruster_duty = detail::to_double(e);
        else if (e.key == "thrusters_per_burst") a.thrusters_per_burst = detail::to_double(e);
        else if (e.key == "thruster_to_bearing_ratio") a.thruster_to_bearing_ratio = detail::to_double(e);
        else detail::unknown_key("air", e);
    }

    sc.validate();
    return file;
}

inline ScenarioFile load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open scenario file: " + path.string());
    return parse_scenario(in, path.parent_path());
}

}  // namespace slider
