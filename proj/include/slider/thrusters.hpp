#pragma once

#include <Eigen/Dense>

#include <array>
#include <bitset>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "slider/dynamics.hpp"
#include "slider/errors.hpp"

namespace slider {

inline constexpr std::size_t kThrusterCount = 8;

using ThrustVector = Eigen::Matrix<double, kThrusterCount, 1>;
using AllocationMatrix = Eigen::Matrix<double, 3, kThrusterCount>;

/// Zero-based set of thrusters; bit k is thruster T_{k+1}.
using ThrusterSet = std::bitset<kThrusterCount>;

inline ThrusterSet thruster_set(std::initializer_list<int> one_based) {
    ThrusterSet set;
    for (int i : one_based) set.set(static_cast<std::size_t>(i - 1));
    return set;
}

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

struct ThrusterConfig {
    double r_x = 0.0;              // [m] body frame
    double r_y = 0.0;              // [m] body frame
    double force_direction = 0.0;  // [rad] direction of the force applied to the body
    double t_max = 0.7;            // [N]
    double t_min = 0.0;            // [N]

    /// Force per newton of thrust plus its moment arm: one column of the allocation matrix.
    Eigen::Vector3d unit_wrench() const {
        const double c = std::cos(force_direction);
        const double s = std::sin(force_direction);
        return {c, s, r_x * s - r_y * c};
    }

    void validate() const {
        if (!(t_max > t_min) || !(t_min >= 0.0)) throw ParameterError("thruster bounds require t_max > t_min >= 0");
        if (!(std::hypot(r_x, r_y) < 0.3)) throw ParameterError("thruster position outside the 0.3 m platform radius");
        if (!std::isfinite(force_direction)) throw ParameterError("thruster direction must be finite");
    }
};

/**
 * @brief Eight on/off thrusters and their constant 3x8 allocation matrix A.
 *
 * Column k of A maps a thrust magnitude on thruster k to (f_x, f_y, tau), with
 * tau the z-component of r x F.
 */
class ThrusterBank {
public:
    explicit ThrusterBank(const std::array<ThrusterConfig, kThrusterCount>& thrusters) : thrusters_(thrusters) {
        for (std::size_t k = 0; k < kThrusterCount; ++k) {
            thrusters_[k].validate();
            allocation_matrix_.col(static_cast<Eigen::Index>(k)) = thrusters_[k].unit_wrench();
        }
    }

    const std::array<ThrusterConfig, kThrusterCount>& thrusters() const { return thrusters_; }
    const ThrusterConfig& thruster(std::size_t k) const { return thrusters_.at(k); }
    const AllocationMatrix& allocation_matrix() const { return allocation_matrix_; }

    ThrustVector lower_bounds() const {
        ThrustVector v;
        for (std::size_t k = 0; k < kThrusterCount; ++k) v[static_cast<Eigen::Index>(k)] = thrusters_[k].t_min;
        return v;
    }
    ThrustVector upper_bounds() const {
        ThrustVector v;
        for (std::size_t k = 0; k < kThrusterCount; ++k) v[static_cast<Eigen::Index>(k)] = thrusters_[k].t_max;
        return v;
    }

private:
    std::array<ThrusterConfig, kThrusterCount> thrusters_;
    AllocationMatrix allocation_matrix_;
};

/// One row of the plain-text geometry format, in the units it is written in.
struct ThrusterSpec {
    double r_x_mm;
    double r_y_mm;
    double beta_deg;
    double t_max;
};

/**
 * Builds a bank from tabulated geometry.
 *
 * The tabulated angle is the nozzle (exhaust) orientation, so the force on the
 * body points the opposite way. Pass beta_is_force_direction = true for tables
 * that already list the force direction.
 */
inline ThrusterBank bank_from_specs(const std::array<ThrusterSpec, kThrusterCount>& specs,
                                    bool beta_is_force_direction = false) {
    std::array<ThrusterConfig, kThrusterCount> cfg;
    for (std::size_t k = 0; k < kThrusterCount; ++k) {
        const auto& s = specs[k];
        const double offset = beta_is_force_direction ? 0.0 : 180.0;
        cfg[k] = ThrusterConfig{s.r_x_mm / 1000.0, s.r_y_mm / 1000.0, deg_to_rad(s.beta_deg + offset), s.t_max, 0.0};
    }
    return ThrusterBank(cfg);
}

/// Reference geometry. T7 sits at (195, 140) mm, mirroring T1 across X_B (see ERRATA.md).
inline std::array<ThrusterSpec, kThrusterCount> default_thruster_specs() {
    return {{
        {195.0, -140.0, 0.0, 0.7},
        {140.0, -195.0, 270.0, 0.7},
        {-195.0, -140.0, 180.0, 0.7},
        {-140.0, -195.0, 270.0, 0.7},
        {-195.0, 140.0, 180.0, 0.7},
        {-140.0, 195.0, 90.0, 0.7},
        {195.0, 140.0, 0.0, 0.7},
        {140.0, 195.0, 90.0, 0.7},
    }};
}

inline ThrusterBank default_bank() { return bank_from_specs(default_thruster_specs()); }

/**
 * Parses the geometry file format: one thruster per line,
 * `index, r_x_mm, r_y_mm, beta_deg, t_max_N`. Commas or whitespace separate
 * fields; `#` starts a comment. All eight indices must appear exactly once.
 */
inline std::array<ThrusterSpec, kThrusterCount> parse_thruster_specs(std::istream& in) {
    std::array<ThrusterSpec, kThrusterCount> specs{};
    std::bitset<kThrusterCount> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream fields(line);
        int index = 0;
        if (!(fields >> index)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw ConfigurationError("thruster file line " + std::to_string(line_no) + ": expected an index");
        }
        ThrusterSpec s{};
        if (!(fields >> s.r_x_mm >> s.r_y_mm >> s.beta_deg >> s.t_max))
            throw ConfigurationError("thruster file line " + std::to_string(line_no) + ": expected 5 fields");
        std::string extra;
        if (fields >> extra)
            throw ConfigurationError("thruster file line " + std::to_string(line_no) + ": trailing field '" + extra + "'");
        if (index < 1 || index > static_cast<int>(kThrusterCount))
            throw ConfigurationError("thruster index out of range: " + std::to_string(index));
        const auto k = static_cast<std::size_t>(index - 1);
        if (seen.test(k)) throw ConfigurationError("duplicate thruster index " + std::to_string(index));
        seen.set(k);
        specs[k] = s;
    }
    if (!seen.all()) throw ConfigurationError("thruster file must list all 8 thrusters");
    return specs;
}

inline ThrusterBank load_bank(const std::filesystem::path& path, bool beta_is_force_direction = false) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open thruster file: " + path.string());
    return bank_from_specs(parse_thruster_specs(in), beta_is_force_direction);
}

/// Net body wrench A * thrusts. Bound violations are accepted for analysis use.
inline Wrench wrench_from_thrusts(const ThrusterBank& bank, const ThrustVector& thrusts) {
    return Wrench::from_vector(bank.allocation_matrix() * thrusts);
}

/// Wrench when every thruster in `set` fires at full thrust.
inline Wrench wrench_from_set(const ThrusterBank& bank, const ThrusterSet& set) {
    ThrustVector thrusts = ThrustVector::Zero();
    for (std::size_t k = 0; k < kThrusterCount; ++k)
        if (set.test(k)) thrusts[static_cast<Eigen::Index>(k)] = bank.thruster(k).t_max;
    return wrench_from_thrusts(bank, thrusts);
}

enum class Motion { Forward, Backward, Left, Right, Clockwise, CounterClockwise };

inline constexpr std::array<Motion, 6> kAllMotions = {Motion::Forward,   Motion::Backward,  Motion::Left,
                                                      Motion::Right,     Motion::Clockwise, Motion::CounterClockwise};

/// Thrusters fired for each stick-level directed motion.
inline ThrusterSet directed_motion_thrusters(Motion motion) {
    switch (motion) {
        case Motion::Forward: return thruster_set({3, 5});
        case Motion::Backward: return thruster_set({1, 7});
        case Motion::Left: return thruster_set({2, 4});
        case Motion::Right: return thruster_set({6, 8});
        case Motion::Clockwise: return thruster_set({1, 4, 5, 8});
        case Motion::CounterClockwise: return thruster_set({2, 3, 6, 7});
    }
    return {};
}

inline const char* to_string(Motion m) {
    switch (m) {
        case Motion::Forward: return "forward";
        case Motion::Backward: return "backward";
        case Motion::Left: return "left";
        case Motion::Right: return "right";
        case Motion::Clockwise: return "clockwise";
        case Motion::CounterClockwise: return "counter-clockwise";
    }
    return "?";
}

}  // namespace slider
