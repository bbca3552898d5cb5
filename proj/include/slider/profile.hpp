#pragma once

#include <algorithm>
#include <vector>

#include "slider/dynamics.hpp"
#include "slider/errors.hpp"

namespace slider {

/// Piecewise wrench command as a function of time.
class WrenchProfile {
public:
    enum class Interpolation { Linear, Step };

    struct Breakpoint {
        double t;
        Wrench wrench;
    };

    WrenchProfile() = default;
    WrenchProfile(std::vector<Breakpoint> points, Interpolation mode) : points_(std::move(points)), mode_(mode) {
        for (std::size_t i = 1; i < points_.size(); ++i)
            if (!(points_[i].t > points_[i - 1].t)) throw ParameterError("profile breakpoints must increase in time");
        for (const auto& p : points_)
            if (!p.wrench.finite()) throw ParameterError("profile wrench must be finite");
    }

    /// Zero before the first breakpoint; the last value is held after the final one.
    Wrench operator()(double t) const {
        if (points_.empty() || t < points_.front().t) return {};
        if (t >= points_.back().t) return points_.back().wrench;
        const auto upper = std::upper_bound(points_.begin(), points_.end(), t,
                                            [](double time, const Breakpoint& b) { return time < b.t; });
        const auto& hi = *upper;
        const auto& lo = *(upper - 1);
        if (mode_ == Interpolation::Step) return lo.wrench;
        const double s = (t - lo.t) / (hi.t - lo.t);
        return lo.wrench + s * (hi.wrench - lo.wrench);
    }

    const std::vector<Breakpoint>& breakpoints() const { return points_; }
    Interpolation interpolation() const { return mode_; }

private:
    std::vector<Breakpoint> points_;
    Interpolation mode_ = Interpolation::Linear;
};

/// Breakpoints of the two-step ramp, in seconds.
struct RampTiming {
    double rise_end = 5.0;      // 0 -> +peak
    double hold_end = 10.0;     // hold +peak
    double reverse_end = 20.0;  // +peak -> -peak
    double reverse_hold_end = 25.0;
    double return_end = 30.0;   // -peak -> 0, then zero
};

/**
 * Two-step ramp excitation applied identically on f_x, f_y and tau. The torque
 * channel carries the same shape scaled to amplitude_torque.
 */
inline WrenchProfile two_step_ramp_profile(double amplitude_force, double amplitude_torque, const RampTiming& timing = {}) {
    const Wrench peak{amplitude_force, amplitude_force, amplitude_torque};
    const Wrench zero{};
    return WrenchProfile({{0.0, zero},
                          {timing.rise_end, peak},
                          {timing.hold_end, peak},
                          {timing.reverse_end, -1.0 * peak},
                          {timing.reverse_hold_end, -1.0 * peak},
                          {timing.return_end, zero}},
                         WrenchProfile::Interpolation::Linear);
}

inline WrenchProfile constant_profile(const Wrench& w) {
    return WrenchProfile({{0.0, w}}, WrenchProfile::Interpolation::Step);
}

}  // namespace slider
