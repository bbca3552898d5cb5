#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "slider/errors.hpp"

namespace slider {

using StateVector = Eigen::Matrix<double, 6, 1>;
using Rotation2d = Eigen::Matrix2d;

/// Planar wrench expressed in the body frame.
struct Wrench {
    double f_x = 0.0;  // [N]
    double f_y = 0.0;  // [N]
    double tau = 0.0;  // [N m] about Z_B

    Eigen::Vector3d vector() const { return {f_x, f_y, tau}; }
    static Wrench from_vector(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

    bool finite() const { return std::isfinite(f_x) && std::isfinite(f_y) && std::isfinite(tau); }

    friend Wrench operator+(const Wrench& a, const Wrench& b) { return {a.f_x + b.f_x, a.f_y + b.f_y, a.tau + b.tau}; }
    friend Wrench operator-(const Wrench& a, const Wrench& b) { return {a.f_x - b.f_x, a.f_y - b.f_y, a.tau - b.tau}; }
    friend Wrench operator*(double s, const Wrench& w) { return {s * w.f_x, s * w.f_y, s * w.tau}; }
    friend bool operator==(const Wrench&, const Wrench&) = default;
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double wrapped = std::remainder(angle, two_pi);
    if (wrapped <= -std::numbers::pi) wrapped += two_pi;
    return wrapped;
}

/**
 * @brief Slider pose in the inertial (table) frame and velocities in the body frame.
 *
 * Heading is kept unwrapped so that the state derivative is smooth across +-pi;
 * use wrapped_theta() at presentation boundaries.
 */
struct SliderState {
    double x = 0.0;      // [m] inertial
    double y = 0.0;      // [m] inertial
    double theta = 0.0;  // [rad] unwrapped heading, X to X_B
    double v_x = 0.0;    // [m/s] body frame
    double v_y = 0.0;    // [m/s] body frame
    double r = 0.0;      // [rad/s] yaw rate

    double wrapped_theta() const { return wrap_angle(theta); }

    StateVector vector() const {
        StateVector v;
        v << x, y, theta, v_x, v_y, r;
        return v;
    }
    static SliderState from_vector(const StateVector& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }

    bool finite() const { return vector().allFinite(); }

    friend bool operator==(const SliderState&, const SliderState&) = default;
};

/// Rigid-body parameters. Off-diagonal inertia terms are neglected.
struct SliderParams {
    double mass = 4.436;        // [kg]
    double inertia_zz = 1.092;  // [kg m^2]

    void validate() const {
        if (!(mass > 0.0) || !std::isfinite(mass)) throw ParameterError("mass must be positive and finite");
        if (!(inertia_zz > 0.0) || !std::isfinite(inertia_zz))
            throw ParameterError("inertia_zz must be positive and finite");
    }
};

/// Rotation taking body-frame vectors to the inertial frame.
inline Rotation2d rotation_body_to_inertial(double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Rotation2d rot;
    rot << c, -s, s, c;
    return rot;
}

namespace detail {

inline StateVector derivative(const StateVector& s, const Wrench& w, const SliderParams& p) {
    const double c = std::cos(s[2]);
    const double sn = std::sin(s[2]);
    const double v_x = s[3];
    const double v_y = s[4];
    const double r = s[5];
    StateVector d;
    d << v_x * c - v_y * sn,
         v_x * sn + v_y * c,
         r,
         r * v_y + w.f_x / p.mass,
        -r * v_x + w.f_y / p.mass,
         w.tau / p.inertia_zz;
    return d;
}

}  // namespace detail

/// Planar equations of motion with body-frame Coriolis coupling.
inline StateVector state_derivative(const SliderState& state, const Wrench& wrench, const SliderParams& params) {
    params.validate();
    return detail::derivative(state.vector(), wrench, params);
}

/// Classical fixed-step RK4 for an autonomous system dy/dt = f(y).
template <typename Vector, typename Derivative>
Vector rk4_step(const Vector& y, double dt, Derivative&& f) {
    const Vector k1 = f(y);
    const Vector k2 = f(Vector(y + 0.5 * dt * k1));
    const Vector k3 = f(Vector(y + 0.5 * dt * k2));
    const Vector k4 = f(Vector(y + dt * k3));
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/**
 * @brief Advances the slider by one step with the wrench held constant over the step.
 *
 * @param disturbance additive body-frame wrench (table tilt, residual drag, ...); zero by default
 */
inline SliderState integrate_step(const SliderState& state, const Wrench& wrench, const SliderParams& params, double dt,
                                  const Wrench& disturbance = {}) {
    params.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("integration step must be positive");
    const Wrench total = wrench + disturbance;
    const StateVector next =
        rk4_step(state.vector(), dt, [&](const StateVector& s) { return detail::derivative(s, total, params); });
    return SliderState::from_vector(next);
}

/// Kinetic energy 1/2 m |v|^2 + 1/2 I_zz r^2.
inline double kinetic_energy(const SliderState& s, const SliderParams& p) {
    return 0.5 * p.mass * (s.v_x * s.v_x + s.v_y * s.v_y) + 0.5 * p.inertia_zz * s.r * s.r;
}

/// Velocity of the body origin expressed in the inertial frame.
inline Eigen::Vector2d inertial_velocity(const SliderState& s) {
    return rotation_body_to_inertial(s.theta) * Eigen::Vector2d(s.v_x, s.v_y);
}

}  // namespace slider
