// signal_core.hpp - physical constants, phase/distance conversions, analytic bounds
//
// Everything downstream (simulator, demodulator, solvers) uses these
// conversions, so the conventions are fixed here once:
//   - all angles in radians, wrapped into [-pi, pi]
//   - distances in meters, frequencies in Hz, time in seconds
//   - positive distance change = target moving away from the receiver

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cfcw {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Error with a machine-checkable kind ("invalid-argument", "invalid-scene", ...)
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        double n = norm();
        if (n == 0.0) throw Error("invalid-argument", "cannot normalize zero vector");
        return {x / n, y / n, z / n};
    }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

struct Medium {
    double speed_of_sound = 343.0;  // m/s, 20 C air

    void validate() const {
        if (!(speed_of_sound > 0.0))
            throw Error("invalid-argument", "speed_of_sound must be positive");
    }
};

// Square-law capture model: y = linear_gain * x + quadratic_gain * x^2
struct NonlinearityModel {
    double linear_gain = 1.0;     // A1
    double quadratic_gain = 0.1;  // A2

    void validate() const {
        if (!(linear_gain > 0.0))
            throw Error("invalid-argument", "linear_gain must be positive");
        if (quadratic_gain < 0.0 || quadratic_gain >= linear_gain)
            throw Error("invalid-argument", "need 0 <= quadratic_gain < linear_gain");
    }
};

struct PhaseSample {
    double wrapped_phase = 0.0;  // radians, [-pi, pi]
    long frame_index = 0;
    double frequency = 0.0;  // Hz
};

// Wrap into [-pi, pi].
inline double wrap_phase(double phi) {
    double w = std::remainder(phi, kTwoPi);
    if (w <= -kPi) w += kTwoPi;
    return w;
}

// Distance change for a measured phase change of the primary tone.
// dphi = 2*pi*f*dd/c  =>  dd = dphi*c / (2*pi*f)
inline double phase_to_distance_delta(double dphi, double f_primary, const Medium& medium = {}) {
    medium.validate();
    if (!(f_primary > 0.0))
        throw Error("invalid-argument", "f_primary must be positive");
    if (!std::isfinite(dphi))
        throw Error("invalid-argument", "dphi must be finite");
    return dphi * medium.speed_of_sound / (kTwoPi * f_primary);
}

// Fastest radial movement the unwrapper can follow. Classic unwrapping needs
// |dphi| < pi per frame; the velocity-aided variant tolerates |dphi| < 2*pi.
inline double max_unambiguous_speed(double f_primary, double frame_period,
                                    const Medium& medium = {}, bool velocity_aided = false) {
    medium.validate();
    if (!(f_primary > 0.0) || !(frame_period > 0.0))
        throw Error("invalid-argument", "f_primary and frame_period must be positive");
    double classic = medium.speed_of_sound / (2.0 * f_primary * frame_period);
    return velocity_aided ? 2.0 * classic : classic;
}

struct InterferenceBound {
    double phase = 0.0;     // radians
    double distance = 0.0;  // meters
};

// Worst-case phase and distance error from an NLOS replica with the given
// amplitude ratio relative to the LOS path.
inline InterferenceBound interference_error_bound(double amplitude_ratio, double f_primary,
                                                  const Medium& medium = {}) {
    medium.validate();
    if (!(f_primary > 0.0))
        throw Error("invalid-argument", "f_primary must be positive");
    if (!std::isfinite(amplitude_ratio) || amplitude_ratio < 0.0 || amplitude_ratio > 1.0)
        throw Error("invalid-argument", "amplitude_ratio must be in [0, 1]");
    double dphi = std::asin(amplitude_ratio);
    return {dphi, dphi * medium.speed_of_sound / (kTwoPi * f_primary)};
}

}  // namespace cfcw
