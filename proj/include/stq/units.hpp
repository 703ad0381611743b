#pragma once

#include <numbers>

// Configs quote linear frequencies in GHz; the numerics run in rad/ns with
// time in ns, so 2*pi is the only conversion factor.
namespace stq::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

constexpr double angular(double ghz) { return two_pi * ghz; }
constexpr double ghz(double rad_per_ns) { return rad_per_ns / two_pi; }
constexpr double mhz(double rad_per_ns) { return 1e3 * rad_per_ns / two_pi; }
constexpr double angular_from_mhz(double mhz) { return two_pi * mhz * 1e-3; }
constexpr double us_to_ns(double us) { return 1e3 * us; }

}  // namespace stq::units
