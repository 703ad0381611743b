#pragma once

#include <map>
#include <string>
#include <vector>

#include "stq/device.hpp"

namespace stq {

/// Piecewise flux waveform for a set of flux-tunable modes over [0, duration].
/// Each mode owns non-overlapping segments; between and around segments a
/// mode holds the value its neighbouring segment ends (or starts) at. Modes
/// without segments are left to the device idle bias.
class FluxSchedule {
public:
    enum class Shape { constant, linear_ramp, flat_top };

    struct Segment {
        Shape shape = Shape::constant;
        double start = 0.0;
        double end = 0.0;
        double from = 0.0;  // constant: value; ramp: start value; flat_top: base
        double to = 0.0;    // ramp: end value; flat_top: plateau
        double edge = 0.0;  // flat_top only

        [[nodiscard]] double value(double t) const;
        [[nodiscard]] double first_value() const { return value(start); }
        [[nodiscard]] double last_value() const { return value(end); }
    };

    explicit FluxSchedule(double duration = 0.0);

    FluxSchedule& constant(const std::string& mode, double start, double end, double flux);
    FluxSchedule& linear_ramp(const std::string& mode, double start, double end, double from,
                              double to);
    /// base -> peak with (1 - cos)/2 edges of length `edge`, plateau, then back.
    FluxSchedule& flat_top(const std::string& mode, double start, double end, double base,
                           double peak, double edge);

    [[nodiscard]] double duration() const { return duration_; }
    [[nodiscard]] std::vector<std::string> modes() const;
    [[nodiscard]] const std::map<std::string, std::vector<Segment>>& segments() const {
        return segments_;
    }

    /// Flux of every scheduled mode at time t (clamped to [0, duration]).
    [[nodiscard]] FluxBias sample(double t) const;

    /// Sorted times where some waveform changes character: 0, duration,
    /// segment boundaries and flat-top edge ends.
    [[nodiscard]] std::vector<double> breakpoints() const;

    /// True when every scheduled flux is constant on [a, b] (a, b adjacent
    /// breakpoints).
    [[nodiscard]] bool constant_between(double a, double b) const;

private:
    FluxSchedule& add(const std::string& mode, Segment segment);

    double duration_ = 0.0;
    std::map<std::string, std::vector<Segment>> segments_;
};

}  // namespace stq
