#include "stq/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stq/errors.hpp"

namespace stq {

double FluxSchedule::Segment::value(double t) const {
    switch (shape) {
    case Shape::constant:
        return from;
    case Shape::linear_ramp: {
        if (end <= start) {
            return to;
        }
        const double s = std::clamp((t - start) / (end - start), 0.0, 1.0);
        return from + (to - from) * s;
    }
    case Shape::flat_top: {
        const double rise = std::min(t - start, end - t);
        if (rise <= 0.0) {
            return from;
        }
        if (rise >= edge) {
            return to;
        }
        const double s = 0.5 * (1.0 - std::cos(std::numbers::pi * rise / edge));
        return from + (to - from) * s;
    }
    }
    return from;
}

FluxSchedule::FluxSchedule(double duration) : duration_(duration) {
    if (!(duration >= 0.0) || !std::isfinite(duration)) {
        throw InputError("bad-duration", "schedule duration must be finite and >= 0");
    }
}

FluxSchedule& FluxSchedule::add(const std::string& mode, Segment segment) {
    if (!std::isfinite(segment.from) || !std::isfinite(segment.to)) {
        throw InputError("non-finite-flux", "segment for '" + mode + "' has a non-finite flux");
    }
    if (!(segment.start >= 0.0) || segment.end < segment.start || segment.end > duration_ + 1e-12) {
        throw InputError("bad-segment", "segment for '" + mode + "' lies outside [0, duration]");
    }
    auto& list = segments_[mode];
    for (const auto& other : list) {
        if (segment.start < other.end && other.start < segment.end) {
            throw InputError("overlapping-segments", "segments for '" + mode + "' overlap");
        }
    }
    list.push_back(segment);
    std::sort(list.begin(), list.end(),
              [](const Segment& x, const Segment& y) { return x.start < y.start; });
    return *this;
}

FluxSchedule& FluxSchedule::constant(const std::string& mode, double start, double end,
                                     double flux) {
    return add(mode, {Shape::constant, start, end, flux, flux, 0.0});
}

FluxSchedule& FluxSchedule::linear_ramp(const std::string& mode, double start, double end,
                                        double from, double to) {
    return add(mode, {Shape::linear_ramp, start, end, from, to, 0.0});
}

FluxSchedule& FluxSchedule::flat_top(const std::string& mode, double start, double end,
                                     double base, double peak, double edge) {
    if (!(edge >= 0.0) || 2.0 * edge > end - start + 1e-12) {
        throw InputError("bad-edge", "flat-top edges longer than the segment for '" + mode + "'");
    }
    return add(mode, {Shape::flat_top, start, end, base, peak, edge});
}

std::vector<std::string> FluxSchedule::modes() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : segments_) {
        out.push_back(id);
    }
    return out;
}

FluxBias FluxSchedule::sample(double t) const {
    t = std::clamp(t, 0.0, duration_);
    FluxBias bias;
    for (const auto& [id, list] : segments_) {
        double value = list.front().first_value();
        for (const auto& seg : list) {
            if (t < seg.start) {
                break;
            }
            value = t <= seg.end ? seg.value(t) : seg.last_value();
        }
        bias.set(id, value);
    }
    return bias;
}

std::vector<double> FluxSchedule::breakpoints() const {
    std::vector<double> points{0.0, duration_};
    for (const auto& [_, list] : segments_) {
        for (const auto& seg : list) {
            points.push_back(seg.start);
            points.push_back(seg.end);
            if (seg.shape == Shape::flat_top) {
                points.push_back(seg.start + seg.edge);
                points.push_back(seg.end - seg.edge);
            }
        }
    }
    std::sort(points.begin(), points.end());
    std::vector<double> unique;
    for (double p : points) {
        p = std::clamp(p, 0.0, duration_);
        if (unique.empty() || p - unique.back() > 1e-12) {
            unique.push_back(p);
        }
    }
    return unique;
}

bool FluxSchedule::constant_between(double a, double b) const {
    for (const auto& [_, list] : segments_) {
        for (const auto& seg : list) {
            if (seg.shape == Shape::constant || !(seg.start < b && a < seg.end)) {
                continue;
            }
            if (seg.shape == Shape::linear_ramp && seg.from != seg.to) {
                return false;
            }
            if (seg.shape == Shape::flat_top && seg.from != seg.to) {
                const bool on_plateau = a >= seg.start + seg.edge && b <= seg.end - seg.edge;
                if (!on_plateau) {
                    return false;
                }
            }
        }
    }
    return true;
}

}  // namespace stq
