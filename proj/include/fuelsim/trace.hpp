#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fuelsim {

/// Uniformly sampled speed profile of the preceding traffic.
struct SpeedTrace {
    double dt = 0.1;             // sampling step, s
    std::vector<double> speeds;  // m/s, all >= 0, length >= 2
    std::string label;

    double duration() const { return (static_cast<double>(speeds.size()) - 1.0) * dt; }
};

/// Trip aggregates backing the approximately-equal-trip filter.
struct TripSummary {
    double duration = 0.0;    // s
    double distance = 0.0;    // m, trapezoidal integral of speed
    double mean_speed = 0.0;  // m/s
    int stop_count = 0;       // maximal runs of samples below the stop threshold
};

/// Samples below this speed count as stopped (GPS noise floor).
inline constexpr double kStopSpeed = 0.5;  // m/s

/// Default sampling step used across the pipeline.
inline constexpr double kDefaultDt = 0.1;  // s

void validate(const SpeedTrace& trace);

/// Reads a `t_s,v_mps` CSV (time-ascending rows) and resamples it to a
/// uniform grid of step dt_hint via linear interpolation. Speeds are
/// clamped at zero. Throws ParseError naming the offending row.
SpeedTrace load_trace(const std::string& path, double dt_hint = kDefaultDt);

/// Writes the trace in the same CSV format at full precision.
void save_trace(const SpeedTrace& trace, const std::string& path);

/// Linear interpolation onto a new grid spanning the same duration.
SpeedTrace resample(const SpeedTrace& trace, double dt);

/// Synthetic highway commute: ramp from standstill to the cruise speed,
/// then cruise with low-pass-filtered fluctuation bounded at +-10% of the
/// cruise speed. Bit-reproducible per (seed, params).
SpeedTrace gen_highway(double duration, double dt, double cruise, std::uint64_t seed);

/// Synthetic local commute: accelerate-cruise-decelerate-dwell cycles with
/// exactly `stops` full stops. Bit-reproducible per (seed, params).
SpeedTrace gen_local(double duration, double dt, double top_speed, int stops, std::uint64_t seed);

TripSummary trip_stats(const SpeedTrace& trace);

}  // namespace fuelsim
