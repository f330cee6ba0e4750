#include "fuelsim/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "fuelsim/errors.hpp"
#include "fuelsim/rng.hpp"

namespace fuelsim {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::size_t grid_size(double duration, double dt) {
    return static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
}

/// Linear interpolation of (ts, vs) at time t; ts strictly increasing.
double interp_at(const std::vector<double>& ts, const std::vector<double>& vs, double t) {
    if (t <= ts.front()) return vs.front();
    if (t >= ts.back()) return vs.back();
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
    const std::size_t lo = hi - 1;
    const double frac = (t - ts[lo]) / (ts[hi] - ts[lo]);
    return vs[lo] + frac * (vs[hi] - vs[lo]);
}

// Constant-acceleration segment of a synthetic profile.
struct Phase {
    double t_len;
    double v_start;
    double accel;
};

double eval_phases(const std::vector<Phase>& phases, double t) {
    double t0 = 0.0;
    for (const Phase& ph : phases) {
        if (t < t0 + ph.t_len || &ph == &phases.back()) {
            const double local = std::clamp(t - t0, 0.0, ph.t_len);
            return std::max(0.0, ph.v_start + ph.accel * local);
        }
        t0 += ph.t_len;
    }
    return 0.0;
}

}  // namespace

void validate(const SpeedTrace& trace) {
    if (!(trace.dt > 0.0)) throw std::invalid_argument("SpeedTrace: dt must be > 0");
    if (trace.speeds.size() < 2) throw std::invalid_argument("SpeedTrace: need at least 2 samples");
    for (double v : trace.speeds) {
        if (!(v >= 0.0)) throw std::invalid_argument("SpeedTrace: speeds must be >= 0");
    }
}

SpeedTrace load_trace(const std::string& path, double dt_hint) {
    if (!(dt_hint > 0.0)) throw std::invalid_argument("load_trace: dt_hint must be > 0");
    std::ifstream in(path);
    if (!in) throw ParseError("load_trace: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("load_trace: empty file '" + path + "'");
    if (trim(line) != "t_s,v_mps") {
        throw ParseError("load_trace: row 1: expected header 't_s,v_mps', got '" + trim(line) + "'");
    }

    std::vector<double> ts;
    std::vector<double> vs;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto comma = stripped.find(',');
        if (comma == std::string::npos) {
            throw ParseError("load_trace: row " + std::to_string(row) + ": missing column");
        }
        double t = 0.0;
        double v = 0.0;
        try {
            std::size_t used = 0;
            t = std::stod(stripped.substr(0, comma), &used);
            v = std::stod(stripped.substr(comma + 1), &used);
        } catch (const std::exception&) {
            throw ParseError("load_trace: row " + std::to_string(row) + ": not a number");
        }
        if (!ts.empty() && !(t > ts.back())) {
            throw ParseError("load_trace: row " + std::to_string(row) + ": non-monotone time");
        }
        ts.push_back(t);
        vs.push_back(std::max(0.0, v));
    }
    if (ts.empty()) throw ParseError("load_trace: no data rows in '" + path + "'");
    if (ts.size() < 2) throw ParseError("load_trace: need at least 2 rows, got 1");

    const double duration = ts.back() - ts.front();
    SpeedTrace trace;
    trace.dt = dt_hint;
    trace.label = path;
    const std::size_t n = grid_size(duration, dt_hint);
    trace.speeds.resize(std::max<std::size_t>(n, 2));
    for (std::size_t k = 0; k < trace.speeds.size(); ++k) {
        trace.speeds[k] = std::max(0.0, interp_at(ts, vs, ts.front() + static_cast<double>(k) * dt_hint));
    }
    return trace;
}

void save_trace(const SpeedTrace& trace, const std::string& path) {
    validate(trace);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_trace: cannot write '" + path + "'");
    out << "t_s,v_mps\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < trace.speeds.size(); ++k) {
        out << static_cast<double>(k) * trace.dt << ',' << trace.speeds[k] << '\n';
    }
}

SpeedTrace resample(const SpeedTrace& trace, double dt) {
    validate(trace);
    if (!(dt > 0.0)) throw std::invalid_argument("resample: dt must be > 0");
    if (dt == trace.dt) return trace;

    SpeedTrace out;
    out.dt = dt;
    out.label = trace.label;
    const double duration = trace.duration();
    const std::size_t n = std::max<std::size_t>(grid_size(duration, dt), 2);
    out.speeds.resize(n);
    const std::size_t last = trace.speeds.size() - 1;
    for (std::size_t k = 0; k < n; ++k) {
        const double pos = std::min(static_cast<double>(k) * dt / trace.dt, static_cast<double>(last));
        const std::size_t lo = std::min(static_cast<std::size_t>(pos), last - 1);
        const double frac = pos - static_cast<double>(lo);
        out.speeds[k] = std::max(0.0, trace.speeds[lo] + frac * (trace.speeds[lo + 1] - trace.speeds[lo]));
    }
    return out;
}

SpeedTrace gen_highway(double duration, double dt, double cruise, std::uint64_t seed) {
    if (!(duration > 0.0) || !(dt > 0.0) || !(cruise > 0.0)) {
        throw std::invalid_argument("gen_highway: duration, dt, cruise must be > 0");
    }
    Rng rng(seed);
    const double ramp_accel = 1.2;  // m/s^2
    const double t_ramp = cruise / ramp_accel;

    // Skeleton: quiet cruise interrupted by traffic-wave episodes — a slow
    // drift down of at most ~10% of the cruise speed, a short trough, then a
    // brisk recovery. The drift is gentle enough for any follower to track;
    // the recovery is what separates eager accelerators from sluggish ones.
    std::vector<Phase> phases;
    phases.push_back({t_ramp, 0.0, ramp_accel});
    double t_used = t_ramp;
    while (t_used < duration) {
        const double quiet = rng.uniform(30.0, 55.0);
        phases.push_back({quiet, cruise, 0.0});
        t_used += quiet;
        if (t_used >= duration) break;
        const double depth = cruise * rng.uniform(0.040, 0.065);
        const double t_drop = rng.uniform(12.0, 20.0);
        phases.push_back({t_drop, cruise, -depth / t_drop});
        const double trough = rng.uniform(2.0, 6.0);
        phases.push_back({trough, cruise - depth, 0.0});
        const double recover = rng.uniform(1.2, 1.8);
        phases.push_back({depth / recover, cruise - depth, recover});
        t_used += t_drop + trough + depth / recover;
    }

    // Mild low-pass texture on top, faded in after the ramp and bounded so
    // the total excursion stays within 10% of the cruise speed.
    const double blend = 30.0;  // s
    const double tau = 20.0;    // s
    const double rho = std::exp(-dt / tau);
    const double innovation = std::sqrt(1.0 - rho * rho) * 0.10;

    SpeedTrace trace;
    trace.dt = dt;
    trace.label = "highway";
    const std::size_t n = std::max<std::size_t>(grid_size(duration, dt), 2);
    trace.speeds.resize(n);
    double state = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        state = rho * state + innovation * rng.normal();
        double v = eval_phases(phases, t);
        if (t >= t_ramp) {
            const double fade = std::min(1.0, (t - t_ramp) / blend);
            v += fade * std::clamp(state, -0.25, 0.25);
        }
        trace.speeds[k] = std::max(0.0, v);
    }
    return trace;
}

SpeedTrace gen_local(double duration, double dt, double top_speed, int stops, std::uint64_t seed) {
    if (!(duration > 0.0) || !(dt > 0.0) || !(top_speed > 0.0)) {
        throw std::invalid_argument("gen_local: duration, dt, top_speed must be > 0");
    }
    if (stops < 1) throw std::invalid_argument("gen_local: stops must be >= 1");

    Rng rng(seed);

    // Jittered cycle lengths normalized to the requested duration.
    std::vector<double> weights(static_cast<std::size_t>(stops));
    double weight_sum = 0.0;
    for (double& w : weights) {
        w = 1.0 + 0.2 * (rng.uniform() - 0.5);
        weight_sum += w;
    }

    std::vector<Phase> phases;
    double prev_cruise = 0.0;
    for (int k = 0; k < stops; ++k) {
        const double cycle = duration * weights[static_cast<std::size_t>(k)] / weight_sum;
        // The leader launches hard from every stop — harder than any follower
        // sampled from the preference box can match — so each restart is a
        // free-flow recovery driven by the follower's own acceleration limit.
        const double accel = rng.uniform(2.2, 2.6);
        const double decel = rng.uniform(1.1, 1.7);
        const double dwell = (k == 0) ? 0.0 : cycle * rng.uniform(0.10, 0.18);

        double budget = cycle - dwell - (k == 0 ? 0.0 : prev_cruise / decel);
        double target = top_speed * rng.uniform(0.93, 1.0);
        // Keep at least a short cruise segment; shrink the target speed on
        // cycles too short for the full trapezoid.
        const double max_reachable = std::max(0.0, 0.9 * budget) * accel;
        target = std::min(target, max_reachable);
        target = std::min(target, top_speed);

        if (k > 0) {
            phases.push_back({prev_cruise / decel, prev_cruise, -decel});
            phases.push_back({dwell, 0.0, 0.0});
        }
        const double t_accel = target / accel;
        phases.push_back({t_accel, 0.0, accel});
        const double cruise_len = std::max(0.0, budget - t_accel);
        phases.push_back({cruise_len, target, 0.0});
        prev_cruise = target;
    }

    SpeedTrace trace;
    trace.dt = dt;
    trace.label = "local";
    const std::size_t n = std::max<std::size_t>(grid_size(duration, dt), 2);
    trace.speeds.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double v = eval_phases(phases, static_cast<double>(k) * dt);
        trace.speeds[k] = std::clamp(v, 0.0, top_speed);
    }
    return trace;
}

TripSummary trip_stats(const SpeedTrace& trace) {
    validate(trace);
    TripSummary out;
    out.duration = trace.duration();
    double dist = 0.0;
    for (std::size_t k = 0; k + 1 < trace.speeds.size(); ++k) {
        dist += 0.5 * (trace.speeds[k] + trace.speeds[k + 1]) * trace.dt;
    }
    out.distance = dist;
    out.mean_speed = dist / out.duration;
    bool stopped = false;
    for (double v : trace.speeds) {
        const bool below = v < kStopSpeed;
        if (below && !stopped) ++out.stop_count;
        stopped = below;
    }
    return out;
}

}  // namespace fuelsim
