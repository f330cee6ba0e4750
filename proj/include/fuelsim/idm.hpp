#pragma once

#include <string>
#include <vector>

#include "fuelsim/trace.hpp"

namespace fuelsim {

/// Driver behavior vector: maximum acceleration a, desired deceleration b,
/// time headway T and jam distance s0.
struct DriverPreferences {
    double a_max = 1.1;    // m/s^2
    double b_des = 2.0;    // m/s^2
    double headway = 1.4;  // s
    double jam = 2.0;      // m
};

struct IdmConstants {
    double v0 = 33.33;   // desired free-flow speed, m/s
    double delta = 4.0;  // acceleration exponent
};

/// Free-flow speed defaults tied to the route speed limit.
inline constexpr double kHighwayV0 = 33.33;  // m/s
inline constexpr double kLocalV0 = 17.88;    // m/s

/// Follower state over the leader horizon. All sequences share the leader's
/// length and dt; gaps stay positive in any trajectory this module returns.
struct FollowerTrajectory {
    double dt = 0.1;
    std::vector<double> speeds;     // m/s
    std::vector<double> accels;     // m/s^2
    std::vector<double> gaps;       // m, bumper to bumper
    std::vector<double> positions;  // m
};

void validate(const DriverPreferences& prefs);

/// Desired minimum gap s* = s0 + T*v + v*dv/(2*sqrt(a*b)). dv is the
/// approach rate (follower speed minus leader speed). Not clamped; strongly
/// negative dv can push the value below s0.
double desired_gap(double v, double dv, const DriverPreferences& prefs);

/// Car-following acceleration a*(1 - (v/v0)^delta - (s*/gap)^2), floored at
/// -2*b_des as an emergency braking cap. Throws std::domain_error when
/// gap <= 0 (collision state).
double idm_accel(double v, double dv, double gap, const DriverPreferences& prefs,
                 const IdmConstants& consts);

/// Initial spacing when none is given: max(s0 + T*v_leader(0), 10 m).
double default_init_gap(const SpeedTrace& leader, const DriverPreferences& prefs);

/// Integrates the follower behind the leader trace from standstill.
/// Explicit Euler with a ballistic non-negativity stop; leader position is
/// the trapezoidal integral of the trace. Throws SimulationError with the
/// step index if the gap ever closes completely. A non-positive init_gap
/// selects default_init_gap.
FollowerTrajectory simulate_follower(const SpeedTrace& leader, const DriverPreferences& prefs,
                                     const IdmConstants& consts, double init_gap = 0.0);

/// CSV export, header `t_s,v_mps,a_mps2,gap_m,x_m`.
void save_trajectory(const FollowerTrajectory& traj, const std::string& path);

}  // namespace fuelsim
