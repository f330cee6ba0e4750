#include "fuelsim/idm.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "fuelsim/errors.hpp"

namespace fuelsim {

namespace {

double speed_power(double ratio, double delta) {
    if (delta == 4.0) {
        const double r2 = ratio * ratio;
        return r2 * r2;
    }
    return std::pow(ratio, delta);
}

}  // namespace

void validate(const DriverPreferences& prefs) {
    if (!(prefs.a_max > 0.0) || !(prefs.b_des > 0.0) || !(prefs.headway > 0.0) || !(prefs.jam > 0.0)) {
        throw std::invalid_argument("DriverPreferences: all parameters must be > 0");
    }
}

double desired_gap(double v, double dv, const DriverPreferences& prefs) {
    return prefs.jam + prefs.headway * v + v * dv / (2.0 * std::sqrt(prefs.a_max * prefs.b_des));
}

double idm_accel(double v, double dv, double gap, const DriverPreferences& prefs,
                 const IdmConstants& consts) {
    if (!(gap > 0.0)) {
        throw std::domain_error("idm_accel: gap must be > 0 (collision state)");
    }
    const double s_star = desired_gap(v, dv, prefs);
    const double interaction = s_star / gap;
    const double accel =
        prefs.a_max * (1.0 - speed_power(v / consts.v0, consts.delta) - interaction * interaction);
    return std::max(accel, -2.0 * prefs.b_des);
}

double default_init_gap(const SpeedTrace& leader, const DriverPreferences& prefs) {
    return std::max(prefs.jam + prefs.headway * leader.speeds.front(), 10.0);
}

FollowerTrajectory simulate_follower(const SpeedTrace& leader, const DriverPreferences& prefs,
                                     const IdmConstants& consts, double init_gap) {
    validate(leader);
    validate(prefs);
    if (init_gap <= 0.0) init_gap = default_init_gap(leader, prefs);

    const std::size_t n = leader.speeds.size();
    const double dt = leader.dt;

    FollowerTrajectory traj;
    traj.dt = dt;
    traj.speeds.resize(n);
    traj.accels.resize(n);
    traj.gaps.resize(n);
    traj.positions.resize(n);

    double leader_x = init_gap;
    double x = 0.0;
    double v = 0.0;  // follower starts at rest

    for (std::size_t k = 0; k < n; ++k) {
        const double gap = leader_x - x;
        if (!(gap > 0.0)) {
            throw SimulationError("simulate_follower: gap closed at step " + std::to_string(k), k);
        }
        const double accel = idm_accel(v, v - leader.speeds[k], gap, prefs, consts);

        traj.speeds[k] = v;
        traj.accels[k] = accel;
        traj.gaps[k] = gap;
        traj.positions[k] = x;

        if (k + 1 == n) break;
        const double v_next = v + accel * dt;
        if (v_next < 0.0) {
            x += -0.5 * v * v / accel;  // ballistic stop within the step
            v = 0.0;
        } else {
            x += 0.5 * (v + v_next) * dt;
            v = v_next;
        }
        leader_x += 0.5 * (leader.speeds[k] + leader.speeds[k + 1]) * dt;
    }
    return traj;
}

void save_trajectory(const FollowerTrajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_trajectory: cannot write '" + path + "'");
    out << "t_s,v_mps,a_mps2,gap_m,x_m\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < traj.speeds.size(); ++k) {
        out << static_cast<double>(k) * traj.dt << ',' << traj.speeds[k] << ',' << traj.accels[k]
            << ',' << traj.gaps[k] << ',' << traj.positions[k] << '\n';
    }
}

}  // namespace fuelsim
