#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fuelsim/idm.hpp"

namespace fuelsim {

/// Longitudinal resistance and power parameters. Speeds fed to this module
/// are km/h: the constants 25.92 and 3600 in the power model are only
/// dimensionally consistent with km/h, so traces (m/s) are converted at the
/// trip_fuel boundary.
struct VehicleParams {
    double mass = 1453.0;          // kg
    double drag_coeff = 0.30;      // C_D
    double altitude_corr = 1.0;    // C_h
    double frontal_area = 2.32;    // m^2
    double air_density = 1.2256;   // kg/m^3
    double rolling_coeff = 1.75;   // C_r
    double c1 = 0.0328;
    double c2 = 4.575;
    double driveline_eff = 0.92;   // eta_d
    double gravity = 9.8066;       // m/s^2
    double grade = 0.0;            // G
};

struct EngineSpec {
    double idle_mean_pressure = 400000.0;  // Pa
    double idle_speed = 700.0;             // rpm
    double displacement = 2.4;             // L
    double heating_value = 4.3e7;          // J/kg
    int cylinders = 4;
};

/// Quadratic-in-power fuel rate coefficients with idle floor alpha0.
struct FuelCoefficients {
    double alpha0 = 5.9217e-4;  // L/s
    double alpha1 = 4.2378e-5;  // L/(s*kW)
    double alpha2 = 1e-6;       // L/(s*kW^2)
};

/// Cycle aggregates for the two-equation alpha calibration. power_sum and
/// power_sq_sum accumulate only positive-power instants, weighted by dt so
/// the recovered coefficients reproduce trip_fuel at any sampling step.
struct DriveCycleSummary {
    double total_fuel = 0.0;    // L
    double duration = 0.0;      // s
    double power_sum = 0.0;     // kW*s
    double power_sq_sum = 0.0;  // kW^2*s
};

/// Vehicle + calibrated fuel model, the unit a campaign runs against.
struct VehicleModel {
    std::string id;
    VehicleParams params;
    FuelCoefficients coeffs;
};

/// Built-in calibration fixture (Table-style published figures).
struct VehicleFixture {
    std::string name;
    VehicleParams params;
    FuelCoefficients coeffs;
    int cylinders;
    double displacement_l;
    double city_mpg;
    double highway_mpg;
};

inline constexpr double kMpsToKmh = 3.6;
inline constexpr double kDefaultAlpha2Floor = 1e-6;

/// Resistance force in N at speed v (km/h): aerodynamic + rolling + grade.
double resistance(double v_kmh, const VehicleParams& p);

/// Instantaneous power in kW at speed v (km/h) and acceleration (m/s^2);
/// negative while braking.
double power(double v_kmh, double accel, double resistance_n, const VehicleParams& p);

/// Fuel rate in L/s: alpha0 + alpha1*P + alpha2*P^2 for P > 0, else alpha0.
double fuel_rate(double power_kw, const FuelCoefficients& c);

/// Trip fuel in L: left-rectangle sum of fuel_rate over the n-1 intervals,
/// so an all-idle trajectory of duration D costs exactly alpha0*D.
double trip_fuel(const FollowerTrajectory& traj, const VehicleParams& p, const FuelCoefficients& c);

/// Idling fuel rate from engine figures:
/// P_mfo * omega_idle * d / (22164 * Q_heat * N_cyl).
double alpha0_from_engine(const EngineSpec& e);

/// Solves the two cycle equations for (alpha1, alpha2) given alpha0. When
/// the exact solution has alpha2 below the floor, alpha2 is pinned to the
/// floor and alpha1 re-solved from the city equation. Throws
/// std::runtime_error on a singular system.
FuelCoefficients calibrate_alphas(double alpha0, const DriveCycleSummary& city,
                                  const DriveCycleSummary& highway,
                                  double alpha2_floor = kDefaultAlpha2Floor);

/// Accumulates duration and positive-power sums of a trajectory (total_fuel
/// left at zero; published cycle fuel is supplied by the caller).
DriveCycleSummary cycle_power_summary(const FollowerTrajectory& traj, const VehicleParams& p);

/// Built-in Table fixtures: "passenger_car" and "light_duty_truck".
const std::vector<VehicleFixture>& vehicle_fixtures();
std::optional<VehicleFixture> find_fixture(const std::string& name);

/// Key-value vehicle config (`mass = 1453` style); unknown keys are errors.
VehicleModel load_vehicle_config(const std::string& path);

}  // namespace fuelsim
