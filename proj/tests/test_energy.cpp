#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "fuelsim/energy.hpp"
#include "fuelsim/errors.hpp"

using namespace fuelsim;
namespace fs = std::filesystem;

namespace {

// Independent single-expression oracle for the resistance force.
double resistance_oracle(double v_kmh, const VehicleParams& p) {
    const double aero = (p.air_density / 25.92) * p.drag_coeff * p.altitude_corr *
                        p.frontal_area * v_kmh * v_kmh;
    const double rolling = p.mass * p.gravity * (p.rolling_coeff / 1000.0) *
                           (p.c1 * v_kmh + p.c2);
    const double grade = p.mass * p.gravity * p.grade;
    return aero + rolling + grade;
}

FollowerTrajectory constant_cruise(double v_mps, double duration, double dt = 0.1) {
    FollowerTrajectory t;
    t.dt = dt;
    const std::size_t n = static_cast<std::size_t>(std::llround(duration / dt)) + 1;
    t.speeds.assign(n, v_mps);
    t.accels.assign(n, 0.0);
    t.gaps.assign(n, 50.0);
    t.positions.assign(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) t.positions[k] = t.positions[k - 1] + v_mps * dt;
    return t;
}

}  // namespace

TEST_CASE("resistance: at rest only the constant rolling term survives") {
    VehicleParams p;
    const double expected = p.mass * p.gravity * (p.rolling_coeff / 1000.0) * p.c2;
    CHECK(resistance(0.0, p) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(114.1).epsilon(1e-3));
}

TEST_CASE("resistance: matches the expression oracle over a speed sweep") {
    VehicleParams p;
    for (double v = 0.0; v <= 130.0; v += 7.3) {
        CHECK(resistance(v, p) == doctest::Approx(resistance_oracle(v, p)).epsilon(1e-12));
    }
    VehicleParams truck;
    truck.mass = 3152.0;
    truck.drag_coeff = 0.60;
    truck.frontal_area = 3.87;
    truck.grade = 0.02;
    for (double v = 0.0; v <= 130.0; v += 11.1) {
        CHECK(resistance(v, truck) == doctest::Approx(resistance_oracle(v, truck)).epsilon(1e-12));
    }
}

TEST_CASE("resistance: doubling the frontal area doubles only the aero part") {
    VehicleParams p;
    VehicleParams wide = p;
    wide.frontal_area *= 2.0;
    const double v = 90.0;
    const double aero = (p.air_density / 25.92) * p.drag_coeff * p.frontal_area * v * v;
    CHECK(resistance(v, wide) - resistance(v, p) == doctest::Approx(aero).epsilon(1e-9));
}

TEST_CASE("power: zero at standstill, hand value at cruise, negative under braking") {
    VehicleParams p;
    CHECK(power(0.0, 0.0, resistance(0.0, p), p) == doctest::Approx(0.0).epsilon(1e-12));

    // P = v * (R + 1.04 m a) / (3600 eta): 100 km/h, R = 500 N, a = 0
    const double hand = 100.0 * 500.0 / (3600.0 * p.driveline_eff);
    CHECK(power(100.0, 0.0, 500.0, p) == doctest::Approx(hand).epsilon(1e-12));
    CHECK(hand == doctest::Approx(15.0966).epsilon(1e-4));

    // Hard braking at speed: the 1.04*m*a term dominates R.
    CHECK(power(80.0, -2.0, resistance(80.0, p), p) < 0.0);
}

TEST_CASE("power: acceleration term carries the 1.04 mass factor") {
    VehicleParams p;
    const double v = 60.0, R = 400.0, a = 1.0;
    const double expected = v * (R + 1.04 * p.mass * a) / (3600.0 * p.driveline_eff);
    CHECK(power(v, a, R, p) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("fuel_rate: idle floor below zero power, quadratic law above") {
    FuelCoefficients c;  // alpha0 = 5.9217e-4, alpha1 = 4.2378e-5, alpha2 = 1e-6
    CHECK(fuel_rate(-5.0, c) == doctest::Approx(c.alpha0).epsilon(1e-12));
    CHECK(fuel_rate(0.0, c) == doctest::Approx(c.alpha0).epsilon(1e-12));
    const double at10 = c.alpha0 + c.alpha1 * 10.0 + c.alpha2 * 100.0;
    CHECK(fuel_rate(10.0, c) == doctest::Approx(at10).epsilon(1e-12));
    CHECK(at10 == doctest::Approx(1.11595e-3).epsilon(1e-4));
}

TEST_CASE("fuel_rate: monotone non-decreasing in power") {
    FuelCoefficients c;
    double prev = fuel_rate(-10.0, c);
    for (double pw = -9.0; pw <= 120.0; pw += 1.0) {
        const double r = fuel_rate(pw, c);
        CHECK(r >= prev - 1e-15);
        prev = r;
    }
}

TEST_CASE("trip_fuel: an idle trajectory costs exactly alpha0 times the duration") {
    VehicleParams p;
    FuelCoefficients c;
    FollowerTrajectory t = constant_cruise(0.0, 600.0);
    const double fuel = trip_fuel(t, p, c);
    CHECK(fuel == doctest::Approx(c.alpha0 * 600.0).epsilon(1e-12));
}

TEST_CASE("trip_fuel: steady cruise equals duration times the steady fuel rate") {
    VehicleParams p;
    FuelCoefficients c;
    const double v = 25.0;  // m/s
    FollowerTrajectory t = constant_cruise(v, 300.0);
    const double v_kmh = v * kMpsToKmh;
    const double rate = fuel_rate(power(v_kmh, 0.0, resistance(v_kmh, p), p), c);
    CHECK(trip_fuel(t, p, c) == doctest::Approx(rate * 300.0).epsilon(1e-9));
}

TEST_CASE("trip_fuel: never less than the idle floor") {
    VehicleParams p;
    FuelCoefficients c;
    FollowerTrajectory t = constant_cruise(15.0, 200.0);
    // Add a hard braking phase: negative power still burns at the idle floor.
    for (std::size_t k = t.accels.size() / 2; k < t.accels.size(); ++k) t.accels[k] = -3.0;
    CHECK(trip_fuel(t, p, c) >= c.alpha0 * 200.0 - 1e-12);
}

TEST_CASE("alpha0_from_engine: matches the expression oracle and scales as expected") {
    EngineSpec e;  // 400 kPa, 700 rpm, 2.4 L, 4.3e7 J/kg, 4 cylinders
    const double expected = e.idle_mean_pressure * e.idle_speed * e.displacement /
                            (22164.0 * e.heating_value * static_cast<double>(e.cylinders));
    CHECK(alpha0_from_engine(e) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(1.7629e-4).epsilon(1e-3));

    EngineSpec half = e;
    half.cylinders = 2;
    CHECK(alpha0_from_engine(half) == doctest::Approx(2.0 * expected).epsilon(1e-12));

    EngineSpec hot = e;
    hot.idle_mean_pressure *= 3.0;
    CHECK(alpha0_from_engine(hot) == doctest::Approx(3.0 * expected).epsilon(1e-12));
}

TEST_CASE("calibrate_alphas: recovers coefficients that were used to build the summaries") {
    const double alpha0 = 6.0e-4, alpha1 = 3.5e-5, alpha2 = 2.0e-6;

    // Forward-construct two consistent cycle summaries from known coefficients.
    auto make_summary = [&](double duration, double p_sum, double p_sq_sum) {
        DriveCycleSummary s;
        s.duration = duration;
        s.power_sum = p_sum;
        s.power_sq_sum = p_sq_sum;
        s.total_fuel = alpha0 * duration + alpha1 * p_sum + alpha2 * p_sq_sum;
        return s;
    };
    const DriveCycleSummary city = make_summary(1200.0, 9000.0, 250000.0);
    const DriveCycleSummary highway = make_summary(900.0, 22000.0, 1500000.0);

    const FuelCoefficients got = calibrate_alphas(alpha0, city, highway, 1e-9);
    CHECK(got.alpha0 == doctest::Approx(alpha0).epsilon(1e-12));
    CHECK(got.alpha1 == doctest::Approx(alpha1).epsilon(1e-9));
    CHECK(got.alpha2 == doctest::Approx(alpha2).epsilon(1e-9));
}

TEST_CASE("calibrate_alphas: pins alpha2 to the floor when the solution dips below it") {
    // Build summaries whose exact alpha2 solution is negative.
    const double alpha0 = 6.0e-4;
    DriveCycleSummary city;
    city.duration = 1000.0;
    city.power_sum = 10000.0;
    city.power_sq_sum = 200000.0;
    city.total_fuel = alpha0 * city.duration + 5.0e-5 * city.power_sum - 1.0e-6 * city.power_sq_sum;
    DriveCycleSummary highway;
    highway.duration = 800.0;
    highway.power_sum = 24000.0;
    highway.power_sq_sum = 1300000.0;
    highway.total_fuel =
        alpha0 * highway.duration + 5.0e-5 * highway.power_sum - 1.0e-6 * highway.power_sq_sum;

    const FuelCoefficients got = calibrate_alphas(alpha0, city, highway, 1e-6);
    CHECK(got.alpha2 == doctest::Approx(1e-6).epsilon(1e-15));
    // alpha1 re-solved from the city equation with alpha2 at the floor.
    const double alpha1_expected =
        (city.total_fuel - alpha0 * city.duration - 1e-6 * city.power_sq_sum) / city.power_sum;
    CHECK(got.alpha1 == doctest::Approx(alpha1_expected).epsilon(1e-12));
}

TEST_CASE("calibrate_alphas: identical cycles make the system singular") {
    DriveCycleSummary s;
    s.duration = 1000.0;
    s.power_sum = 10000.0;
    s.power_sq_sum = 200000.0;
    s.total_fuel = 1.5;
    CHECK_THROWS_AS(calibrate_alphas(6.0e-4, s, s), std::runtime_error);
}

TEST_CASE("cycle_power_summary: counts only positive-power time, weighted by dt") {
    VehicleParams p;
    const double v = 20.0;
    FollowerTrajectory t = constant_cruise(v, 100.0);
    const DriveCycleSummary s = cycle_power_summary(t, p);
    const double v_kmh = v * kMpsToKmh;
    const double pw = power(v_kmh, 0.0, resistance(v_kmh, p), p);
    CHECK(s.duration == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(s.power_sum == doctest::Approx(pw * 100.0).epsilon(1e-9));
    CHECK(s.power_sq_sum == doctest::Approx(pw * pw * 100.0).epsilon(1e-9));
    CHECK(s.total_fuel == 0.0);

    // An idle trajectory contributes nothing to the power sums.
    const DriveCycleSummary idle = cycle_power_summary(constant_cruise(0.0, 50.0), p);
    CHECK(idle.power_sum == 0.0);
    CHECK(idle.power_sq_sum == 0.0);
}

TEST_CASE("vehicle_fixtures: both built-ins present with the published figures") {
    const auto& all = vehicle_fixtures();
    CHECK(all.size() == 2);

    const auto car = find_fixture("passenger_car");
    REQUIRE(car.has_value());
    CHECK(car->params.mass == doctest::Approx(1453.0));
    CHECK(car->params.drag_coeff == doctest::Approx(0.30));
    CHECK(car->params.frontal_area == doctest::Approx(2.32));
    CHECK(car->coeffs.alpha0 == doctest::Approx(5.9217e-4).epsilon(1e-9));
    CHECK(car->cylinders == 4);
    CHECK(car->city_mpg == doctest::Approx(22.0));
    CHECK(car->highway_mpg == doctest::Approx(31.0));

    const auto truck = find_fixture("light_duty_truck");
    REQUIRE(truck.has_value());
    CHECK(truck->params.mass == doctest::Approx(3152.0));
    CHECK(truck->params.drag_coeff == doctest::Approx(0.60));
    CHECK(truck->params.frontal_area == doctest::Approx(3.87));
    CHECK(truck->cylinders == 8);
    CHECK(truck->displacement_l == doctest::Approx(6.2));

    CHECK_FALSE(find_fixture("bicycle").has_value());
}

TEST_CASE("load_vehicle_config: round-trips a hand-written file and rejects unknown keys") {
    const fs::path p =
        fs::temp_directory_path() / ("fuelsim_vehicle_" + std::to_string(::getpid()) + ".ini");
    {
        std::ofstream out(p);
        out << "id = demo_car\n"
            << "mass = 1500\n"
            << "drag_coeff = 0.31\n"
            << "frontal_area = 2.4\n"
            << "alpha0 = 6.0e-4\n"
            << "alpha1 = 4.0e-5\n"
            << "alpha2 = 1.2e-6\n";
    }
    const VehicleModel m = load_vehicle_config(p.string());
    CHECK(m.id == "demo_car");
    CHECK(m.params.mass == doctest::Approx(1500.0));
    CHECK(m.params.drag_coeff == doctest::Approx(0.31));
    CHECK(m.params.frontal_area == doctest::Approx(2.4));
    CHECK(m.coeffs.alpha0 == doctest::Approx(6.0e-4));
    CHECK(m.coeffs.alpha1 == doctest::Approx(4.0e-5));
    CHECK(m.coeffs.alpha2 == doctest::Approx(1.2e-6));
    // Unspecified keys keep their defaults.
    CHECK(m.params.driveline_eff == doctest::Approx(0.92));

    {
        std::ofstream out(p);
        out << "mass = 1500\nwheel_count = 4\n";
    }
    CHECK_THROWS_AS(load_vehicle_config(p.string()), ConfigError);
    fs::remove(p);
}
