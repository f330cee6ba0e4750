#include "fuelsim/energy.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fuelsim/errors.hpp"

namespace fuelsim {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_number(const std::string& text, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("vehicle config: value for '" + key + "' is not a number: '" + text + "'");
    }
}

}  // namespace

double resistance(double v_kmh, const VehicleParams& p) {
    const double aero = (p.air_density / 25.92) * p.drag_coeff * p.altitude_corr *
                        p.frontal_area * v_kmh * v_kmh;
    const double rolling = p.mass * p.gravity * (p.rolling_coeff / 1000.0) *
                           (p.c1 * v_kmh + p.c2);
    const double grade = p.mass * p.gravity * p.grade;
    return aero + rolling + grade;
}

double power(double v_kmh, double accel, double resistance_n, const VehicleParams& p) {
    return (resistance_n + 1.04 * p.mass * accel) * v_kmh / (3600.0 * p.driveline_eff);
}

double fuel_rate(double power_kw, const FuelCoefficients& c) {
    if (power_kw <= 0.0) return c.alpha0;
    return c.alpha0 + c.alpha1 * power_kw + c.alpha2 * power_kw * power_kw;
}

double trip_fuel(const FollowerTrajectory& traj, const VehicleParams& p,
                 const FuelCoefficients& c) {
    if (traj.speeds.size() < 2) return 0.0;
    double litres = 0.0;
    for (std::size_t k = 0; k + 1 < traj.speeds.size(); ++k) {
        const double v_kmh = traj.speeds[k] * kMpsToKmh;
        const double r = resistance(v_kmh, p);
        const double pw = power(v_kmh, traj.accels[k], r, p);
        litres += fuel_rate(pw, c) * traj.dt;
    }
    return litres;
}

double alpha0_from_engine(const EngineSpec& e) {
    return e.idle_mean_pressure * e.idle_speed * e.displacement /
           (22164.0 * e.heating_value * e.cylinders);
}

FuelCoefficients calibrate_alphas(double alpha0, const DriveCycleSummary& city,
                                  const DriveCycleSummary& highway, double alpha2_floor) {
    // Each cycle contributes  F - alpha0*T = alpha1*S1 + alpha2*S2  with
    // S1 = integral of positive power, S2 = integral of its square.
    const double rc = city.total_fuel - alpha0 * city.duration;
    const double rh = highway.total_fuel - alpha0 * highway.duration;
    const double det = city.power_sum * highway.power_sq_sum -
                       highway.power_sum * city.power_sq_sum;
    const double scale = std::abs(city.power_sum * highway.power_sq_sum) +
                         std::abs(highway.power_sum * city.power_sq_sum);
    if (scale == 0.0 || std::abs(det) < 1e-12 * scale) {
        throw std::runtime_error("fuel calibration: cycle equations are singular");
    }
    FuelCoefficients out;
    out.alpha0 = alpha0;
    out.alpha2 = (rc * highway.power_sum - rh * city.power_sum) / -det;
    out.alpha1 = (rc * highway.power_sq_sum - rh * city.power_sq_sum) / det;
    if (out.alpha2 < alpha2_floor) {
        out.alpha2 = alpha2_floor;
        if (city.power_sum == 0.0) {
            throw std::runtime_error("fuel calibration: city cycle has no positive power");
        }
        out.alpha1 = (rc - alpha2_floor * city.power_sq_sum) / city.power_sum;
    }
    return out;
}

DriveCycleSummary cycle_power_summary(const FollowerTrajectory& traj, const VehicleParams& p) {
    DriveCycleSummary s;
    if (traj.speeds.size() < 2) return s;
    s.duration = static_cast<double>(traj.speeds.size() - 1) * traj.dt;
    for (std::size_t k = 0; k + 1 < traj.speeds.size(); ++k) {
        const double v_kmh = traj.speeds[k] * kMpsToKmh;
        const double pw = power(v_kmh, traj.accels[k], resistance(v_kmh, p), p);
        if (pw > 0.0) {
            s.power_sum += pw * traj.dt;
            s.power_sq_sum += pw * pw * traj.dt;
        }
    }
    return s;
}

const std::vector<VehicleFixture>& vehicle_fixtures() {
    static const std::vector<VehicleFixture> fixtures = [] {
        std::vector<VehicleFixture> v;

        VehicleFixture car;
        car.name = "passenger_car";
        car.params.mass = 1453.0;
        car.params.drag_coeff = 0.30;
        car.params.frontal_area = 2.32;
        car.coeffs = {5.9217e-4, 4.2378e-5, 1e-6};
        car.cylinders = 4;
        car.displacement_l = 2.4;
        car.city_mpg = 22.0;
        car.highway_mpg = 31.0;
        v.push_back(car);

        VehicleFixture truck;
        truck.name = "light_duty_truck";
        truck.params.mass = 3152.0;
        truck.params.drag_coeff = 0.60;
        truck.params.frontal_area = 3.87;
        truck.coeffs = {7.7984e-4, 1.9556e-5, 1e-6};
        truck.cylinders = 8;
        truck.displacement_l = 6.2;
        truck.city_mpg = 12.0;
        truck.highway_mpg = 16.0;
        v.push_back(truck);

        return v;
    }();
    return fixtures;
}

std::optional<VehicleFixture> find_fixture(const std::string& name) {
    for (const auto& f : vehicle_fixtures()) {
        if (f.name == name) return f;
    }
    return std::nullopt;
}

VehicleModel load_vehicle_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("vehicle config: cannot open '" + path + "'");

    VehicleModel model;
    model.id = path;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("vehicle config: line " + std::to_string(lineno) +
                              " is not 'key = value'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key == "id") {
            model.id = value;
            continue;
        }
        const double num = parse_number(value, key);
        if (key == "mass") model.params.mass = num;
        else if (key == "drag_coeff") model.params.drag_coeff = num;
        else if (key == "altitude_corr") model.params.altitude_corr = num;
        else if (key == "frontal_area") model.params.frontal_area = num;
        else if (key == "air_density") model.params.air_density = num;
        else if (key == "rolling_coeff") model.params.rolling_coeff = num;
        else if (key == "c1") model.params.c1 = num;
        else if (key == "c2") model.params.c2 = num;
        else if (key == "driveline_eff") model.params.driveline_eff = num;
        else if (key == "gravity") model.params.gravity = num;
        else if (key == "grade") model.params.grade = num;
        else if (key == "alpha0") model.coeffs.alpha0 = num;
        else if (key == "alpha1") model.coeffs.alpha1 = num;
        else if (key == "alpha2") model.coeffs.alpha2 = num;
        else {
            throw ConfigError("vehicle config: unknown key '" + key + "' on line " +
                              std::to_string(lineno));
        }
    }
    if (model.params.mass <= 0.0 || model.params.driveline_eff <= 0.0) {
        throw ConfigError("vehicle config: mass and driveline_eff must be positive");
    }
    return model;
}

}  // namespace fuelsim
