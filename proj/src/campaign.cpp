#include "fuelsim/campaign.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "fuelsim/errors.hpp"

namespace fuelsim {

namespace {

double sample_in(Rng& rng, const ParamRange& r) { return rng.uniform(r.lo, r.hi); }

double sample_normal_in(Rng& rng, const ParamRange& r) {
    const double mid = r.mid();
    const double sd = 0.1 * mid;
    for (;;) {
        const double x = rng.normal(mid, sd);
        if (x >= r.lo && x <= r.hi) return x;
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double to_double(const std::string& s, std::size_t row) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("campaign row " + std::to_string(row) + ": not a number: '" + s + "'");
    }
}

}  // namespace

DriverPreferences sample_uniform_prefs(Rng& rng, const PreferenceRanges& ranges) {
    DriverPreferences p;
    p.a_max = sample_in(rng, ranges.a_max);
    p.b_des = sample_in(rng, ranges.b_des);
    p.headway = sample_in(rng, ranges.headway);
    p.jam = sample_in(rng, ranges.jam);
    return p;
}

DriverPreferences sample_normal_prefs(Rng& rng, const PreferenceRanges& ranges) {
    DriverPreferences p;
    p.a_max = sample_normal_in(rng, ranges.a_max);
    p.b_des = sample_normal_in(rng, ranges.b_des);
    p.headway = sample_normal_in(rng, ranges.headway);
    p.jam = sample_normal_in(rng, ranges.jam);
    return p;
}

CampaignDataset run_campaign(const SpeedTrace& leader, const VehicleModel& vehicle,
                             const PreferenceRanges& ranges, std::size_t n,
                             std::uint64_t seed, const IdmConstants& constants,
                             SamplerKind sampler) {
    validate(leader);
    CampaignDataset ds;
    ds.records.reserve(n);
    ds.leader_summary = trip_stats(leader);
    ds.scenario_label = leader.label;
    ds.vehicle_id = vehicle.id;
    ds.seed = seed;

    for (std::size_t j = 0; j < n; ++j) {
        Rng rng(seed, j);
        SimulationRecord rec;
        rec.index = j;
        rec.prefs = sampler == SamplerKind::uniform ? sample_uniform_prefs(rng, ranges)
                                                    : sample_normal_prefs(rng, ranges);
        try {
            const FollowerTrajectory traj = simulate_follower(leader, rec.prefs, constants);
            rec.trip_fuel_l = trip_fuel(traj, vehicle.params, vehicle.coeffs);
            rec.trip_time_s = static_cast<double>(traj.speeds.size() - 1) * traj.dt;
            rec.trip_distance_m = traj.positions.back();
            rec.min_gap_m = traj.gaps.front();
            for (const double g : traj.gaps) {
                if (g < rec.min_gap_m) rec.min_gap_m = g;
            }
        } catch (const SimulationError&) {
            rec.flagged = true;
        }
        ds.records.push_back(rec);
    }
    return ds;
}

CampaignDataset filter_by_trip(const CampaignDataset& ds, double dist_tol, double time_tol,
                               FilterStats* stats) {
    FilterStats local;
    local.total = ds.records.size();

    CampaignDataset out;
    out.leader_summary = ds.leader_summary;
    out.scenario_label = ds.scenario_label;
    out.vehicle_id = ds.vehicle_id;
    out.seed = ds.seed;

    const double ref_dist = ds.leader_summary.distance;
    const double ref_time = ds.leader_summary.duration;
    for (const auto& rec : ds.records) {
        if (rec.flagged) {
            ++local.flagged;
            continue;
        }
        bool keep = true;
        if (dist_tol > 0.0 && ref_dist > 0.0 &&
            std::abs(rec.trip_distance_m - ref_dist) > dist_tol * ref_dist) {
            keep = false;
        }
        if (time_tol > 0.0 && ref_time > 0.0 &&
            std::abs(rec.trip_time_s - ref_time) > time_tol * ref_time) {
            keep = false;
        }
        if (keep) {
            out.records.push_back(rec);
        } else {
            ++local.out_of_tolerance;
        }
    }
    local.kept = out.records.size();
    if (stats != nullptr) *stats = local;
    if (out.records.empty()) {
        throw std::runtime_error("campaign filter removed every record");
    }
    return out;
}

void save_campaign(const CampaignDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << std::setprecision(17);
    out << "# scenario=" << ds.scenario_label << " vehicle=" << ds.vehicle_id
        << " seed=" << ds.seed << " leader_duration_s=" << ds.leader_summary.duration
        << " leader_distance_m=" << ds.leader_summary.distance
        << " leader_mean_speed_mps=" << ds.leader_summary.mean_speed
        << " leader_stops=" << ds.leader_summary.stop_count << "\n";
    out << "j,a,b,T,s0,fuel_L,dist_m,time_s,min_gap_m,flag\n";
    for (const auto& r : ds.records) {
        out << r.index << ',' << r.prefs.a_max << ',' << r.prefs.b_des << ','
            << r.prefs.headway << ',' << r.prefs.jam << ',' << r.trip_fuel_l << ','
            << r.trip_distance_m << ',' << r.trip_time_s << ',' << r.min_gap_m << ','
            << (r.flagged ? 1 : 0) << "\n";
    }
}

CampaignDataset load_campaign(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open campaign file '" + path + "'");

    CampaignDataset ds;
    std::string line;
    std::size_t row = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string token;
            while (meta >> token) {
                const std::size_t eq = token.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = token.substr(0, eq);
                const std::string value = token.substr(eq + 1);
                if (key == "scenario") ds.scenario_label = value;
                else if (key == "vehicle") ds.vehicle_id = value;
                else if (key == "seed") ds.seed = std::stoull(value);
                else if (key == "leader_duration_s") ds.leader_summary.duration = std::stod(value);
                else if (key == "leader_distance_m") ds.leader_summary.distance = std::stod(value);
                else if (key == "leader_mean_speed_mps") ds.leader_summary.mean_speed = std::stod(value);
                else if (key == "leader_stops") ds.leader_summary.stop_count = std::stoul(value);
            }
            continue;
        }
        if (!saw_header) {
            if (line != "j,a,b,T,s0,fuel_L,dist_m,time_s,min_gap_m,flag") {
                throw ParseError("campaign file '" + path + "': unexpected header '" + line + "'");
            }
            saw_header = true;
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != 10) {
            throw ParseError("campaign row " + std::to_string(row) + ": expected 10 columns, got " +
                             std::to_string(fields.size()));
        }
        SimulationRecord rec;
        rec.index = static_cast<std::size_t>(to_double(fields[0], row));
        rec.prefs.a_max = to_double(fields[1], row);
        rec.prefs.b_des = to_double(fields[2], row);
        rec.prefs.headway = to_double(fields[3], row);
        rec.prefs.jam = to_double(fields[4], row);
        rec.trip_fuel_l = to_double(fields[5], row);
        rec.trip_distance_m = to_double(fields[6], row);
        rec.trip_time_s = to_double(fields[7], row);
        rec.min_gap_m = to_double(fields[8], row);
        rec.flagged = to_double(fields[9], row) != 0.0;
        ds.records.push_back(rec);
    }
    if (!saw_header) throw ParseError("campaign file '" + path + "': missing header");
    return ds;
}

}  // namespace fuelsim
