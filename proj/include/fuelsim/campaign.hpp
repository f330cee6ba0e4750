#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fuelsim/energy.hpp"
#include "fuelsim/idm.hpp"
#include "fuelsim/rng.hpp"
#include "fuelsim/trace.hpp"

namespace fuelsim {

struct ParamRange {
    double lo = 0.0;
    double hi = 1.0;
    double mid() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
};

/// Sampling box for the four car-following preferences.
struct PreferenceRanges {
    ParamRange a_max{0.2, 2.0};   // m/s^2
    ParamRange b_des{1.0, 3.0};   // m/s^2
    ParamRange headway{0.8, 2.0}; // s
    ParamRange jam{1.0, 3.0};     // m
};

enum class SamplerKind { uniform, normal };

/// Independent uniform draws over each range, in field order.
DriverPreferences sample_uniform_prefs(Rng& rng, const PreferenceRanges& ranges);

/// Independent normal draws centred on each range midpoint with standard
/// deviation 10% of the midpoint, resampled until inside the range.
DriverPreferences sample_normal_prefs(Rng& rng, const PreferenceRanges& ranges);

/// One Monte Carlo follower run: sampled preferences plus trip outcomes.
/// flagged marks runs that collided or crawled (rejected before analysis).
struct SimulationRecord {
    std::size_t index = 0;
    DriverPreferences prefs;
    double trip_fuel_l = 0.0;
    double trip_distance_m = 0.0;
    double trip_time_s = 0.0;
    double min_gap_m = 0.0;
    bool flagged = false;
};

struct CampaignDataset {
    std::vector<SimulationRecord> records;
    TripSummary leader_summary;
    std::string scenario_label;
    std::string vehicle_id;
    std::uint64_t seed = 0;
};

/// Runs n follower simulations against one leader trace. Iteration j uses
/// its own stream Rng(seed, j) so records are independent of n and of any
/// later parallel split.
CampaignDataset run_campaign(const SpeedTrace& leader, const VehicleModel& vehicle,
                             const PreferenceRanges& ranges, std::size_t n,
                             std::uint64_t seed, const IdmConstants& constants,
                             SamplerKind sampler = SamplerKind::uniform);

struct FilterStats {
    std::size_t total = 0;
    std::size_t flagged = 0;
    std::size_t out_of_tolerance = 0;
    std::size_t kept = 0;
};

/// Drops flagged records and records whose trip distance (and optionally
/// trip time) strays more than the given relative tolerance from the
/// leader's. Throws std::runtime_error when nothing survives.
CampaignDataset filter_by_trip(const CampaignDataset& ds, double dist_tol,
                               double time_tol, FilterStats* stats = nullptr);

/// Campaign CSV: one '#' metadata line, a header, then one row per record.
void save_campaign(const CampaignDataset& ds, const std::string& path);
CampaignDataset load_campaign(const std::string& path);

}  // namespace fuelsim
