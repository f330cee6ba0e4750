#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fuelsim/campaign.hpp"
#include "fuelsim/gpr.hpp"
#include "fuelsim/stats.hpp"

namespace fuelsim {

inline constexpr const char* kToolVersion = "1.0.0";

enum class ScenarioKind { highway, local, file };

/// Leader-trace source: a synthetic generator or a CSV on disk.
struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::highway;
    double duration = 1200.0;  // s, generators only
    double dt = 0.1;           // s
    double cruise = 32.0;      // m/s, highway generator
    double top_speed = 15.0;   // m/s, local generator
    std::size_t stops = 24;    // local generator
    std::string path;          // kind == file
};

struct CampaignConfig {
    std::size_t n = 1000;
    std::uint64_t seed = 10;
    SamplerKind sampler = SamplerKind::uniform;
    double dist_tol = 0.05;  // relative trip-distance filter (0 disables)
    double time_tol = 0.0;   // relative trip-time filter (0 disables)
};

struct AnalysisConfig {
    std::size_t permutations = 999;
    std::size_t bins = 20;
    std::size_t folds = 5;
    std::size_t restarts = 8;
    double p_threshold = 0.05;
    std::size_t test_n = 1000;
    std::size_t train_cap = 600;  // regression rows kept after filtering
    std::size_t convergence_stride = 200;
};

struct PipelineConfig {
    ScenarioConfig scenario;
    std::string vehicle_fixture = "passenger_car";
    std::string vehicle_config_path;  // non-empty overrides the fixture
    std::optional<double> idm_v0;     // m/s; defaults by scenario kind
    double idm_delta = 4.0;
    CampaignConfig campaign;
    AnalysisConfig analysis;
    std::string out_dir = "out";
};

/// Sectioned key-value config file ([scenario], [vehicle], [idm],
/// [campaign], [analysis], [output]); unknown sections or keys are
/// configuration errors.
PipelineConfig parse_config_file(const std::string& path);

/// Canonical text form of a config: every key in fixed order, parseable by
/// parse_config_file. Manifests embed it; the fingerprint hashes it.
std::string serialize_config(const PipelineConfig& cfg);
std::uint64_t config_fingerprint(const PipelineConfig& cfg);

VehicleModel resolve_vehicle(const PipelineConfig& cfg);
IdmConstants resolve_idm(const PipelineConfig& cfg);
SpeedTrace make_leader(const ScenarioConfig& sc, std::uint64_t seed);

struct SimulateReport {
    std::string campaign_path;
    std::size_t rows = 0;
    std::size_t flagged = 0;
};

struct AnalyzeReport {
    std::array<DcorrResult, 4> dcorr;  // aligned with kAllPrefParams
    QuinticModel quintic;
    GoodnessOfFit linear;
    double spread_pct = 0.0;
    FilterStats filter;
};

struct PredictReport {
    CvReport cv;
    GoodnessOfFit quintic_capped;  // same rows the GPR was given
    GoodnessOfFit test;
    double kl_nats = 0.0;
    double kl_self_nats = 0.0;
    std::vector<std::string> features;
    std::size_t n_train = 0;
};

/// Writes leader.csv, campaign.csv, follower_sample.csv and a manifest to
/// the config's output directory.
SimulateReport cmd_simulate(const PipelineConfig& cfg);

/// Reads a campaign CSV, filters it, and writes dcorr.csv, convergence.csv,
/// fit_report.csv, quintic_coeffs.csv, fuel_vs_a.csv and a manifest.
AnalyzeReport cmd_analyze(const PipelineConfig& cfg, const std::string& campaign_path);

/// Trains a GPR on the campaign (features chosen by significance), writes
/// cv_report.csv, model.txt, pred_vs_obs.csv, hist_pair.csv, report.csv and
/// a manifest. With an empty test path the test set is a fresh campaign
/// sampled with the normal sampler.
PredictReport cmd_predict(const PipelineConfig& cfg, const std::string& train_path,
                          const std::string& test_path = "");

/// Runs the four scenario x vehicle cells end-to-end under the base
/// config's output directory and writes summary.csv.
void run_demo(const PipelineConfig& base);

/// Peak-to-trough spread of binned mean fuel along the a axis, as a
/// percentage of the overall mean fuel.
double binned_spread_pct(const CampaignDataset& ds, std::size_t bins);

}  // namespace fuelsim
