#include "fuelsim/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include "fuelsim/errors.hpp"
#include "fuelsim/idm.hpp"
#include "fuelsim/rng.hpp"

namespace fs = std::filesystem;

namespace fuelsim {

namespace {

// Sub-seed streams hung off the campaign seed, so the trace, the Monte
// Carlo draws, the permutations and the GPR search never share an engine.
constexpr std::uint64_t kStreamTraceHighway = 1000;
constexpr std::uint64_t kStreamTraceLocal = 1001;
constexpr std::uint64_t kStreamCampaign = 2000;
constexpr std::uint64_t kStreamTest = 3000;
constexpr std::uint64_t kStreamPermutations = 4000;
constexpr std::uint64_t kStreamCv = 5000;
constexpr std::uint64_t kStreamTrainFinal = 5001;
constexpr std::uint64_t kStreamTrainCap = 5002;

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& text, const std::string& key, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config line " + std::to_string(line) + ": value for '" + key +
                          "' is not a number: '" + text + "'");
    }
}

std::uint64_t parse_count(const std::string& text, const std::string& key, std::size_t line) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(text, &pos);
        if (pos != text.size() || v < 0) throw std::invalid_argument(text);
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config line " + std::to_string(line) + ": value for '" + key +
                          "' is not a non-negative integer: '" + text + "'");
    }
}

const char* scenario_kind_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::highway: return "highway";
        case ScenarioKind::local: return "local";
        case ScenarioKind::file: return "file";
    }
    return "?";
}

const char* sampler_name(SamplerKind k) {
    return k == SamplerKind::uniform ? "uniform" : "normal";
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << std::setprecision(17);
    return out;
}

void write_manifest(const PipelineConfig& cfg, const std::string& command) {
    auto out = open_out(fs::path(cfg.out_dir) / ("manifest_" + command + ".txt"));
    out << "tool fuelsim " << kToolVersion << "\n";
    out << "command " << command << "\n";
    out << "seed " << cfg.campaign.seed << "\n";
    out << "config_hash " << std::hex << std::setw(16) << std::setfill('0')
        << config_fingerprint(cfg) << std::dec << "\n";
    out << "config:\n" << serialize_config(cfg);
}

PreferenceRanges default_ranges() { return PreferenceRanges{}; }

DriverPreferences midpoint_prefs(const PreferenceRanges& r) {
    DriverPreferences p;
    p.a_max = r.a_max.mid();
    p.b_des = r.b_des.mid();
    p.headway = r.headway.mid();
    p.jam = r.jam.mid();
    return p;
}

std::uint64_t trace_stream(const ScenarioConfig& sc) {
    return sc.kind == ScenarioKind::local ? kStreamTraceLocal : kStreamTraceHighway;
}

CampaignDataset filtered(const PipelineConfig& cfg, const CampaignDataset& raw,
                         FilterStats* stats) {
    return filter_by_trip(raw, cfg.campaign.dist_tol, cfg.campaign.time_tol, stats);
}

/// Deterministic row cap: shuffled record indices, first `cap` kept.
std::vector<std::size_t> capped_indices(std::size_t n, std::size_t cap, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (cap == 0 || cap >= n) return idx;
    Rng rng(seed, 0);
    rng.shuffle(idx);
    idx.resize(cap);
    return idx;
}

struct CellSpec {
    const char* name;
    ScenarioKind kind;
    const char* vehicle;
    double duration;
};

}  // namespace

PipelineConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");

    PipelineConfig cfg;
    std::string section;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']') {
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated section header");
            }
            section = trim(stripped.substr(1, stripped.size() - 2));
            if (section != "scenario" && section != "vehicle" && section != "idm" &&
                section != "campaign" && section != "analysis" && section != "output") {
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unknown section [" + section + "]");
            }
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        auto unknown = [&]() {
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key +
                              "' in section [" + section + "]");
        };

        if (section == "scenario") {
            if (key == "kind") {
                if (value == "highway") cfg.scenario.kind = ScenarioKind::highway;
                else if (value == "local") cfg.scenario.kind = ScenarioKind::local;
                else if (value == "file") cfg.scenario.kind = ScenarioKind::file;
                else throw ConfigError("config line " + std::to_string(lineno) +
                                       ": scenario kind must be highway, local, or file");
            } else if (key == "duration") cfg.scenario.duration = parse_double(value, key, lineno);
            else if (key == "dt") cfg.scenario.dt = parse_double(value, key, lineno);
            else if (key == "cruise") cfg.scenario.cruise = parse_double(value, key, lineno);
            else if (key == "top_speed") cfg.scenario.top_speed = parse_double(value, key, lineno);
            else if (key == "stops") cfg.scenario.stops = parse_count(value, key, lineno);
            else if (key == "path") cfg.scenario.path = value;
            else unknown();
        } else if (section == "vehicle") {
            if (key == "fixture") cfg.vehicle_fixture = value;
            else if (key == "config") cfg.vehicle_config_path = value;
            else unknown();
        } else if (section == "idm") {
            if (key == "v0") cfg.idm_v0 = parse_double(value, key, lineno);
            else if (key == "delta") cfg.idm_delta = parse_double(value, key, lineno);
            else unknown();
        } else if (section == "campaign") {
            if (key == "n") cfg.campaign.n = parse_count(value, key, lineno);
            else if (key == "seed") cfg.campaign.seed = parse_count(value, key, lineno);
            else if (key == "sampler") {
                if (value == "uniform") cfg.campaign.sampler = SamplerKind::uniform;
                else if (value == "normal") cfg.campaign.sampler = SamplerKind::normal;
                else throw ConfigError("config line " + std::to_string(lineno) +
                                       ": sampler must be uniform or normal");
            } else if (key == "dist_tol") cfg.campaign.dist_tol = parse_double(value, key, lineno);
            else if (key == "time_tol") cfg.campaign.time_tol = parse_double(value, key, lineno);
            else unknown();
        } else if (section == "analysis") {
            if (key == "permutations") cfg.analysis.permutations = parse_count(value, key, lineno);
            else if (key == "bins") cfg.analysis.bins = parse_count(value, key, lineno);
            else if (key == "folds") cfg.analysis.folds = parse_count(value, key, lineno);
            else if (key == "restarts") cfg.analysis.restarts = parse_count(value, key, lineno);
            else if (key == "p_threshold") cfg.analysis.p_threshold = parse_double(value, key, lineno);
            else if (key == "test_n") cfg.analysis.test_n = parse_count(value, key, lineno);
            else if (key == "train_cap") cfg.analysis.train_cap = parse_count(value, key, lineno);
            else if (key == "convergence_stride")
                cfg.analysis.convergence_stride = parse_count(value, key, lineno);
            else unknown();
        } else if (section == "output") {
            if (key == "dir") cfg.out_dir = value;
            else unknown();
        } else {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": key '" + key + "' outside any section");
        }
    }
    if (cfg.campaign.n < 1) throw ConfigError("config: campaign n must be at least 1");
    if (cfg.scenario.kind == ScenarioKind::file && cfg.scenario.path.empty()) {
        throw ConfigError("config: scenario kind 'file' requires a path");
    }
    return cfg;
}

std::string serialize_config(const PipelineConfig& cfg) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "[scenario]\n";
    out << "kind = " << scenario_kind_name(cfg.scenario.kind) << "\n";
    out << "duration = " << cfg.scenario.duration << "\n";
    out << "dt = " << cfg.scenario.dt << "\n";
    out << "cruise = " << cfg.scenario.cruise << "\n";
    out << "top_speed = " << cfg.scenario.top_speed << "\n";
    out << "stops = " << cfg.scenario.stops << "\n";
    if (!cfg.scenario.path.empty()) out << "path = " << cfg.scenario.path << "\n";
    out << "[vehicle]\n";
    out << "fixture = " << cfg.vehicle_fixture << "\n";
    if (!cfg.vehicle_config_path.empty()) out << "config = " << cfg.vehicle_config_path << "\n";
    out << "[idm]\n";
    if (cfg.idm_v0) out << "v0 = " << *cfg.idm_v0 << "\n";
    out << "delta = " << cfg.idm_delta << "\n";
    out << "[campaign]\n";
    out << "n = " << cfg.campaign.n << "\n";
    out << "seed = " << cfg.campaign.seed << "\n";
    out << "sampler = " << sampler_name(cfg.campaign.sampler) << "\n";
    out << "dist_tol = " << cfg.campaign.dist_tol << "\n";
    out << "time_tol = " << cfg.campaign.time_tol << "\n";
    out << "[analysis]\n";
    out << "permutations = " << cfg.analysis.permutations << "\n";
    out << "bins = " << cfg.analysis.bins << "\n";
    out << "folds = " << cfg.analysis.folds << "\n";
    out << "restarts = " << cfg.analysis.restarts << "\n";
    out << "p_threshold = " << cfg.analysis.p_threshold << "\n";
    out << "test_n = " << cfg.analysis.test_n << "\n";
    out << "train_cap = " << cfg.analysis.train_cap << "\n";
    out << "convergence_stride = " << cfg.analysis.convergence_stride << "\n";
    out << "[output]\n";
    out << "dir = " << cfg.out_dir << "\n";
    return out.str();
}

std::uint64_t config_fingerprint(const PipelineConfig& cfg) {
    const std::string text = serialize_config(cfg);
    std::uint64_t hash = 14695981039346656037ULL;
    for (const unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

VehicleModel resolve_vehicle(const PipelineConfig& cfg) {
    if (!cfg.vehicle_config_path.empty()) {
        return load_vehicle_config(cfg.vehicle_config_path);
    }
    const auto fixture = find_fixture(cfg.vehicle_fixture);
    if (!fixture) {
        throw ConfigError("unknown vehicle '" + cfg.vehicle_fixture + "'");
    }
    VehicleModel m;
    m.id = fixture->name;
    m.params = fixture->params;
    m.coeffs = fixture->coeffs;
    return m;
}

IdmConstants resolve_idm(const PipelineConfig& cfg) {
    IdmConstants c;
    c.delta = cfg.idm_delta;
    if (cfg.idm_v0) {
        c.v0 = *cfg.idm_v0;
    } else {
        c.v0 = cfg.scenario.kind == ScenarioKind::local ? kLocalV0 : kHighwayV0;
    }
    return c;
}

SpeedTrace make_leader(const ScenarioConfig& sc, std::uint64_t seed) {
    switch (sc.kind) {
        case ScenarioKind::highway:
            return gen_highway(sc.duration, sc.dt, sc.cruise, seed);
        case ScenarioKind::local:
            return gen_local(sc.duration, sc.dt, sc.top_speed, static_cast<int>(sc.stops), seed);
        case ScenarioKind::file:
            return load_trace(sc.path, sc.dt);
    }
    throw ConfigError("unknown scenario kind");
}

SimulateReport cmd_simulate(const PipelineConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const VehicleModel vehicle = resolve_vehicle(cfg);
    const IdmConstants idm = resolve_idm(cfg);
    const std::uint64_t root = cfg.campaign.seed;

    const SpeedTrace leader = make_leader(cfg.scenario, derive_seed(root, trace_stream(cfg.scenario)));
    save_trace(leader, (fs::path(cfg.out_dir) / "leader.csv").string());

    const CampaignDataset campaign =
        run_campaign(leader, vehicle, default_ranges(), cfg.campaign.n,
                     derive_seed(root, kStreamCampaign), idm, cfg.campaign.sampler);
    SimulateReport rep;
    rep.campaign_path = (fs::path(cfg.out_dir) / "campaign.csv").string();
    save_campaign(campaign, rep.campaign_path);
    rep.rows = campaign.records.size();
    for (const auto& r : campaign.records) {
        if (r.flagged) ++rep.flagged;
    }

    const FollowerTrajectory sample =
        simulate_follower(leader, midpoint_prefs(default_ranges()), idm);
    save_trajectory(sample, (fs::path(cfg.out_dir) / "follower_sample.csv").string());

    write_manifest(cfg, "simulate");
    std::cout << "simulate: " << rep.rows << " runs (" << rep.flagged << " flagged) -> "
              << cfg.out_dir << "\n";
    return rep;
}

AnalyzeReport cmd_analyze(const PipelineConfig& cfg, const std::string& campaign_path) {
    fs::create_directories(cfg.out_dir);
    const CampaignDataset raw = load_campaign(campaign_path);
    AnalyzeReport rep;
    const CampaignDataset ds = filtered(cfg, raw, &rep.filter);
    const std::uint64_t root = cfg.campaign.seed;

    rep.dcorr = dcorr_permutation_p_multi(ds, cfg.analysis.permutations,
                                          derive_seed(root, kStreamPermutations));
    {
        auto out = open_out(fs::path(cfg.out_dir) / "dcorr.csv");
        out << "traffic,param,r,p\n";
        for (std::size_t k = 0; k < kAllPrefParams.size(); ++k) {
            out << ds.scenario_label << ',' << pref_param_name(kAllPrefParams[k]) << ','
                << rep.dcorr[k].r << ',' << rep.dcorr[k].p_value << "\n";
        }
    }
    {
        auto out = open_out(fs::path(cfg.out_dir) / "convergence.csv");
        out << "param,n,r\n";
        for (const PrefParam param : kAllPrefParams) {
            const auto series = dcorr_convergence(ds, param, cfg.analysis.convergence_stride);
            for (const auto& point : series) {
                out << pref_param_name(param) << ',' << point.n << ',' << point.r << "\n";
            }
        }
    }

    std::vector<double> a_col;
    std::vector<double> fuel_col;
    a_col.reserve(ds.records.size());
    fuel_col.reserve(ds.records.size());
    for (const auto& r : ds.records) {
        a_col.push_back(r.prefs.a_max);
        fuel_col.push_back(r.trip_fuel_l);
    }
    rep.quintic = fit_quintic(a_col, fuel_col);
    {
        const std::vector<double> line = fit_poly(a_col, fuel_col, 1);
        std::vector<double> pred;
        pred.reserve(a_col.size());
        for (const double a : a_col) pred.push_back(line[0] * a + line[1]);
        rep.linear = goodness(fuel_col, pred);
    }
    rep.spread_pct = binned_spread_pct(ds, 10);

    {
        auto out = open_out(fs::path(cfg.out_dir) / "fit_report.csv");
        out << "traffic,vehicle,model,r_square,rmse_L\n";
        out << ds.scenario_label << ',' << ds.vehicle_id << ",quintic," << rep.quintic.r_square
            << ',' << rep.quintic.rmse << "\n";
        out << ds.scenario_label << ',' << ds.vehicle_id << ",linear," << rep.linear.r_square
            << ',' << rep.linear.rmse << "\n";
    }
    {
        auto out = open_out(fs::path(cfg.out_dir) / "quintic_coeffs.csv");
        out << "z1,z2,z3,z4,z5,z6\n";
        for (std::size_t i = 0; i < rep.quintic.z.size(); ++i) {
            out << (i > 0 ? "," : "") << rep.quintic.z[i];
        }
        out << "\n";
    }
    {
        auto out = open_out(fs::path(cfg.out_dir) / "fuel_vs_a.csv");
        out << "a,fuel_L\n";
        for (const auto& r : ds.records) {
            out << r.prefs.a_max << ',' << r.trip_fuel_l << "\n";
        }
    }

    write_manifest(cfg, "analyze");
    std::cout << "analyze: kept " << rep.filter.kept << " of " << rep.filter.total << " ("
              << rep.filter.flagged << " flagged, " << rep.filter.out_of_tolerance
              << " out of tolerance) -> " << cfg.out_dir << "\n";
    return rep;
}

PredictReport cmd_predict(const PipelineConfig& cfg, const std::string& train_path,
                          const std::string& test_path) {
    fs::create_directories(cfg.out_dir);
    const std::uint64_t root = cfg.campaign.seed;
    const CampaignDataset train_raw = load_campaign(train_path);
    FilterStats train_filter;
    const CampaignDataset train_ds = filtered(cfg, train_raw, &train_filter);

    const auto dcorr = dcorr_permutation_p_multi(train_ds, cfg.analysis.permutations,
                                                 derive_seed(root, kStreamPermutations));
    const std::array<bool, 4> mask = select_features(dcorr, cfg.analysis.p_threshold);

    PredictReport rep;
    rep.features = masked_feature_names(mask);

    const Eigen::MatrixXd x_full = feature_matrix(train_ds, mask);
    const Eigen::VectorXd y_full = fuel_vector(train_ds);
    const auto rows = capped_indices(train_ds.records.size(), cfg.analysis.train_cap,
                                     derive_seed(root, kStreamTrainCap));
    Eigen::MatrixXd x_cap(static_cast<Eigen::Index>(rows.size()), x_full.cols());
    Eigen::VectorXd y_cap(static_cast<Eigen::Index>(rows.size()));
    std::vector<double> a_cap;
    std::vector<double> fuel_cap;
    a_cap.reserve(rows.size());
    fuel_cap.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = static_cast<Eigen::Index>(rows[i]);
        x_cap.row(static_cast<Eigen::Index>(i)) = x_full.row(src);
        y_cap(static_cast<Eigen::Index>(i)) = y_full(src);
        a_cap.push_back(train_ds.records[rows[i]].prefs.a_max);
        fuel_cap.push_back(train_ds.records[rows[i]].trip_fuel_l);
    }
    rep.n_train = rows.size();

    GprOptions opts;
    opts.restarts = cfg.analysis.restarts;
    opts.jitter = 1e-8;
    rep.cv = cross_validate(x_cap, y_cap, cfg.analysis.folds, derive_seed(root, kStreamCv), opts);

    const QuinticModel quintic = fit_quintic(a_cap, fuel_cap);
    rep.quintic_capped = {quintic.r_square, quintic.rmse};

    {
        auto out = open_out(fs::path(cfg.out_dir) / "cv_report.csv");
        out << "traffic,vehicle,fold,r_square,rmse_L\n";
        for (std::size_t f = 0; f < rep.cv.per_fold.size(); ++f) {
            out << train_ds.scenario_label << ',' << train_ds.vehicle_id << ',' << (f + 1) << ','
                << rep.cv.per_fold[f].r_square << ',' << rep.cv.per_fold[f].rmse << "\n";
        }
        out << train_ds.scenario_label << ',' << train_ds.vehicle_id << ",pooled,"
            << rep.cv.pooled.r_square << ',' << rep.cv.pooled.rmse << "\n";
        out << train_ds.scenario_label << ',' << train_ds.vehicle_id << ",quintic,"
            << rep.quintic_capped.r_square << ',' << rep.quintic_capped.rmse << "\n";
    }

    GprOptions final_opts = opts;
    final_opts.seed = derive_seed(root, kStreamTrainFinal);
    const GprModel model = train(x_cap, y_cap, final_opts, rep.features);
    save_model(model, (fs::path(cfg.out_dir) / "model.txt").string());

    CampaignDataset test_raw;
    if (test_path.empty()) {
        const VehicleModel vehicle = resolve_vehicle(cfg);
        const IdmConstants idm = resolve_idm(cfg);
        const SpeedTrace leader =
            make_leader(cfg.scenario, derive_seed(root, trace_stream(cfg.scenario)));
        test_raw = run_campaign(leader, vehicle, default_ranges(), cfg.analysis.test_n,
                                derive_seed(root, kStreamTest), idm, SamplerKind::normal);
    } else {
        test_raw = load_campaign(test_path);
    }
    const CampaignDataset test_ds = filtered(cfg, test_raw, nullptr);

    const Eigen::MatrixXd x_test = feature_matrix(test_ds, mask);
    const Eigen::VectorXd pred = predict(model, x_test);
    std::vector<double> obs;
    std::vector<double> est;
    obs.reserve(test_ds.records.size());
    est.reserve(test_ds.records.size());
    for (std::size_t i = 0; i < test_ds.records.size(); ++i) {
        obs.push_back(test_ds.records[i].trip_fuel_l);
        est.push_back(pred(static_cast<Eigen::Index>(i)));
    }
    rep.test = goodness(obs, est);

    const double lo = std::min(*std::min_element(obs.begin(), obs.end()),
                               *std::min_element(est.begin(), est.end()));
    const double hi = std::max(*std::max_element(obs.begin(), obs.end()),
                               *std::max_element(est.begin(), est.end()));
    const Histogram h_obs = histogram(obs, cfg.analysis.bins, lo, hi);
    const Histogram h_est = histogram(est, cfg.analysis.bins, lo, hi);
    rep.kl_nats = kl_divergence(h_obs, h_est);
    rep.kl_self_nats = kl_divergence(h_obs, h_obs);

    {
        auto out = open_out(fs::path(cfg.out_dir) / "pred_vs_obs.csv");
        out << "fuel_obs_L,fuel_pred_L\n";
        for (std::size_t i = 0; i < obs.size(); ++i) {
            out << obs[i] << ',' << est[i] << "\n";
        }
    }
    {
        auto out = open_out(fs::path(cfg.out_dir) / "hist_pair.csv");
        out << "bin_lo,bin_hi,p_observed,p_predicted\n";
        for (std::size_t b = 0; b < h_obs.probs.size(); ++b) {
            out << h_obs.edges[b] << ',' << h_obs.edges[b + 1] << ',' << h_obs.probs[b] << ','
                << h_est.probs[b] << "\n";
        }
    }
    {
        auto out = open_out(fs::path(cfg.out_dir) / "report.csv");
        out << "traffic,vehicle,features,n_train,cv_r_square,cv_rmse_L,quintic_r_square,"
               "quintic_rmse_L,test_r_square,test_rmse_L,kl_nats,kl_self_nats\n";
        out << train_ds.scenario_label << ',' << train_ds.vehicle_id << ',';
        for (std::size_t i = 0; i < rep.features.size(); ++i) {
            out << (i > 0 ? "+" : "") << rep.features[i];
        }
        out << ',' << rep.n_train << ',' << rep.cv.pooled.r_square << ',' << rep.cv.pooled.rmse
            << ',' << rep.quintic_capped.r_square << ',' << rep.quintic_capped.rmse << ','
            << rep.test.r_square << ',' << rep.test.rmse << ',' << rep.kl_nats << ','
            << rep.kl_self_nats << "\n";
    }

    write_manifest(cfg, "predict");
    std::cout << "predict: features";
    for (const auto& f : rep.features) std::cout << ' ' << f;
    std::cout << "; cv R^2 " << rep.cv.pooled.r_square << ", test R^2 " << rep.test.r_square
              << ", KL " << rep.kl_nats << " -> " << cfg.out_dir << "\n";
    return rep;
}

void run_demo(const PipelineConfig& base) {
    // The two traffic settings are distinct commutes: a 20-minute highway
    // drive and a 15-minute stop-and-go local run; the demo pins both.
    const std::array<CellSpec, 4> cells = {{
        {"highway_car", ScenarioKind::highway, "passenger_car", 1200.0},
        {"highway_truck", ScenarioKind::highway, "light_duty_truck", 1200.0},
        {"local_car", ScenarioKind::local, "passenger_car", 900.0},
        {"local_truck", ScenarioKind::local, "light_duty_truck", 900.0},
    }};
    fs::create_directories(base.out_dir);
    auto summary = open_out(fs::path(base.out_dir) / "summary.csv");
    summary << "cell,traffic,vehicle,kept,flagged,r_a,p_a,r_b,r_T,r_s0,spread_pct,quintic_r2,"
               "gpr_cv_r2,test_r2,kl_nats\n";

    for (const auto& cell : cells) {
        PipelineConfig cfg = base;
        cfg.scenario.kind = cell.kind;
        cfg.scenario.duration = cell.duration;
        cfg.vehicle_fixture = cell.vehicle;
        cfg.vehicle_config_path.clear();
        cfg.out_dir = (fs::path(base.out_dir) / cell.name).string();
        // Both vehicles of a scenario share one seed, hence one leader trace
        // and one set of preference draws: same traffic, different vehicle.
        cfg.campaign.seed = derive_seed(base.campaign.seed,
                                        cell.kind == ScenarioKind::highway ? 101 : 102);

        std::cout << "demo cell " << cell.name << "\n";
        const SimulateReport sim = cmd_simulate(cfg);
        const AnalyzeReport ana = cmd_analyze(cfg, sim.campaign_path);
        const PredictReport pre = cmd_predict(cfg, sim.campaign_path);

        summary << cell.name << ',' << scenario_kind_name(cell.kind) << ',' << cell.vehicle << ','
                << ana.filter.kept << ',' << sim.flagged << ',' << ana.dcorr[0].r << ','
                << ana.dcorr[0].p_value << ',' << ana.dcorr[1].r << ',' << ana.dcorr[2].r << ','
                << ana.dcorr[3].r << ',' << ana.spread_pct << ',' << ana.quintic.r_square << ','
                << pre.cv.pooled.r_square << ',' << pre.test.r_square << ',' << pre.kl_nats
                << "\n";
    }
    std::cout << "demo complete -> " << base.out_dir << "\n";
}

double binned_spread_pct(const CampaignDataset& ds, std::size_t bins) {
    if (ds.records.empty() || bins == 0) {
        throw std::invalid_argument("binned spread: empty dataset or zero bins");
    }
    double a_lo = ds.records.front().prefs.a_max;
    double a_hi = a_lo;
    double fuel_sum = 0.0;
    for (const auto& r : ds.records) {
        a_lo = std::min(a_lo, r.prefs.a_max);
        a_hi = std::max(a_hi, r.prefs.a_max);
        fuel_sum += r.trip_fuel_l;
    }
    const double mean_fuel = fuel_sum / static_cast<double>(ds.records.size());
    if (a_hi <= a_lo || mean_fuel <= 0.0) return 0.0;

    std::vector<double> sums(bins, 0.0);
    std::vector<std::size_t> counts(bins, 0);
    const double width = (a_hi - a_lo) / static_cast<double>(bins);
    for (const auto& r : ds.records) {
        std::size_t idx = static_cast<std::size_t>((r.prefs.a_max - a_lo) / width);
        if (idx >= bins) idx = bins - 1;
        sums[idx] += r.trip_fuel_l;
        ++counts[idx];
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < bins; ++b) {
        if (counts[b] == 0) continue;
        const double m = sums[b] / static_cast<double>(counts[b]);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) return 0.0;
    return 100.0 * (hi - lo) / mean_fuel;
}

}  // namespace fuelsim
