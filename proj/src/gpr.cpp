#include "fuelsim/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fuelsim/errors.hpp"
#include "fuelsim/rng.hpp"

namespace fuelsim {

namespace {

constexpr double kSqrt5 = 2.2360679774997896;
constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double matern52_from_dist(double r, double sf_sq, double inv_sl) {
    const double s = kSqrt5 * r * inv_sl;
    return sf_sq * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double r = (x.row(i) - x.row(j)).norm();
            d(i, j) = r;
            d(j, i) = r;
        }
    }
    return d;
}

Eigen::MatrixXd kernel_from_dist(const Eigen::MatrixXd& dist, double sigma_f, double sigma_l,
                                 double diag_add) {
    const double sf_sq = sigma_f * sigma_f;
    const double inv_sl = 1.0 / sigma_l;
    const Eigen::Index n = dist.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = sf_sq + diag_add;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = matern52_from_dist(dist(i, j), sf_sq, inv_sl);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

struct Profiled {
    double lml = kNegInf;
    double beta = 0.0;
    Eigen::VectorXd alpha;
    double jitter_used = 0.0;
};

/// One likelihood evaluation with beta profiled out by generalized least
/// squares. Returns false when the Cholesky factorization fails.
bool try_profile(const Eigen::MatrixXd& dist, const Eigen::VectorXd& y, double sigma_f,
                 double sigma_l, double noise_var, double jitter, Profiled& out) {
    const Eigen::Index n = y.size();
    const Eigen::MatrixXd k = kernel_from_dist(dist, sigma_f, sigma_l, noise_var + jitter);
    const Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) return false;

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd kinv_y = llt.solve(y);
    const Eigen::VectorXd kinv_1 = llt.solve(ones);
    const double denom = ones.dot(kinv_1);
    if (!(denom > 0.0) || !std::isfinite(denom)) return false;

    out.beta = ones.dot(kinv_y) / denom;
    out.alpha = kinv_y - out.beta * kinv_1;
    const Eigen::VectorXd resid = y - out.beta * ones;

    double log_det = 0.0;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(l(i, i));

    out.lml = -0.5 * resid.dot(out.alpha) - 0.5 * log_det -
              0.5 * static_cast<double>(n) * kLog2Pi;
    out.jitter_used = jitter;
    return std::isfinite(out.lml);
}

bool profile_with_retry(const Eigen::MatrixXd& dist, const Eigen::VectorXd& y, double sigma_f,
                        double sigma_l, double noise_var, double jitter, Profiled& out) {
    if (try_profile(dist, y, sigma_f, sigma_l, noise_var, jitter, out)) return true;
    return try_profile(dist, y, sigma_f, sigma_l, noise_var, 2.0 * jitter, out);
}

struct Standardized {
    Eigen::MatrixXd z;
    std::vector<double> means;
    std::vector<double> scales;
};

Standardized standardize(const Eigen::MatrixXd& x_raw) {
    Standardized s;
    const Eigen::Index n = x_raw.rows();
    const Eigen::Index d = x_raw.cols();
    s.z.resize(n, d);
    s.means.resize(static_cast<std::size_t>(d));
    s.scales.resize(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
        const double mu = x_raw.col(j).mean();
        const double var = (x_raw.col(j).array() - mu).square().mean();
        double sd = std::sqrt(var);
        if (sd < 1e-12) sd = 1.0;
        s.means[static_cast<std::size_t>(j)] = mu;
        s.scales[static_cast<std::size_t>(j)] = sd;
        s.z.col(j) = (x_raw.col(j).array() - mu) / sd;
    }
    return s;
}

std::vector<std::string> default_names(Eigen::Index d, std::vector<std::string> names) {
    if (names.empty()) {
        for (Eigen::Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j));
    }
    if (names.size() != static_cast<std::size_t>(d)) {
        throw std::invalid_argument("gpr: feature name count does not match feature count");
    }
    return names;
}

using Psi = std::array<double, 3>;  // (theta1, theta2, log noise sd)

/// Derivative-free simplex descent on f, budgeted by objective evaluations.
Psi nelder_mead(const Psi& start, const std::function<double(const Psi&)>& f,
                std::size_t max_evals) {
    struct Vertex {
        Psi x;
        double f;
    };
    std::size_t evals = 0;
    auto eval = [&](const Psi& p) {
        ++evals;
        return f(p);
    };

    std::array<Vertex, 4> simplex;
    simplex[0] = {start, eval(start)};
    for (std::size_t k = 0; k < 3; ++k) {
        Psi p = start;
        p[k] += 0.4;
        simplex[k + 1] = {p, eval(p)};
    }

    auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
    while (evals < max_evals) {
        std::sort(simplex.begin(), simplex.end(), by_value);
        if (simplex[3].f - simplex[0].f < 1e-9 &&
            std::isfinite(simplex[0].f) && std::isfinite(simplex[3].f)) {
            break;
        }
        Psi centroid{};
        for (std::size_t v = 0; v < 3; ++v) {
            for (std::size_t k = 0; k < 3; ++k) centroid[k] += simplex[v].x[k] / 3.0;
        }
        auto blend = [&](double t) {
            Psi p;
            for (std::size_t k = 0; k < 3; ++k) {
                p[k] = centroid[k] + t * (centroid[k] - simplex[3].x[k]);
            }
            return p;
        };

        const Psi reflected = blend(1.0);
        const double fr = eval(reflected);
        if (fr < simplex[0].f) {
            if (evals < max_evals) {
                const Psi expanded = blend(2.0);
                const double fe = eval(expanded);
                simplex[3] = fe < fr ? Vertex{expanded, fe} : Vertex{reflected, fr};
            } else {
                simplex[3] = {reflected, fr};
            }
            continue;
        }
        if (fr < simplex[2].f) {
            simplex[3] = {reflected, fr};
            continue;
        }
        if (evals >= max_evals) break;
        const Psi contracted = blend(fr < simplex[3].f ? 0.5 : -0.5);
        const double fc = eval(contracted);
        if (fc < std::min(fr, simplex[3].f)) {
            simplex[3] = {contracted, fc};
            continue;
        }
        for (std::size_t v = 1; v < 4 && evals < max_evals; ++v) {
            for (std::size_t k = 0; k < 3; ++k) {
                simplex[v].x[k] = simplex[0].x[k] + 0.5 * (simplex[v].x[k] - simplex[0].x[k]);
            }
            simplex[v].f = eval(simplex[v].x);
        }
    }
    std::sort(simplex.begin(), simplex.end(), by_value);
    return simplex[0].x;
}

GprModel build_model(const Standardized& s, const Eigen::VectorXd& y, const Psi& psi,
                     double jitter, std::vector<std::string> names) {
    const double sigma_f = std::exp(psi[0]);
    const double sigma_l = std::exp(psi[1]);
    const double noise_sd = std::exp(psi[2]);
    const Eigen::MatrixXd dist = pairwise_distances(s.z);
    Profiled p;
    if (!profile_with_retry(dist, y, sigma_f, sigma_l, noise_sd * noise_sd, jitter, p)) {
        throw std::runtime_error("gpr: covariance not positive definite at selected hyperparameters");
    }
    GprModel m;
    m.theta1 = psi[0];
    m.theta2 = psi[1];
    m.noise_var = noise_sd * noise_sd;
    m.beta = p.beta;
    m.jitter = p.jitter_used;
    m.log_ml = p.lml;
    m.train_inputs = s.z;
    m.alpha_vec = p.alpha;
    m.feature_means = s.means;
    m.feature_scales = s.scales;
    m.feature_names = default_names(s.z.cols(), std::move(names));
    return m;
}

Eigen::VectorXd standardize_point(const GprModel& m, const Eigen::VectorXd& x_raw) {
    if (x_raw.size() != m.train_inputs.cols()) {
        throw std::invalid_argument("gpr predict: feature dimension mismatch");
    }
    Eigen::VectorXd z(x_raw.size());
    for (Eigen::Index j = 0; j < x_raw.size(); ++j) {
        const auto k = static_cast<std::size_t>(j);
        z(j) = (x_raw(j) - m.feature_means[k]) / m.feature_scales[k];
    }
    return z;
}

}  // namespace

double matern52(const Eigen::VectorXd& x, const Eigen::VectorXd& x2, double sigma_f,
                double sigma_l) {
    if (x.size() != x2.size()) {
        throw std::invalid_argument("matern52: point dimensions differ");
    }
    if (!(sigma_f > 0.0) || !(sigma_l > 0.0)) {
        throw std::invalid_argument("matern52: sigma_f and sigma_l must be positive");
    }
    return matern52_from_dist((x - x2).norm(), sigma_f * sigma_f, 1.0 / sigma_l);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, double sigma_f, double sigma_l,
                              double jitter) {
    return kernel_from_dist(pairwise_distances(x), sigma_f, sigma_l, jitter);
}

double log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double beta,
                               double theta1, double theta2, double noise_sd, double jitter) {
    if (x.rows() != y.size()) {
        throw std::invalid_argument("log_marginal_likelihood: X and Y sizes differ");
    }
    const double sigma_f = std::exp(theta1);
    const double sigma_l = std::exp(theta2);
    const Eigen::MatrixXd dist = pairwise_distances(x);
    for (double j : {jitter, 2.0 * jitter}) {
        const Eigen::MatrixXd k =
            kernel_from_dist(dist, sigma_f, sigma_l, noise_sd * noise_sd + j);
        const Eigen::LLT<Eigen::MatrixXd> llt(k);
        if (llt.info() != Eigen::Success) continue;
        const Eigen::VectorXd resid = y.array() - beta;
        const Eigen::VectorXd alpha = llt.solve(resid);
        double log_det = 0.0;
        const auto& l = llt.matrixLLT();
        for (Eigen::Index i = 0; i < y.size(); ++i) log_det += 2.0 * std::log(l(i, i));
        return -0.5 * resid.dot(alpha) - 0.5 * log_det -
               0.5 * static_cast<double>(y.size()) * kLog2Pi;
    }
    throw std::runtime_error("log_marginal_likelihood: covariance not positive definite");
}

GprModel fit_exact(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y, double theta1,
                   double theta2, double noise_sd, double jitter,
                   std::vector<std::string> names) {
    if (x_raw.rows() != y.size() || x_raw.rows() < 1) {
        throw std::invalid_argument("gpr fit: X and Y sizes differ or are empty");
    }
    const Standardized s = standardize(x_raw);
    GprModel m = build_model(s, y, Psi{theta1, theta2,
                                       noise_sd > 0.0 ? std::log(noise_sd) : -400.0},
                             jitter, std::move(names));
    if (noise_sd == 0.0) m.noise_var = 0.0;
    return m;
}

GprModel train(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y, const GprOptions& opts,
               std::vector<std::string> names) {
    if (x_raw.rows() != y.size()) {
        throw std::invalid_argument("gpr train: X and Y sizes differ");
    }
    if (x_raw.rows() < 5) {
        throw std::invalid_argument("gpr train: need at least 5 samples");
    }
    const Standardized s = standardize(x_raw);
    const Eigen::MatrixXd dist = pairwise_distances(s.z);

    const double y_mean = y.mean();
    const double y_sd = std::sqrt((y.array() - y_mean).square().mean());
    const double y_scale = std::max(y_sd, 1e-8);
    const double log_y_scale = std::log(y_scale);

    const auto objective = [&](const Psi& psi) -> double {
        for (const double v : psi) {
            if (!std::isfinite(v) || std::abs(v) > 30.0) return kNegInf;
        }
        Profiled p;
        if (!profile_with_retry(dist, y, std::exp(psi[0]), std::exp(psi[1]),
                                std::exp(2.0 * psi[2]), opts.jitter, p)) {
            return kNegInf;
        }
        return p.lml;
    };

    struct Probe {
        Psi psi;
        double lml;
    };
    std::vector<Probe> probes;
    probes.push_back({Psi{log_y_scale, std::log(1.5), log_y_scale + std::log(0.05)}, kNegInf});
    for (std::size_t i = 0; i < opts.restarts; ++i) {
        Rng rng(opts.seed, 100 + i);
        Psi psi;
        psi[0] = log_y_scale + rng.uniform(std::log(0.1), std::log(2.0));
        psi[1] = rng.uniform(std::log(0.3), std::log(5.0));
        psi[2] = log_y_scale + rng.uniform(std::log(1e-3), std::log(0.5));
        probes.push_back({psi, kNegInf});
    }
    for (auto& probe : probes) probe.lml = objective(probe.psi);
    std::sort(probes.begin(), probes.end(),
              [](const Probe& a, const Probe& b) { return a.lml > b.lml; });

    Psi best_psi = probes.front().psi;
    double best_lml = probes.front().lml;
    const auto negated = [&](const Psi& p) { return -objective(p); };
    const std::size_t searches = std::min<std::size_t>(std::max<std::size_t>(opts.search_from, 1),
                                                       probes.size());
    for (std::size_t i = 0; i < searches; ++i) {
        if (probes[i].lml == kNegInf) continue;
        const Psi found = nelder_mead(probes[i].psi, negated, opts.max_evals);
        const double lml = objective(found);
        if (lml > best_lml) {
            best_lml = lml;
            best_psi = found;
        }
    }
    if (!std::isfinite(best_lml)) {
        std::ostringstream msg;
        msg << "gpr train: no hyperparameter candidate produced a finite likelihood (n="
            << x_raw.rows() << ", probes=" << probes.size() << ", jitter=" << opts.jitter << ")";
        throw std::runtime_error(msg.str());
    }
    return build_model(s, y, best_psi, opts.jitter, std::move(names));
}

double predict(const GprModel& model, const Eigen::VectorXd& x_raw) {
    const Eigen::VectorXd z = standardize_point(model, x_raw);
    const double sf_sq = std::exp(2.0 * model.theta1);
    const double inv_sl = std::exp(-model.theta2);
    double acc = model.beta;
    for (Eigen::Index i = 0; i < model.train_inputs.rows(); ++i) {
        const double r = (model.train_inputs.row(i).transpose() - z).norm();
        acc += matern52_from_dist(r, sf_sq, inv_sl) * model.alpha_vec(i);
    }
    return acc;
}

Eigen::VectorXd predict(const GprModel& model, const Eigen::MatrixXd& x_raw) {
    Eigen::VectorXd out(x_raw.rows());
    for (Eigen::Index i = 0; i < x_raw.rows(); ++i) {
        out(i) = predict(model, Eigen::VectorXd(x_raw.row(i).transpose()));
    }
    return out;
}

std::array<bool, 4> select_features(const std::array<DcorrResult, 4>& table, double threshold) {
    std::array<bool, 4> mask{};
    std::size_t best = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        mask[i] = table[i].p_value < threshold;
        if (table[i].r > table[best].r) best = i;
    }
    mask[best] = true;
    return mask;
}

CvReport cross_validate(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y, std::size_t k,
                        std::uint64_t seed, const GprOptions& opts) {
    const std::size_t n = static_cast<std::size_t>(x_raw.rows());
    if (k < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");
    if (k > n) throw std::invalid_argument("cross_validate: more folds than samples");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(seed, 0);
    shuffle_rng.shuffle(order);

    CvReport report;
    report.folds = k;
    std::vector<double> pooled_obs;
    std::vector<double> pooled_pred;
    pooled_obs.reserve(n);
    pooled_pred.reserve(n);

    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::size_t cursor = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t fold_size = base + (f < extra ? 1 : 0);
        const std::size_t fold_begin = cursor;
        cursor += fold_size;

        Eigen::MatrixXd x_train(n - fold_size, x_raw.cols());
        Eigen::VectorXd y_train(n - fold_size);
        Eigen::MatrixXd x_test(fold_size, x_raw.cols());
        Eigen::VectorXd y_test(fold_size);
        Eigen::Index ti = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = static_cast<Eigen::Index>(order[i]);
            if (i >= fold_begin && i < fold_begin + fold_size) {
                const auto r = static_cast<Eigen::Index>(i - fold_begin);
                x_test.row(r) = x_raw.row(row);
                y_test(r) = y(row);
            } else {
                x_train.row(ti) = x_raw.row(row);
                y_train(ti) = y(row);
                ++ti;
            }
        }

        GprOptions fold_opts = opts;
        fold_opts.seed = derive_seed(seed, 1 + f);
        const GprModel model = train(x_train, y_train, fold_opts);
        const Eigen::VectorXd pred = predict(model, x_test);

        std::vector<double> obs(y_test.data(), y_test.data() + y_test.size());
        std::vector<double> est(pred.data(), pred.data() + pred.size());
        report.per_fold.push_back(goodness(obs, est));
        pooled_obs.insert(pooled_obs.end(), obs.begin(), obs.end());
        pooled_pred.insert(pooled_pred.end(), est.begin(), est.end());
    }
    report.pooled = goodness(pooled_obs, pooled_pred);
    return report;
}

void save_model(const GprModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << std::setprecision(17);
    out << "fuelsim_gpr 1\n";
    out << "features " << model.feature_names.size() << "\n";
    for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
        out << "feature " << model.feature_names[j] << ' ' << model.feature_means[j] << ' '
            << model.feature_scales[j] << "\n";
    }
    out << "theta1 " << model.theta1 << "\n";
    out << "theta2 " << model.theta2 << "\n";
    out << "noise_var " << model.noise_var << "\n";
    out << "beta " << model.beta << "\n";
    out << "jitter " << model.jitter << "\n";
    out << "log_ml " << model.log_ml << "\n";
    out << "train " << model.train_inputs.rows() << ' ' << model.train_inputs.cols() << "\n";
    for (Eigen::Index i = 0; i < model.train_inputs.rows(); ++i) {
        for (Eigen::Index j = 0; j < model.train_inputs.cols(); ++j) {
            out << (j > 0 ? " " : "") << model.train_inputs(i, j);
        }
        out << "\n";
    }
    out << "alpha " << model.alpha_vec.size() << "\n";
    for (Eigen::Index i = 0; i < model.alpha_vec.size(); ++i) {
        out << model.alpha_vec(i) << "\n";
    }
}

GprModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file '" + path + "'");
    auto fail = [&path](const std::string& why) {
        throw ParseError("model file '" + path + "': " + why);
    };

    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "fuelsim_gpr") fail("missing format tag");
    if (version != 1) fail("unsupported version " + std::to_string(version));

    GprModel m;
    std::string key;
    std::size_t n_features = 0;
    if (!(in >> key >> n_features) || key != "features") fail("expected feature count");
    for (std::size_t j = 0; j < n_features; ++j) {
        std::string name;
        double mean = 0.0;
        double scale = 0.0;
        if (!(in >> key >> name >> mean >> scale) || key != "feature") fail("bad feature line");
        m.feature_names.push_back(name);
        m.feature_means.push_back(mean);
        m.feature_scales.push_back(scale);
    }
    auto read_scalar = [&](const char* expect, double& into) {
        if (!(in >> key >> into) || key != expect) fail(std::string("expected ") + expect);
    };
    read_scalar("theta1", m.theta1);
    read_scalar("theta2", m.theta2);
    read_scalar("noise_var", m.noise_var);
    read_scalar("beta", m.beta);
    read_scalar("jitter", m.jitter);
    read_scalar("log_ml", m.log_ml);

    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    if (!(in >> key >> rows >> cols) || key != "train") fail("expected training matrix header");
    if (cols != static_cast<Eigen::Index>(n_features)) fail("training matrix width mismatch");
    m.train_inputs.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!(in >> m.train_inputs(i, j))) fail("truncated training matrix");
        }
    }
    Eigen::Index alpha_n = 0;
    if (!(in >> key >> alpha_n) || key != "alpha") fail("expected alpha header");
    if (alpha_n != rows) fail("alpha length mismatch");
    m.alpha_vec.resize(alpha_n);
    for (Eigen::Index i = 0; i < alpha_n; ++i) {
        if (!(in >> m.alpha_vec(i))) fail("truncated alpha vector");
    }
    return m;
}

Eigen::MatrixXd feature_matrix(const CampaignDataset& ds, const std::array<bool, 4>& mask) {
    const std::size_t cols = static_cast<std::size_t>(
        std::count(mask.begin(), mask.end(), true));
    if (cols == 0) throw std::invalid_argument("feature_matrix: empty feature mask");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.records.size()),
                      static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        Eigen::Index j = 0;
        for (std::size_t k = 0; k < mask.size(); ++k) {
            if (!mask[k]) continue;
            x(static_cast<Eigen::Index>(i), j++) =
                pref_value(ds.records[i].prefs, kAllPrefParams[k]);
        }
    }
    return x;
}

Eigen::VectorXd fuel_vector(const CampaignDataset& ds) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(ds.records.size()));
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        y(static_cast<Eigen::Index>(i)) = ds.records[i].trip_fuel_l;
    }
    return y;
}

std::vector<std::string> masked_feature_names(const std::array<bool, 4>& mask) {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < mask.size(); ++k) {
        if (mask[k]) names.emplace_back(pref_param_name(kAllPrefParams[k]));
    }
    return names;
}

}  // namespace fuelsim
