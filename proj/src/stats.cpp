#include "fuelsim/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fuelsim/rng.hpp"

namespace fuelsim {

namespace {

/// Double-centred pairwise-distance matrix of a scalar series.
Eigen::MatrixXd centred_distance_matrix(const std::vector<double>& v) {
    const Eigen::Index n = static_cast<Eigen::Index>(v.size());
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dist = std::abs(v[static_cast<std::size_t>(i)] -
                                         v[static_cast<std::size_t>(j)]);
            d(i, j) = dist;
            d(j, i) = dist;
        }
    }
    const Eigen::VectorXd row_mean = d.rowwise().mean();
    const double grand_mean = d.mean();
    d.colwise() -= row_mean;
    d.rowwise() -= row_mean.transpose();
    d.array() += grand_mean;
    return d;
}

double dcov_sq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.cwiseProduct(b).mean();
}

void check_series(const std::vector<double>& v, const char* which) {
    if (v.size() < 2) {
        throw std::invalid_argument(std::string("distance correlation: ") + which +
                                    " needs at least 2 values");
    }
    const double first = v.front();
    const bool constant = std::all_of(v.begin(), v.end(),
                                      [first](double x) { return x == first; });
    if (constant) {
        throw std::invalid_argument(std::string("distance correlation: ") + which +
                                    " is constant");
    }
}

double dcorr_from_matrices(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double vxy = dcov_sq(a, b);
    const double vxx = dcov_sq(a, a);
    const double vyy = dcov_sq(b, b);
    const double denom = std::sqrt(vxx * vyy);
    if (denom <= 0.0) return 0.0;
    const double ratio = vxy / denom;
    if (ratio <= 0.0) return 0.0;
    return std::sqrt(ratio);
}

std::vector<double> fuel_column(const CampaignDataset& ds) {
    std::vector<double> fuel;
    fuel.reserve(ds.records.size());
    for (const auto& r : ds.records) fuel.push_back(r.trip_fuel_l);
    return fuel;
}

std::vector<double> pref_column(const CampaignDataset& ds, PrefParam p) {
    std::vector<double> out;
    out.reserve(ds.records.size());
    for (const auto& r : ds.records) out.push_back(pref_value(r.prefs, p));
    return out;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

const char* pref_param_name(PrefParam p) {
    switch (p) {
        case PrefParam::a_max: return "a";
        case PrefParam::b_des: return "b";
        case PrefParam::headway: return "T";
        case PrefParam::jam: return "s0";
    }
    return "?";
}

double pref_value(const DriverPreferences& prefs, PrefParam p) {
    switch (p) {
        case PrefParam::a_max: return prefs.a_max;
        case PrefParam::b_des: return prefs.b_des;
        case PrefParam::headway: return prefs.headway;
        case PrefParam::jam: return prefs.jam;
    }
    return 0.0;
}

double distance_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("distance correlation: series lengths differ");
    }
    check_series(x, "x");
    check_series(y, "y");
    const Eigen::MatrixXd a = centred_distance_matrix(x);
    const Eigen::MatrixXd b = centred_distance_matrix(y);
    return dcorr_from_matrices(a, b);
}

DcorrResult dcorr_permutation_p(const std::vector<double>& x, const std::vector<double>& y,
                                std::size_t n_perm, std::uint64_t seed) {
    DcorrResult res;
    res.n = x.size();
    res.r = distance_correlation(x, y);

    const Eigen::MatrixXd a = centred_distance_matrix(x);
    std::size_t at_least = 0;
    std::vector<double> shuffled = y;
    for (std::size_t i = 0; i < n_perm; ++i) {
        Rng rng(seed, i);
        shuffled = y;
        rng.shuffle(shuffled);
        const Eigen::MatrixXd b = centred_distance_matrix(shuffled);
        if (dcorr_from_matrices(a, b) >= res.r) ++at_least;
    }
    res.p_value = static_cast<double>(1 + at_least) / static_cast<double>(1 + n_perm);
    return res;
}

std::array<DcorrResult, 4> dcorr_permutation_p_multi(const CampaignDataset& ds,
                                                     std::size_t n_perm, std::uint64_t seed) {
    const std::vector<double> fuel = fuel_column(ds);
    std::array<std::vector<double>, 4> cols;
    std::array<Eigen::MatrixXd, 4> mats;
    std::array<DcorrResult, 4> out;
    for (std::size_t k = 0; k < 4; ++k) {
        cols[k] = pref_column(ds, kAllPrefParams[k]);
        check_series(cols[k], pref_param_name(kAllPrefParams[k]));
        mats[k] = centred_distance_matrix(cols[k]);
        out[k].n = cols[k].size();
    }
    check_series(fuel, "fuel");
    const Eigen::MatrixXd fuel_mat = centred_distance_matrix(fuel);
    for (std::size_t k = 0; k < 4; ++k) {
        out[k].r = dcorr_from_matrices(mats[k], fuel_mat);
    }

    // One permutation of the fuel column serves all four parameters, so the
    // expensive centred matrix is built once per permutation.
    std::array<std::size_t, 4> at_least{};
    std::vector<double> shuffled = fuel;
    for (std::size_t i = 0; i < n_perm; ++i) {
        Rng rng(seed, i);
        shuffled = fuel;
        rng.shuffle(shuffled);
        const Eigen::MatrixXd b = centred_distance_matrix(shuffled);
        for (std::size_t k = 0; k < 4; ++k) {
            if (dcorr_from_matrices(mats[k], b) >= out[k].r) ++at_least[k];
        }
    }
    for (std::size_t k = 0; k < 4; ++k) {
        out[k].p_value =
            static_cast<double>(1 + at_least[k]) / static_cast<double>(1 + n_perm);
    }
    return out;
}

std::vector<ConvergencePoint> dcorr_convergence(const CampaignDataset& ds, PrefParam param,
                                                std::size_t stride) {
    if (stride == 0) throw std::invalid_argument("convergence stride must be positive");
    const std::vector<double> fuel = fuel_column(ds);
    const std::vector<double> col = pref_column(ds, param);
    std::vector<ConvergencePoint> points;
    for (std::size_t n = stride; n <= col.size(); n += stride) {
        const std::vector<double> x(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(n));
        const std::vector<double> y(fuel.begin(), fuel.begin() + static_cast<std::ptrdiff_t>(n));
        points.push_back({n, distance_correlation(x, y)});
    }
    if (points.empty() || points.back().n != col.size()) {
        points.push_back({col.size(), distance_correlation(col, fuel)});
    }
    return points;
}

double QuinticModel::evaluate(double a) const {
    double acc = 0.0;
    for (const double zi : z) acc = acc * a + zi;
    return acc;
}

std::vector<double> fit_poly(const std::vector<double>& x, const std::vector<double>& y,
                             std::size_t degree) {
    if (x.size() != y.size()) throw std::invalid_argument("polynomial fit: lengths differ");
    if (x.size() < degree + 2) {
        throw std::invalid_argument("polynomial fit: need more points than coefficients");
    }
    const double mu = mean_of(x);
    double var = 0.0;
    for (const double xi : x) var += (xi - mu) * (xi - mu);
    var /= static_cast<double>(x.size());
    const double sigma = std::sqrt(var);
    if (sigma == 0.0) throw std::invalid_argument("polynomial fit: x is constant");

    // Solve on standardized u = (x - mu) / sigma for conditioning, then map
    // w_k u^k back to x powers through the binomial expansion of
    // ((x - mu)/sigma)^k.
    const Eigen::Index n = static_cast<Eigen::Index>(x.size());
    const Eigen::Index m = static_cast<Eigen::Index>(degree) + 1;
    Eigen::MatrixXd design(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = (x[static_cast<std::size_t>(i)] - mu) / sigma;
        double p = 1.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            design(i, m - 1 - j) = p;  // column order: highest power first
            p *= u;
        }
    }
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs(i) = y[static_cast<std::size_t>(i)];
    const Eigen::VectorXd w = design.colPivHouseholderQr().solve(rhs);

    std::vector<double> coeffs(degree + 1, 0.0);  // highest power first
    std::vector<double> binom(degree + 1, 0.0);
    for (std::size_t k = 0; k <= degree; ++k) {
        const double wk = w(static_cast<Eigen::Index>(degree - k));  // weight of u^k
        // u^k = sigma^-k * sum_j C(k, j) x^j (-mu)^(k-j)
        binom[0] = 1.0;
        for (std::size_t j = 1; j <= k; ++j) binom[j] = binom[j - 1] * static_cast<double>(k - j + 1) / static_cast<double>(j);
        const double scale = wk / std::pow(sigma, static_cast<double>(k));
        double mu_pow = 1.0;
        for (std::size_t j = k + 1; j-- > 0;) {
            // j runs k..0; (-mu)^(k-j) built incrementally
            coeffs[degree - j] += scale * binom[j] * mu_pow;
            mu_pow *= -mu;
        }
    }
    return coeffs;
}

QuinticModel fit_quintic(const std::vector<double>& x, const std::vector<double>& y) {
    const std::vector<double> c = fit_poly(x, y, 5);
    QuinticModel model;
    std::copy(c.begin(), c.end(), model.z.begin());
    std::vector<double> predicted;
    predicted.reserve(x.size());
    for (const double xi : x) predicted.push_back(model.evaluate(xi));
    const GoodnessOfFit g = goodness(y, predicted);
    model.r_square = g.r_square;
    model.rmse = g.rmse;
    return model;
}

GoodnessOfFit goodness(const std::vector<double>& observed, const std::vector<double>& predicted) {
    if (observed.size() != predicted.size() || observed.empty()) {
        throw std::invalid_argument("goodness-of-fit: series must be equal-length and non-empty");
    }
    const double mu = mean_of(observed);
    double sse = 0.0;
    double sst = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = observed[i] - predicted[i];
        sse += e * e;
        const double d = observed[i] - mu;
        sst += d * d;
    }
    GoodnessOfFit g;
    g.r_square = sst > 0.0 ? 1.0 - sse / sst : 0.0;
    g.rmse = std::sqrt(sse / static_cast<double>(observed.size()));
    return g;
}

Histogram histogram(const std::vector<double>& values, std::size_t bins, double lo, double hi) {
    if (values.empty()) throw std::invalid_argument("histogram: no values");
    if (bins == 0) throw std::invalid_argument("histogram: need at least one bin");
    if (lo >= hi) {
        lo = *std::min_element(values.begin(), values.end());
        hi = *std::max_element(values.begin(), values.end());
        if (lo == hi) throw std::invalid_argument("histogram: data range has zero width");
    }
    Histogram h;
    h.edges.resize(bins + 1);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
    h.edges.back() = hi;
    h.probs.assign(bins, 0.0);
    const double w = 1.0 / static_cast<double>(values.size());
    for (const double v : values) {
        double pos = (v - lo) / width;
        if (pos < 0.0) pos = 0.0;
        std::size_t idx = static_cast<std::size_t>(pos);
        if (idx >= bins) idx = bins - 1;
        h.probs[idx] += w;
    }
    return h;
}

double kl_divergence(const Histogram& p, const Histogram& q) {
    if (p.edges != q.edges) {
        throw std::invalid_argument("KL divergence: histograms have different edges");
    }
    bool q_missing_mass = false;
    for (std::size_t i = 0; i < p.probs.size(); ++i) {
        if (p.probs[i] > 0.0 && q.probs[i] == 0.0) {
            q_missing_mass = true;
            break;
        }
    }
    std::vector<double> qq = q.probs;
    if (q_missing_mass) {
        double total = 0.0;
        for (double& v : qq) {
            if (v == 0.0) v = 1e-12;
            total += v;
        }
        for (double& v : qq) v /= total;
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.probs.size(); ++i) {
        if (p.probs[i] > 0.0) kl += p.probs[i] * std::log(p.probs[i] / qq[i]);
    }
    return kl;
}

}  // namespace fuelsim
