#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fuelsim/campaign.hpp"

namespace fuelsim {

enum class PrefParam { a_max, b_des, headway, jam };

inline constexpr std::array<PrefParam, 4> kAllPrefParams = {
    PrefParam::a_max, PrefParam::b_des, PrefParam::headway, PrefParam::jam};

const char* pref_param_name(PrefParam p);
double pref_value(const DriverPreferences& prefs, PrefParam p);

struct DcorrResult {
    double r = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Sample distance correlation of two equal-length series: the square root
/// of the ratio of the double-centred distance covariance to the geometric
/// mean of the distance variances, clamped to [0, 1]. Throws
/// std::invalid_argument on mismatched lengths, n < 2, or a constant series.
double distance_correlation(const std::vector<double>& x, const std::vector<double>& y);

/// One-sided permutation p-value for distance_correlation(x, y):
/// (1 + #{r_perm >= r_obs}) / (1 + n_perm). Permutation i shuffles y with
/// its own stream Rng(seed, i).
DcorrResult dcorr_permutation_p(const std::vector<double>& x, const std::vector<double>& y,
                                std::size_t n_perm, std::uint64_t seed);

/// Permutation test of each preference column against fuel, sharing one set
/// of fuel permutations across the four columns.
std::array<DcorrResult, 4> dcorr_permutation_p_multi(const CampaignDataset& ds,
                                                     std::size_t n_perm, std::uint64_t seed);

struct ConvergencePoint {
    std::size_t n = 0;
    double r = 0.0;
};

/// Distance correlation of one preference against fuel over growing
/// prefixes (every `stride` records, plus the full dataset).
std::vector<ConvergencePoint> dcorr_convergence(const CampaignDataset& ds, PrefParam param,
                                                std::size_t stride);

/// Degree-5 polynomial fuel = z1*a^5 + ... + z5*a + z6 with fit quality.
struct QuinticModel {
    std::array<double, 6> z{};  // z[0] multiplies a^5, z[5] is the constant
    double r_square = 0.0;
    double rmse = 0.0;
    double evaluate(double a) const;
};

/// Least-squares quintic of y on x (solved on standardized x, reported in
/// the original coordinates). Throws std::invalid_argument when x is
/// constant or has fewer than 7 points.
QuinticModel fit_quintic(const std::vector<double>& x, const std::vector<double>& y);

/// Least-squares polynomial of the given degree; coefficients are returned
/// highest power first (size degree + 1).
std::vector<double> fit_poly(const std::vector<double>& x, const std::vector<double>& y,
                             std::size_t degree);

struct GoodnessOfFit {
    double r_square = 0.0;
    double rmse = 0.0;
};

/// R^2 = 1 - SSE/SST and RMSE of predictions against observations.
GoodnessOfFit goodness(const std::vector<double>& observed, const std::vector<double>& predicted);

struct Histogram {
    std::vector<double> edges;  // size bins + 1
    std::vector<double> probs;  // size bins, sums to 1
};

/// Equal-width probability histogram; values outside [lo, hi] are counted
/// in the end bins. With lo >= hi the range is taken from the data.
Histogram histogram(const std::vector<double>& values, std::size_t bins, double lo = 0.0,
                    double hi = 0.0);

/// KL divergence sum P ln(P/Q) in nats over two histograms with identical
/// edges. Bins with P = 0 contribute nothing; when some bin has P > 0 but
/// Q = 0, Q's zero bins are floored at 1e-12 and Q renormalised, so
/// kl_divergence(h, h) is exactly zero.
double kl_divergence(const Histogram& p, const Histogram& q);

}  // namespace fuelsim
