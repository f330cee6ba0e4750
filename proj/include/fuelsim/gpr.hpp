#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fuelsim/stats.hpp"

namespace fuelsim {

struct GprOptions {
    std::size_t restarts = 8;     // seeded hyperparameter probes
    std::size_t search_from = 2;  // local searches launched from the best probes
    std::size_t max_evals = 60;   // objective evaluations per local search
    double jitter = 1e-8;
    std::uint64_t seed = 0;
};

/// Exact GP regressor with a constant basis. Hyperparameters are stored as
/// logs; train_inputs and alpha_vec cache everything prediction needs.
struct GprModel {
    double theta1 = 0.0;    // log sigma_f (signal amplitude)
    double theta2 = 0.0;    // log sigma_l (length scale)
    double noise_var = 0.0; // sigma^2
    double beta = 0.0;      // constant-basis coefficient
    double jitter = 1e-8;
    double log_ml = 0.0;
    Eigen::MatrixXd train_inputs;  // standardized features, one row per sample
    Eigen::VectorXd alpha_vec;     // (K + sigma^2 I)^-1 (Y - beta)
    std::vector<double> feature_means;
    std::vector<double> feature_scales;
    std::vector<std::string> feature_names;

    double sigma_f() const { return std::exp(theta1); }
    double sigma_l() const { return std::exp(theta2); }
};

struct CvReport {
    std::size_t folds = 0;
    std::vector<GoodnessOfFit> per_fold;
    GoodnessOfFit pooled;  // computed over all held-out predictions at once
};

/// Matern 5/2 covariance of two points at Euclidean distance r:
/// sigma_f^2 (1 + sqrt5 r/sigma_l + 5r^2/(3 sigma_l^2)) exp(-sqrt5 r/sigma_l).
double matern52(const Eigen::VectorXd& x, const Eigen::VectorXd& x2, double sigma_f,
                double sigma_l);

/// K(X, X) + jitter I, rows of X being points.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, double sigma_f, double sigma_l,
                              double jitter);

/// Gaussian log-density of Y under mean beta and covariance K + noise_sd^2 I,
/// evaluated by Cholesky. A failed factorization doubles the jitter once and
/// retries; a second failure raises std::runtime_error.
double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double beta,
                               double theta1, double theta2, double noise_sd,
                               double jitter = 1e-8);

/// Builds the model at fixed hyperparameters: standardizes features, profiles
/// beta by generalized least squares, caches alpha_vec.
GprModel fit_exact(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y, double theta1,
                   double theta2, double noise_sd, double jitter = 1e-8,
                   std::vector<std::string> names = {});

/// Maximum-likelihood training: seeded probes over (theta1, theta2, log
/// noise), then derivative-free local search from the best probes.
/// Deterministic for a given seed.
GprModel train(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y,
               const GprOptions& opts = {}, std::vector<std::string> names = {});

/// Posterior mean at one point / a batch of points (rows).
double predict(const GprModel& model, const Eigen::VectorXd& x_raw);
Eigen::VectorXd predict(const GprModel& model, const Eigen::MatrixXd& x_raw);

/// Keeps parameters whose permutation p-value is below the threshold; always
/// keeps at least the one with the largest r. Mask aligns with kAllPrefParams.
std::array<bool, 4> select_features(const std::array<DcorrResult, 4>& table, double threshold);

/// Seeded shuffled k-fold cross-validation of train/predict. Requires
/// 2 <= k <= n; leave-one-out (k = n) is allowed.
CvReport cross_validate(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y, std::size_t k,
                        std::uint64_t seed, const GprOptions& opts = {});

/// Versioned text serialization, full decimal precision.
void save_model(const GprModel& model, const std::string& path);
GprModel load_model(const std::string& path);

/// Campaign-to-matrix helpers: selected preference columns and fuel column.
Eigen::MatrixXd feature_matrix(const CampaignDataset& ds, const std::array<bool, 4>& mask);
Eigen::VectorXd fuel_vector(const CampaignDataset& ds);
std::vector<std::string> masked_feature_names(const std::array<bool, 4>& mask);

}  // namespace fuelsim
