#pragma once

// Elastic-net least squares by cyclic coordinate descent.
//
// Objective, for standardized x and intercept fixed at mean(y):
//
//   (1/(2n)) ||y - b0 - X b||^2 + lambda * (a ||b||_1 + (1 - a) ||b||^2 / 2)
//
// where a = alpha_mix in (0, 1] (a = 1 is the Lasso). The data term is scaled
// by 1/(2n) so that one lambda means the same thing on full data, CV training
// folds and half-size subsamples.
//
// With RidgeScale::ResponseSd the ridge weight becomes lambda (1 - a) / sd(y),
// sd taken with denominator n on the rows being fitted. This is the solution
// glmnet reports for an unstandardized gaussian response.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "stabsel/data.hpp"

namespace stabsel {

/// Name of the penalty normalization in force, written into job metadata.
inline constexpr std::string_view kPenaltyConvention = "mse_half_over_n";

enum class RidgeScale { Unit, ResponseSd };

std::string_view to_string(RidgeScale r);
RidgeScale ridge_scale_from_string(std::string_view s);

struct NetConfig {
  double alpha_mix = 1.0;
  double lambda = 0.0;
  std::size_t max_iter = 100000;
  double tol = 1e-7;
  RidgeScale ridge_scale = RidgeScale::Unit;

  void validate() const;
};

struct FitResult {
  double intercept = 0.0;
  Eigen::VectorXd beta;
  std::vector<std::size_t> support;
  std::size_t iterations = 0;
  bool converged = false;
};

struct FitOptions {
  /// Starting coefficients; zero when null.
  const Eigen::VectorXd* warm_start = nullptr;
  /// Called after every sweep with the penalized objective. Evaluating the
  /// objective costs O(n p) per sweep, so only set this in diagnostics.
  std::function<void(std::size_t sweep, double objective)> on_sweep;
  /// Reject x whose non-zero columns are not mean 0 / sd 1 (tolerance 1e-6).
  /// All-zero columns are treated as dropped and never enter the model.
  bool check_standardized = true;
};

double soft_threshold(double z, double t);

FitResult fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const NetConfig& cfg,
              const FitOptions& opts = {});
FitResult fit(const Dataset& ds, const NetConfig& cfg);

double penalized_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double intercept,
                           const Eigen::VectorXd& beta, const NetConfig& cfg);

/// Effective coefficient of ||b||^2 / 2 for this response.
double ridge_weight(const NetConfig& cfg, const Eigen::VectorXd& y);

/// max_j |<x_j, y - mean(y)>| / (n alpha_mix); x must already be standardized.
double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha_mix);
double lambda_max(const Dataset& ds, double alpha_mix);

/// grid_size log-spaced values from lmax down to eps * lmax, eps = 1e-3 when
/// p > n else 1e-4. Strictly decreasing when lmax > 0.
std::vector<double> lambda_grid(double lmax, std::size_t n, std::size_t p, std::size_t grid_size);

struct CvOptions {
  double alpha_mix = 1.0;
  std::size_t folds = 10;
  std::size_t grid_size = 100;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  double tol = 1e-7;
  std::size_t max_iter = 100000;
  RidgeScale ridge_scale = RidgeScale::Unit;
};

struct CvResult {
  std::vector<double> lambdas;
  std::vector<double> mean_error;
  std::vector<double> std_error;
  std::size_t min_index = 0;
  std::size_t chosen_index = 0;
  NetConfig chosen;
};

/// K-fold CV of mean squared prediction error along the lambda grid. Takes
/// raw x: the full data is standardized for lambda_max, and each training
/// fold is standardized on its own rows. Fold membership comes from a seeded
/// shuffle: shuffled position i goes to fold i mod K.
CvResult cross_validate(const Dataset& ds, const CvOptions& opts);

/// Largest lambda whose mean CV error is within one standard error of the
/// minimum (standard error = sd of the fold errors / sqrt(K)).
NetConfig cv_1se(const Dataset& ds, double alpha_mix, std::size_t folds, std::size_t grid_size,
                 std::uint64_t seed);

std::size_t one_se_index(const std::vector<double>& mean_error, const std::vector<double>& std_error);

}  // namespace stabsel
