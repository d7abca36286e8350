#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stabsel {

/// Response vector plus column-major design matrix. `truth` holds 0-based
/// indices of the signal variables for synthetic data; files and reports use
/// 1-based indices.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  std::vector<std::string> names;
  std::optional<std::vector<std::size_t>> truth;

  std::size_t n() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(x.cols()); }

  /// Shape, finiteness, name uniqueness and truth bounds. Analysis entry
  /// points additionally need n >= 4 (see require_analyzable).
  void validate() const;
  void require_analyzable() const;
};

/// Reads a header-first numeric CSV; `response_column` becomes y and the
/// remaining columns, in header order, become x.
Dataset load_csv(const std::filesystem::path& path, std::string_view response_column);
Dataset parse_csv(std::string_view text, std::string_view response_column,
                  std::string_view source = "<memory>");

/// Response column first, then the covariates.
void write_csv(const std::filesystem::path& path, const Dataset& ds,
               std::string_view response_name = "y");

// ---------------------------------------------------------------------------
// Standardization (center to mean 0, scale to sample sd 1 with denominator n-1)

struct Standardized {
  Eigen::MatrixXd x;
  std::vector<double> center;
  std::vector<double> scale;
  /// Columns with zero variance; zeroed in `x` and given scale 0.
  std::vector<std::size_t> constant_columns;
};

/// Throws std::invalid_argument naming the first constant column.
Eigen::MatrixXd standardize(const Eigen::MatrixXd& x, std::span<const std::string> names = {});

/// Same transform, but constant columns are recorded instead of rejected.
Standardized standardize_lenient(const Eigen::MatrixXd& x);

/// Sample sd with denominator n-1.
double column_sd(const Eigen::MatrixXd& x, Eigen::Index j);

// ---------------------------------------------------------------------------
// Synthetic data

enum class Scenario {
  CorrelatedBlocks,  // identity Sigma with 0.8 within {x1,x2} and {x3,x4,x5}
  Decaying,          // Sigma_ij = 0.9^|i-j|
  Independent,       // identity Sigma, CorrelatedBlocks coefficients
};

std::string_view to_string(Scenario s);
Scenario scenario_from_string(std::string_view s);

struct SyntheticConfig {
  Scenario scenario = Scenario::CorrelatedBlocks;
  std::size_t n = 50;
  std::size_t p = 500;
  double sigma = 2.0;
  std::uint64_t seed = 1;

  void validate() const;
};

Eigen::MatrixXd scenario_covariance(Scenario s, std::size_t p);
Eigen::VectorXd scenario_coefficients(Scenario s, std::size_t p);

/// Rows of x ~ N(0, Sigma) via the Cholesky factor of Sigma, y = x beta + eps.
/// All draws come from one Rng seeded with cfg.seed: the n*p standard normals
/// for x row by row, then the n noise terms.
Dataset gen_synthetic(const SyntheticConfig& cfg);

/// Plain JSON sidecar with scenario, seed, sizes and 1-based truth indices.
void write_synthetic_meta(const std::filesystem::path& path, const SyntheticConfig& cfg,
                          const Dataset& ds);

}  // namespace stabsel
