#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "stabsel/data.hpp"
#include "stabsel/solver.hpp"

namespace stabsel {

struct StabilityConfig {
  std::size_t b = 100;
  NetConfig net;  // lambda fixed for every subsample
  std::uint64_t seed = 1;
  double pi_thr = 0.6;

  void validate() const;
};

/// B x p binary matrix of per-subsample selection outcomes.
class SelectionMatrix {
 public:
  SelectionMatrix() = default;
  SelectionMatrix(std::size_t b, std::vector<std::string> names, double lambda = 0.0, std::uint64_t seed = 0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  double lambda() const { return lambda_; }
  std::uint64_t seed() const { return seed_; }

  std::uint8_t at(std::size_t b, std::size_t j) const { return cells_[b * cols() + j]; }
  void set(std::size_t b, std::size_t j, bool selected) { cells_[b * cols() + j] = selected ? 1 : 0; }

  /// Column sums n_j.
  std::vector<std::size_t> counts() const;

  /// Copy with rows reordered: row i of the result is row order[i] of this.
  SelectionMatrix permuted_rows(const std::vector<std::size_t>& order) const;

  bool operator==(const SelectionMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::vector<std::string> names_;
  double lambda_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint8_t> cells_;
};

using WarningSink = std::function<void(std::string_view)>;

struct StabilityOptions {
  std::size_t threads = 1;
  /// Receives one message per (subsample, constant column) event. Defaults
  /// to standard error when empty.
  WarningSink warn;
};

/// Row indices of subsample b: floor(n/2) distinct indices, sorted, drawn
/// from Rng(mix_seed(seed, b)).
std::vector<std::size_t> subsample_indices(std::size_t n, std::uint64_t seed, std::size_t b);

/// Fits every half-size subsample at cfg.net.lambda. Each subsample is
/// standardized on its own rows; a covariate that is constant inside a
/// subsample is recorded as not selected for that row. Output does not
/// depend on the thread count.
SelectionMatrix run_stability(const Dataset& ds, const StabilityConfig& cfg, const StabilityOptions& opts = {});

std::vector<double> frequencies(const SelectionMatrix& m);

/// 0-based indices j with f_j >= pi_thr.
std::vector<std::size_t> stable_set_frequentist(const SelectionMatrix& m, double pi_thr);

/// Header = variable names, one 0/1 row per subsample.
std::string matrix_to_csv(const SelectionMatrix& m);
/// Metadata (lambda, seed) is not part of the CSV; pass it separately.
SelectionMatrix matrix_from_csv(std::string_view text, double lambda = 0.0, std::uint64_t seed = 0,
                                std::string_view source = "<memory>");

void write_matrix(const std::filesystem::path& csv_path, const SelectionMatrix& m);
/// Reads the CSV and, when present, the "<csv>.meta.json" sidecar.
SelectionMatrix read_matrix(const std::filesystem::path& csv_path);
std::filesystem::path matrix_meta_path(const std::filesystem::path& csv_path);

}  // namespace stabsel
