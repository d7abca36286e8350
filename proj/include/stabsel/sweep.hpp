#pragma once

// Correct/incorrect selection counts over a (zeta, xi) elicitation grid.
// For the relevant panel every signal variable receives the cell's elicited
// prior and the panel value is how many of them are selected; for the
// irrelevant panel every noise variable receives it and the value is how many
// of them are (wrongly) selected. Selection uses posterior means only.

#include <string>
#include <string_view>
#include <vector>

#include "stabsel/data.hpp"
#include "stabsel/stability.hpp"

namespace stabsel {

std::vector<double> default_zeta_grid();  // 0, 0.1, ..., 0.5
std::vector<double> default_xi_grid();    // 0, 0.1, ..., 1.0

struct SweepCell {
  double true_positives = 0.0;
  double false_positives = 0.0;
};

enum class Panel { Relevant, Irrelevant };

struct SweepGrid {
  std::vector<double> zeta_grid;
  std::vector<double> xi_grid;
  std::vector<SweepCell> cells;  // row-major: zeta outer, xi inner
  std::string mode;

  const SweepCell& at(std::size_t zi, std::size_t xi) const { return cells[zi * xi_grid.size() + xi]; }
  double value(Panel panel, std::size_t zi, std::size_t xi) const {
    return panel == Panel::Relevant ? at(zi, xi).true_positives : at(zi, xi).false_positives;
  }
};

void validate_grids(const std::vector<double>& zeta_grid, const std::vector<double>& xi_grid);

/// One selection-count vector (n_j out of b) against the grid.
SweepGrid sweep_counts(std::span<const std::size_t> counts, std::size_t b, std::span<const std::size_t> truth,
                       const std::vector<double>& zeta_grid, const std::vector<double>& xi_grid, double pi_thr);

/// Fixed-frequency mode: counts are round(f_j * b).
SweepGrid sweep_fixed_frequencies(std::span<const double> freqs, std::size_t b, std::span<const std::size_t> truth,
                                  const std::vector<double>& zeta_grid, const std::vector<double>& xi_grid,
                                  double pi_thr);

struct SweepConfig {
  std::vector<double> zeta_grid = default_zeta_grid();
  std::vector<double> xi_grid = default_xi_grid();
  SyntheticConfig scenario;
  std::size_t replications = 20;
  double pi_thr = 0.6;
  /// b, seed and net (alpha_mix, tol, max_iter). net.lambda is used only when
  /// auto_lambda is false.
  /// Defaults to elastic-net mixing 0.2 with the response-sd ridge scale.
  StabilityConfig stability = default_stability();
  bool auto_lambda = true;
  std::size_t folds = 10;
  std::size_t grid_size = 100;

  void validate() const;

  static StabilityConfig default_stability() {
    StabilityConfig st;
    st.net.alpha_mix = 0.2;
    st.net.ridge_scale = RidgeScale::ResponseSd;
    return st;
  }
};

struct SweepOptions {
  std::size_t threads = 1;
  WarningSink warn;
};

struct SweepResult {
  /// Mean over replications of each replication's panel counts.
  SweepGrid per_replication;
  /// Mean selection frequency of every variable across replications.
  std::vector<double> mean_frequencies;
  /// Fixed-frequency mode applied to mean_frequencies.
  SweepGrid on_mean_frequencies;
  std::vector<double> lambdas;
  std::vector<std::size_t> truth;
};

/// Replication r uses data seed mix_seed(scenario.seed, r), CV seed
/// mix_seed(data seed, 1) and stability seed mix_seed(stability.seed, r).
/// The selection matrix of a replication is computed once and reused by
/// every cell.
SweepResult run_sweep(const SweepConfig& cfg, const SweepOptions& opts = {});

/// Columns zeta, xi, value.
std::string panel_to_csv(const SweepGrid& grid, Panel panel);

}  // namespace stabsel
