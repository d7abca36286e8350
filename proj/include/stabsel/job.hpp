#pragma once

// A reproducible selection job: input data, lambda selection, stability
// subsampling and posterior reporting, configured by one JSON document.
//
// {
//   "input": {"synthetic": {"scenario": "correlated_blocks", "n": 50, "p": 500,
//                           "sigma": 2, "seed": 1}}
//            | {"csv": {"path": "data.csv", "response": "y"}},
//   "selector": "auto-1se" | {"lambda": 0.12},
//   "alpha_mix": 0.2, "ridge_scale": "response_sd" | "unit",
//   "folds": 10, "grid_size": 100, "cv_seed": 1, "tol": 1e-7, "max_iter": 100000,
//   "stability": {"b": 100, "seed": 1},
//   "priors": "non-informative" | "priors.csv",
//   "pi_thr": 0.6, "ci_level": 0.95, "output_dir": "out", "threads": 0
// }
//
// Every key is optional; unknown keys are rejected.

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stabsel/bayes.hpp"
#include "stabsel/data.hpp"
#include "stabsel/solver.hpp"
#include "stabsel/stability.hpp"
#include "stabsel/sweep.hpp"

namespace stabsel {

struct CsvInput {
  std::string path;
  std::string response = "y";
};

struct JobConfig {
  std::variant<SyntheticConfig, CsvInput> input = SyntheticConfig{};
  bool auto_lambda = true;
  double lambda = 0.0;  // used when !auto_lambda
  double alpha_mix = 1.0;
  RidgeScale ridge_scale = RidgeScale::ResponseSd;
  std::size_t folds = 10;
  std::size_t grid_size = 100;
  std::uint64_t cv_seed = 1;
  double tol = 1e-7;
  std::size_t max_iter = 100000;
  std::size_t b = 100;
  std::uint64_t stability_seed = 1;
  std::optional<std::string> priors_path;  // empty: flat priors
  double pi_thr = 0.6;
  double ci_level = 0.95;
  std::string output_dir = "stabsel_out";
  std::size_t threads = 0;

  void validate() const;
  NetConfig net() const;
};

/// Throws ParseError for malformed JSON or wrong types, std::invalid_argument
/// for out-of-range values.
JobConfig job_config_from_json(const nlohmann::json& j);
JobConfig parse_job_config(std::string_view text);
JobConfig load_job_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const JobConfig& cfg);

SyntheticConfig synthetic_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SyntheticConfig& cfg);

Dataset load_input(const JobConfig& cfg);

struct SelectionRun {
  Dataset data;
  double lambda = 0.0;
  std::optional<CvResult> cv;
  SelectionMatrix matrix;
};

/// Loads the input, chooses lambda (CV 1-SE on the full data unless fixed),
/// and runs stability selection.
SelectionRun run_selection(const JobConfig& cfg, const StabilityOptions& opts);

std::vector<PriorSpec> load_priors(const JobConfig& cfg, const std::vector<std::string>& names, std::size_t b);

/// Writes selection_matrix.csv (+ .meta.json), frequencies.csv,
/// posteriors.csv, config.json and job_meta.json into cfg.output_dir. Only
/// job_meta.json carries a timestamp.
void write_run_artifacts(const JobConfig& cfg, const SelectionRun& run, std::span<const VariableReport> report);

std::string frequencies_to_csv(const SelectionMatrix& m);

// ---------------------------------------------------------------------------
// Sweep jobs
//
// {
//   "mode": "stochastic" | "fixed",
//   "scenario": {...synthetic...}, "replications": 20,
//   "selector": "auto-1se" | {"lambda": x}, "alpha_mix": 0.2,
//   "ridge_scale": "response_sd", "folds": 10,
//   "grid_size": 100, "b": 100, "seed": 1, "pi_thr": 0.6,
//   "zeta_grid": [...], "xi_grid": [...],
//   "frequencies": "freq.csv",        // fixed mode: columns name,frequency
//   "truth": [1, 2, 3],               // fixed mode: 1-based signal indices
//   "output_dir": "sweep_out", "threads": 0
// }

enum class SweepMode { Stochastic, Fixed };

struct SweepJob {
  SweepMode mode = SweepMode::Stochastic;
  SweepConfig sweep;
  std::optional<std::string> frequencies_path;
  std::vector<std::size_t> truth;  // 0-based
  std::string output_dir = "sweep_out";
  std::size_t threads = 0;

  void validate() const;
};

SweepJob sweep_job_from_json(const nlohmann::json& j);
SweepJob load_sweep_job(const std::filesystem::path& path);

/// Reads name,frequency rows (the frequencies.csv written by a run).
std::vector<double> read_frequency_file(const std::filesystem::path& path);

struct SweepJobResult {
  SweepGrid grid;  // the grid written to the two panel files
  std::optional<SweepResult> stochastic;
};

/// Writes relevant_panel.csv and irrelevant_panel.csv plus sweep_meta.json.
/// Stochastic mode also writes mean_frequencies.csv and the panels computed
/// on the mean frequency vector (*_panel_mean_frequency.csv).
SweepJobResult run_sweep_job(const SweepJob& job, const SweepOptions& opts);

}  // namespace stabsel
