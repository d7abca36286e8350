#pragma once

// Beta-Binomial inference on selection counts.
//
// Each column of a selection matrix gives n_j selections out of B subsamples.
// With a Beta(alpha, beta) prior on the selection probability the posterior
// is Beta(alpha + n_j, beta + B - n_j). Priors either stay flat, Beta(1, 1),
// or are elicited from two answers:
//
//   zeta in [0, 0.5]: share of the final result the expert wants the prior to
//                     carry; gamma = floor(zeta B / (1 - zeta)) pseudo-rows.
//   xi in [0, 1]:     fraction of subsamples the expert expects to select the
//                     variable; alpha = floor(xi gamma), beta = gamma - alpha.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stabsel/stability.hpp"

namespace stabsel {

enum class PriorSource { NonInformative, Elicited, Explicit };
std::string_view to_string(PriorSource s);

struct PriorSpec {
  double alpha = 1.0;
  double beta = 1.0;
  PriorSource source = PriorSource::NonInformative;
  double zeta = 0.0;  // meaningful for Elicited
  double xi = 0.0;
  /// Clamp or fallback events raised while eliciting; empty otherwise.
  std::string note;

  double gamma() const { return alpha + beta; }

  static PriorSpec non_informative() { return {}; }
  /// Direct shapes; both must be >= 1.
  static PriorSpec from_shapes(double alpha, double beta);
};

/// Two-question elicitation. Rejects zeta > 0.5 ("prior may not outweigh
/// data"); zeta = 0 or gamma < 2 give the flat prior. alpha is clamped to
/// [1, gamma - 1] so both shapes stay >= 1.
PriorSpec elicit(double zeta, double xi, std::size_t b);

/// floor(v) that forgives representation error just below an integer, so
/// 0.7 * 100 floors to 70.
double floor_tolerant(double v);

struct BetaParams {
  double alpha;
  double beta;
};

/// Conjugate update with n selections out of b rows.
BetaParams update(BetaParams prior, std::size_t n, std::size_t b);

double beta_mean(double a, double b);
double beta_variance(double a, double b);

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction on the
/// side of the mode where it converges fast, reflecting with
/// I_x(a, b) = 1 - I_{1-x}(b, a) otherwise.
double reg_inc_beta(double x, double a, double b);

/// Beta quantile by bisection on reg_inc_beta, started at the mean, to an
/// interval width of 1e-10 (at most 80 halvings).
double beta_quantile(double prob, double a, double b);

/// Equal-tailed interval with total mass `level`.
std::pair<double, double> credible_interval(double alpha_post, double beta_post, double level);

struct PosteriorSummary {
  std::size_t n = 0;
  std::size_t b = 0;
  double alpha_post = 1.0;
  double beta_post = 1.0;
  double mean = 0.5;
  double variance = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  double ci_level = 0.95;
  bool selected = false;
};

/// `selected` is mean >= pi_thr when a threshold is given, false otherwise.
PosteriorSummary posterior(const PriorSpec& prior, std::size_t n, std::size_t b, double level = 0.95,
                           std::optional<double> pi_thr = std::nullopt);

// ---------------------------------------------------------------------------
// Variance surfaces

struct VarianceSurface {
  std::size_t b = 0;
  std::size_t gamma = 0;
  std::vector<std::size_t> n_values;
  std::vector<double> alpha_values;
  /// informative[i * alpha_values.size() + k]: variance of
  /// Beta(alpha_k + n_i, gamma - alpha_k + b - n_i).
  std::vector<double> informative;
  /// Flat-prior variance Beta(1 + n_i, 1 + b - n_i), one per n.
  std::vector<double> baseline;

  double at(std::size_t i, std::size_t k) const { return informative[i * alpha_values.size() + k]; }
};

/// Admissible alphas are [1, gamma - 1]; n values must not exceed b.
VarianceSurface variance_surface(std::size_t b, std::span<const std::size_t> n_values,
                                 std::span<const double> alpha_values, std::size_t gamma);

/// Integer alphas 1..gamma-1.
std::vector<double> alpha_range(std::size_t gamma);

/// Alpha maximizing the informative posterior variance: the posterior shape
/// sum is fixed at gamma + b, so the variance peaks where alpha + n is half of
/// it, clamped to [1, gamma - 1]. Equals b - n when gamma = b.
double max_variance_alpha(std::size_t b, std::size_t n, std::size_t gamma);

// ---------------------------------------------------------------------------
// Decisions

struct VariableReport {
  std::size_t index = 0;  // 0-based column
  std::string name;
  PriorSpec prior;
  PosteriorSummary post;
  double frequency = 0.0;
  bool frequentist_selected = false;
};

/// Posterior summaries for every column, sorted by descending posterior mean
/// (ties by column order).
std::vector<VariableReport> decision_report(const SelectionMatrix& m, std::span<const PriorSpec> priors,
                                            double pi_thr, double level = 0.95);
/// Same from column counts directly.
std::vector<VariableReport> decision_report(std::span<const std::size_t> counts, std::size_t b,
                                            std::span<const std::string> names,
                                            std::span<const PriorSpec> priors, double pi_thr,
                                            double level = 0.95);

/// name, n_j, alpha, beta, mean, variance, ci_low, ci_high, selected
/// (alpha and beta are the prior shapes).
std::string report_to_csv(std::span<const VariableReport> report);

// ---------------------------------------------------------------------------
// Prior files: CSV with a name column plus zeta,xi and/or alpha,beta columns.
// Each row fills exactly one of the two pairs.

struct PriorEntry {
  std::string name;
  std::optional<std::pair<double, double>> elicited;  // zeta, xi
  std::optional<std::pair<double, double>> shapes;    // alpha, beta
};

std::vector<PriorEntry> parse_prior_csv(std::string_view text, std::string_view source = "<memory>");
std::vector<PriorEntry> read_prior_file(const std::filesystem::path& path);
std::string priors_to_csv(std::span<const PriorEntry> entries);

/// One PriorSpec per name; unlisted names get the flat prior. Unknown or
/// duplicate names are rejected, as is an elicited gamma above b.
std::vector<PriorSpec> resolve_priors(std::span<const PriorEntry> entries, std::span<const std::string> names,
                                      std::size_t b);

}  // namespace stabsel
