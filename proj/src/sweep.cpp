#include "stabsel/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stabsel/bayes.hpp"
#include "stabsel/csv.hpp"
#include "stabsel/parallel.hpp"
#include "stabsel/rng.hpp"
#include "stabsel/solver.hpp"

namespace stabsel {

namespace {
std::vector<double> tenths(int count) {
  std::vector<double> g;
  for (int i = 0; i < count; ++i) g.push_back(i / 10.0);
  return g;
}
}  // namespace

std::vector<double> default_zeta_grid() { return tenths(6); }
std::vector<double> default_xi_grid() { return tenths(11); }

void validate_grids(const std::vector<double>& zeta_grid, const std::vector<double>& xi_grid) {
  if (zeta_grid.empty() || xi_grid.empty()) throw std::invalid_argument("sweep: grids must be nonempty");
  if (!std::is_sorted(zeta_grid.begin(), zeta_grid.end()) || !std::is_sorted(xi_grid.begin(), xi_grid.end())) {
    throw std::invalid_argument("sweep: grids must be sorted ascending");
  }
  if (zeta_grid.front() < 0.0 || zeta_grid.back() > 0.5) throw std::invalid_argument("sweep: zeta grid outside [0, 0.5]");
  if (xi_grid.front() < 0.0 || xi_grid.back() > 1.0) throw std::invalid_argument("sweep: xi grid outside [0, 1]");
}

SweepGrid sweep_counts(std::span<const std::size_t> counts, std::size_t b, std::span<const std::size_t> truth,
                       const std::vector<double>& zeta_grid, const std::vector<double>& xi_grid, double pi_thr) {
  validate_grids(zeta_grid, xi_grid);
  if (!(pi_thr > 0.0 && pi_thr < 1.0)) throw std::invalid_argument("pi_thr must be in (0, 1)");
  std::vector<char> relevant(counts.size(), 0);
  for (std::size_t j : truth) {
    if (j >= counts.size()) throw std::invalid_argument("sweep: truth index out of range");
    relevant[j] = 1;
  }
  SweepGrid g{zeta_grid, xi_grid, {}, "counts"};
  g.cells.reserve(zeta_grid.size() * xi_grid.size());
  for (double zeta : zeta_grid) {
    for (double xi : xi_grid) {
      const PriorSpec pr = elicit(zeta, xi, b);
      SweepCell cell;
      for (std::size_t j = 0; j < counts.size(); ++j) {
        const BetaParams post = update({pr.alpha, pr.beta}, counts[j], b);
        if (beta_mean(post.alpha, post.beta) >= pi_thr) {
          (relevant[j] ? cell.true_positives : cell.false_positives) += 1.0;
        }
      }
      g.cells.push_back(cell);
    }
  }
  return g;
}

SweepGrid sweep_fixed_frequencies(std::span<const double> freqs, std::size_t b, std::span<const std::size_t> truth,
                                  const std::vector<double>& zeta_grid, const std::vector<double>& xi_grid,
                                  double pi_thr) {
  std::vector<std::size_t> counts(freqs.size());
  for (std::size_t j = 0; j < freqs.size(); ++j) {
    if (!(freqs[j] >= 0.0 && freqs[j] <= 1.0)) throw std::invalid_argument("sweep: frequency outside [0, 1]");
    counts[j] = static_cast<std::size_t>(std::llround(freqs[j] * static_cast<double>(b)));
  }
  SweepGrid g = sweep_counts(counts, b, truth, zeta_grid, xi_grid, pi_thr);
  g.mode = "fixed_frequency";
  return g;
}

void SweepConfig::validate() const {
  validate_grids(zeta_grid, xi_grid);
  scenario.validate();
  if (replications < 1) throw std::invalid_argument("sweep: replications must be at least 1");
  if (!(pi_thr > 0.0 && pi_thr < 1.0)) throw std::invalid_argument("pi_thr must be in (0, 1)");
  if (stability.b < 4) throw std::invalid_argument("sweep: B must be at least 4 for elicitation");
  stability.validate();
}

SweepResult run_sweep(const SweepConfig& cfg, const SweepOptions& opts) {
  cfg.validate();
  const std::size_t reps = cfg.replications;
  std::vector<std::vector<std::size_t>> counts(reps);
  std::vector<double> lambdas(reps, 0.0);
  std::vector<std::size_t> truth;

  {
    SyntheticConfig probe = cfg.scenario;
    const Eigen::VectorXd beta = scenario_coefficients(probe.scenario, probe.p);
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      if (beta(j) != 0.0) truth.push_back(static_cast<std::size_t>(j));
    }
  }

  parallel_for(reps, opts.threads, [&](std::size_t r) {
    SyntheticConfig sc = cfg.scenario;
    sc.seed = mix_seed(cfg.scenario.seed, r);
    const Dataset ds = gen_synthetic(sc);
    StabilityConfig st = cfg.stability;
    st.seed = mix_seed(cfg.stability.seed, r);
    if (cfg.auto_lambda) {
      CvOptions cv;
      cv.alpha_mix = st.net.alpha_mix;
      cv.ridge_scale = st.net.ridge_scale;
      cv.folds = cfg.folds;
      cv.grid_size = cfg.grid_size;
      cv.seed = mix_seed(sc.seed, 1);
      cv.tol = st.net.tol;
      cv.max_iter = st.net.max_iter;
      st.net.lambda = cross_validate(ds, cv).chosen.lambda;
    }
    lambdas[r] = st.net.lambda;
    StabilityOptions so;
    so.warn = opts.warn;
    counts[r] = run_stability(ds, st, so).counts();
  });

  const std::size_t b = cfg.stability.b;
  const std::size_t p = cfg.scenario.p;
  SweepResult res;
  res.truth = truth;
  res.lambdas = lambdas;
  res.mean_frequencies.assign(p, 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    const SweepGrid g = sweep_counts(counts[r], b, truth, cfg.zeta_grid, cfg.xi_grid, cfg.pi_thr);
    if (r == 0) {
      res.per_replication = g;
    } else {
      for (std::size_t c = 0; c < g.cells.size(); ++c) {
        res.per_replication.cells[c].true_positives += g.cells[c].true_positives;
        res.per_replication.cells[c].false_positives += g.cells[c].false_positives;
      }
    }
    for (std::size_t j = 0; j < p; ++j) res.mean_frequencies[j] += static_cast<double>(counts[r][j]);
  }
  for (auto& c : res.per_replication.cells) {
    c.true_positives /= static_cast<double>(reps);
    c.false_positives /= static_cast<double>(reps);
  }
  res.per_replication.mode = "replication_mean";
  for (double& f : res.mean_frequencies) f /= static_cast<double>(reps * b);
  res.on_mean_frequencies =
      sweep_fixed_frequencies(res.mean_frequencies, b, truth, cfg.zeta_grid, cfg.xi_grid, cfg.pi_thr);
  return res;
}

std::string panel_to_csv(const SweepGrid& grid, Panel panel) {
  std::string out = "zeta,xi,value\n";
  for (std::size_t zi = 0; zi < grid.zeta_grid.size(); ++zi) {
    for (std::size_t xi = 0; xi < grid.xi_grid.size(); ++xi) {
      out += csv::format_double(grid.zeta_grid[zi]) + ',' + csv::format_double(grid.xi_grid[xi]) + ',' +
             csv::format_double(grid.value(panel, zi, xi)) + '\n';
    }
  }
  return out;
}

}  // namespace stabsel
