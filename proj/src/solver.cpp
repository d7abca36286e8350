#include "stabsel/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "stabsel/kernels.hpp"
#include "stabsel/parallel.hpp"
#include "stabsel/rng.hpp"

namespace stabsel {

void NetConfig::validate() const {
  if (!(alpha_mix > 0.0 && alpha_mix <= 1.0)) throw std::invalid_argument("alpha_mix must be in (0, 1]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (max_iter == 0) throw std::invalid_argument("max_iter must be positive");
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

namespace {

void check_standardized(const Eigen::MatrixXd& x) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto& k = kernels::active();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double* col = x.col(j).data();
    const double mean = k.sum(col, n) / static_cast<double>(n);
    const double ss = k.sum_sq_dev(col, mean, n);
    if (ss == 0.0 && mean == 0.0) continue;  // dropped column
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (std::abs(mean) > 1e-6 || std::abs(sd - 1.0) > 1e-6) {
      throw std::invalid_argument("fit: column " + std::to_string(j + 1) +
                                  " is not standardized (mean " + std::to_string(mean) + ", sd " +
                                  std::to_string(sd) + ")");
    }
  }
}

}  // namespace

double penalized_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double intercept,
                           const Eigen::VectorXd& beta, const NetConfig& cfg) {
  const double n = static_cast<double>(x.rows());
  const Eigen::VectorXd r = (y.array() - intercept).matrix() - x * beta;
  return r.squaredNorm() / (2.0 * n) + cfg.lambda * cfg.alpha_mix * beta.lpNorm<1>() +
         0.5 * ridge_weight(cfg, y) * beta.squaredNorm();
}

double ridge_weight(const NetConfig& cfg, const Eigen::VectorXd& y) {
  const double l2 = cfg.lambda * (1.0 - cfg.alpha_mix);
  if (cfg.ridge_scale == RidgeScale::Unit || l2 == 0.0) return l2;
  const double sd = std::sqrt((y.array() - y.mean()).square().mean());
  return sd > 0.0 ? l2 / sd : l2;
}

std::string_view to_string(RidgeScale r) { return r == RidgeScale::Unit ? "unit" : "response_sd"; }

RidgeScale ridge_scale_from_string(std::string_view s) {
  if (s == "unit") return RidgeScale::Unit;
  if (s == "response_sd") return RidgeScale::ResponseSd;
  throw std::invalid_argument("unknown ridge_scale '" + std::string(s) + "' (expected unit or response_sd)");
}

FitResult fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const NetConfig& cfg,
              const FitOptions& opts) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  const auto p = static_cast<std::size_t>(x.cols());
  if (y.size() != x.rows()) throw std::invalid_argument("fit: x and y row counts differ");
  if (n < 2) throw std::invalid_argument("fit: need at least 2 observations");
  if (opts.check_standardized) check_standardized(x);

  const auto& k = kernels::active();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double l1 = cfg.lambda * cfg.alpha_mix;
  const double l2 = ridge_weight(cfg, y);

  FitResult out;
  out.intercept = k.sum(y.data(), n) * inv_n;
  out.beta = opts.warm_start ? *opts.warm_start : Eigen::VectorXd::Zero(x.cols());
  if (static_cast<std::size_t>(out.beta.size()) != p) throw std::invalid_argument("fit: warm start has wrong length");

  Eigen::VectorXd r = (y.array() - out.intercept).matrix();
  if (opts.warm_start) r.noalias() -= x * out.beta;

  std::vector<double> v(p);
  std::vector<char> in_active(p, 0);
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < p; ++j) {
    const double* col = x.col(static_cast<Eigen::Index>(j)).data();
    v[j] = k.dot(col, col, n) * inv_n;
    if (v[j] == 0.0) out.beta(static_cast<Eigen::Index>(j)) = 0.0;
    if (out.beta(static_cast<Eigen::Index>(j)) != 0.0) {
      in_active[j] = 1;
      active.push_back(j);
    }
  }

  auto update = [&](std::size_t j) -> double {
    if (v[j] == 0.0) return 0.0;
    const double* col = x.col(static_cast<Eigen::Index>(j)).data();
    const double old = out.beta(static_cast<Eigen::Index>(j));
    const double z = k.dot(col, r.data(), n) * inv_n + v[j] * old;
    const double nb = soft_threshold(z, l1) / (v[j] + l2);
    if (nb == old) return 0.0;
    k.axpy(old - nb, col, r.data(), n);
    out.beta(static_cast<Eigen::Index>(j)) = nb;
    if (nb != 0.0 && !in_active[j]) {
      in_active[j] = 1;
      active.push_back(j);
    }
    return std::abs(nb - old);
  };

  // Full sweeps alternate with sweeps restricted to the active set; the fit
  // is converged only when a full sweep moves no coefficient by tol or more.
  bool full = true;
  while (out.iterations < cfg.max_iter) {
    double max_delta = 0.0;
    if (full) {
      for (std::size_t j = 0; j < p; ++j) max_delta = std::max(max_delta, update(j));
    } else {
      for (std::size_t i = 0; i < active.size(); ++i) max_delta = std::max(max_delta, update(active[i]));
    }
    ++out.iterations;
    if (opts.on_sweep) opts.on_sweep(out.iterations, penalized_objective(x, y, out.intercept, out.beta, cfg));
    if (max_delta < cfg.tol) {
      if (full) {
        out.converged = true;
        break;
      }
      full = true;
    } else {
      full = false;
    }
  }

  for (std::size_t j = 0; j < p; ++j) {
    if (out.beta(static_cast<Eigen::Index>(j)) != 0.0) out.support.push_back(j);
  }
  return out;
}

FitResult fit(const Dataset& ds, const NetConfig& cfg) {
  ds.validate();
  return fit(ds.x, ds.y, cfg);
}

double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha_mix) {
  if (!(alpha_mix > 0.0 && alpha_mix <= 1.0)) {
    throw std::invalid_argument("lambda_max: alpha_mix must be in (0, 1]");
  }
  const auto n = static_cast<std::size_t>(x.rows());
  const auto& k = kernels::active();
  const Eigen::VectorXd yc = (y.array() - k.sum(y.data(), n) / static_cast<double>(n)).matrix();
  double best = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    best = std::max(best, std::abs(k.dot(x.col(j).data(), yc.data(), n)));
  }
  return best / (static_cast<double>(n) * alpha_mix);
}

double lambda_max(const Dataset& ds, double alpha_mix) { return lambda_max(ds.x, ds.y, alpha_mix); }

std::vector<double> lambda_grid(double lmax, std::size_t n, std::size_t p, std::size_t grid_size) {
  if (grid_size == 0) throw std::invalid_argument("lambda_grid: grid_size must be positive");
  if (grid_size == 1) return {lmax};
  const double eps = p > n ? 1e-3 : 1e-4;
  std::vector<double> grid(grid_size);
  const double step = std::log(eps) / static_cast<double>(grid_size - 1);
  for (std::size_t i = 0; i < grid_size; ++i) grid[i] = lmax * std::exp(step * static_cast<double>(i));
  grid.front() = lmax;
  return grid;
}

std::size_t one_se_index(const std::vector<double>& mean_error, const std::vector<double>& std_error) {
  if (mean_error.empty()) throw std::invalid_argument("one_se_index: empty error curve");
  // Strict < keeps the earliest (largest-lambda) index on exact ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < mean_error.size(); ++i) {
    if (mean_error[i] < mean_error[best]) best = i;
  }
  const double bound = mean_error[best] + std_error[best];
  for (std::size_t i = 0; i <= best; ++i) {
    if (mean_error[i] <= bound) return i;
  }
  return best;
}

CvResult cross_validate(const Dataset& ds, const CvOptions& opts) {
  ds.require_analyzable();
  const std::size_t n = ds.n();
  const std::size_t folds = opts.folds;
  if (folds < 2) throw std::invalid_argument("cv: folds must be at least 2");
  if (n < folds) {
    throw std::invalid_argument("cv: " + std::to_string(folds) + " folds need at least as many rows, have " +
                                std::to_string(n));
  }
  NetConfig base{opts.alpha_mix, 0.0, opts.max_iter, opts.tol, opts.ridge_scale};
  base.validate();

  const Standardized full = standardize_lenient(ds.x);
  CvResult res;
  res.lambdas = lambda_grid(lambda_max(full.x, ds.y, opts.alpha_mix), n, ds.p(), opts.grid_size);
  const std::size_t grid = res.lambdas.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(opts.seed);
  rng.partial_shuffle(std::span<std::size_t>(order), n);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = i % folds;

  // fold_error[f * grid + g]
  std::vector<double> fold_error(folds * grid, 0.0);
  parallel_for(folds, opts.threads, [&](std::size_t f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    if (test.empty() || train.size() < 2) throw std::invalid_argument("cv: degenerate fold " + std::to_string(f + 1));

    const Standardized tr = standardize_lenient(ds.x(train, Eigen::all));
    const Eigen::VectorXd ytr = ds.y(train);
    Eigen::MatrixXd xte = ds.x(test, Eigen::all);
    for (Eigen::Index j = 0; j < xte.cols(); ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (tr.scale[ju] == 0.0) {
        xte.col(j).setZero();
      } else {
        xte.col(j) = (xte.col(j).array() - tr.center[ju]) / tr.scale[ju];
      }
    }
    const Eigen::VectorXd yte = ds.y(test);

    Eigen::VectorXd warm = Eigen::VectorXd::Zero(ds.x.cols());
    FitOptions fo;
    fo.check_standardized = false;
    for (std::size_t g = 0; g < grid; ++g) {
      NetConfig cfg = base;
      cfg.lambda = res.lambdas[g];
      fo.warm_start = &warm;
      FitResult fr = fit(tr.x, ytr, cfg, fo);
      const Eigen::VectorXd pred = (xte * fr.beta).array() + fr.intercept;
      fold_error[f * grid + g] = (yte - pred).squaredNorm() / static_cast<double>(test.size());
      warm = std::move(fr.beta);
    }
  });

  res.mean_error.assign(grid, 0.0);
  res.std_error.assign(grid, 0.0);
  const double kf = static_cast<double>(folds);
  for (std::size_t g = 0; g < grid; ++g) {
    double m = 0.0;
    for (std::size_t f = 0; f < folds; ++f) m += fold_error[f * grid + g];
    m /= kf;
    double ss = 0.0;
    for (std::size_t f = 0; f < folds; ++f) ss += (fold_error[f * grid + g] - m) * (fold_error[f * grid + g] - m);
    res.mean_error[g] = m;
    res.std_error[g] = std::sqrt(ss / (kf - 1.0)) / std::sqrt(kf);
  }
  res.min_index = static_cast<std::size_t>(
      std::min_element(res.mean_error.begin(), res.mean_error.end()) - res.mean_error.begin());
  res.chosen_index = one_se_index(res.mean_error, res.std_error);
  res.chosen = base;
  res.chosen.lambda = res.lambdas[res.chosen_index];
  return res;
}

NetConfig cv_1se(const Dataset& ds, double alpha_mix, std::size_t folds, std::size_t grid_size,
                 std::uint64_t seed) {
  CvOptions opts;
  opts.alpha_mix = alpha_mix;
  opts.folds = folds;
  opts.grid_size = grid_size;
  opts.seed = seed;
  return cross_validate(ds, opts).chosen;
}

}  // namespace stabsel
