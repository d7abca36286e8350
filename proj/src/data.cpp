#include "stabsel/data.hpp"

#include <cmath>
#include <json.hpp>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "stabsel/csv.hpp"
#include "stabsel/kernels.hpp"
#include "stabsel/rng.hpp"

namespace stabsel {

void Dataset::validate() const {
  if (x.rows() != y.size()) throw std::invalid_argument("dataset: x and y row counts differ");
  if (x.cols() < 1) throw std::invalid_argument("dataset: need at least one covariate");
  if (names.size() != p()) throw std::invalid_argument("dataset: names/columns mismatch");
  if (!y.allFinite()) throw std::invalid_argument("dataset: non-finite response value");
  if (!x.allFinite()) throw std::invalid_argument("dataset: non-finite covariate value");
  std::unordered_set<std::string> seen;
  for (const auto& nm : names) {
    if (!seen.insert(nm).second) throw std::invalid_argument("dataset: duplicate variable name '" + nm + "'");
  }
  if (truth) {
    for (std::size_t j : *truth) {
      if (j >= p()) throw std::invalid_argument("dataset: truth index out of range");
    }
  }
}

void Dataset::require_analyzable() const {
  validate();
  if (n() < 4) throw std::invalid_argument("dataset: need at least 4 observations, have " + std::to_string(n()));
}

Dataset parse_csv(std::string_view text, std::string_view response_column, std::string_view source) {
  const csv::Table table = csv::parse(text, source);
  const std::ptrdiff_t yc = table.column(response_column);
  if (yc < 0) {
    throw std::invalid_argument(std::string(source) + ": missing response column '" +
                                std::string(response_column) + "'");
  }
  const std::size_t ncols = table.header.size();
  const std::size_t n = table.rows.size();
  Dataset ds;
  ds.y.resize(static_cast<Eigen::Index>(n));
  ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ncols - 1));
  for (std::size_t c = 0; c < ncols; ++c) {
    if (static_cast<std::ptrdiff_t>(c) != yc) ds.names.push_back(table.header[c]);
  }
  for (std::size_t r = 0; r < n; ++r) {
    Eigen::Index xc = 0;
    for (std::size_t c = 0; c < ncols; ++c) {
      double v = 0.0;
      if (!csv::try_parse_double(table.rows[r][c], v)) {
        throw ParseError(std::string(source) + ": non-numeric cell '" + table.rows[r][c] + "' at line " +
                         std::to_string(table.line_numbers[r]) + ", column '" + table.header[c] + "'");
      }
      if (static_cast<std::ptrdiff_t>(c) == yc) {
        ds.y(static_cast<Eigen::Index>(r)) = v;
      } else {
        ds.x(static_cast<Eigen::Index>(r), xc++) = v;
      }
    }
  }
  ds.validate();
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, std::string_view response_column) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("input file not found: " + path.string());
  return parse_csv(csv::read_text(path), response_column, path.string());
}

void write_csv(const std::filesystem::path& path, const Dataset& ds, std::string_view response_name) {
  std::string out(response_name);
  for (const auto& nm : ds.names) out += "," + nm;
  out += '\n';
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    out += csv::format_double(ds.y(i));
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
      out += ',';
      out += csv::format_double(ds.x(i, j));
    }
    out += '\n';
  }
  csv::write_text(path, out);
}

double column_sd(const Eigen::MatrixXd& x, Eigen::Index j) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 2) return 0.0;
  const auto& k = kernels::active();
  const double* col = x.col(j).data();
  const double mean = k.sum(col, n) / static_cast<double>(n);
  return std::sqrt(k.sum_sq_dev(col, mean, n) / static_cast<double>(n - 1));
}

namespace {

// Returns true if the column was constant (and zeroes it).
bool standardize_column(double* col, std::size_t n, double& center, double& scale) {
  const auto& k = kernels::active();
  center = k.sum(col, n) / static_cast<double>(n);
  const double sd = n > 1 ? std::sqrt(k.sum_sq_dev(col, center, n) / static_cast<double>(n - 1)) : 0.0;
  if (!(sd > 1e-12 * (1.0 + std::abs(center)))) {
    for (std::size_t i = 0; i < n; ++i) col[i] = 0.0;
    scale = 0.0;
    return true;
  }
  scale = sd;
  k.shift_scale(col, center, 1.0 / sd, n);
  return false;
}

}  // namespace

Standardized standardize_lenient(const Eigen::MatrixXd& x) {
  Standardized out{x, {}, {}, {}};
  const auto n = static_cast<std::size_t>(x.rows());
  out.center.resize(static_cast<std::size_t>(x.cols()));
  out.scale.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (standardize_column(out.x.col(j).data(), n, out.center[ju], out.scale[ju])) {
      out.constant_columns.push_back(ju);
    }
  }
  return out;
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& x, std::span<const std::string> names) {
  Standardized s = standardize_lenient(x);
  if (!s.constant_columns.empty()) {
    const std::size_t j = s.constant_columns.front();
    const std::string label = j < names.size() ? "'" + names[j] + "'" : "#" + std::to_string(j + 1);
    throw std::invalid_argument("standardize: column " + label + " is constant");
  }
  return std::move(s.x);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::CorrelatedBlocks: return "correlated_blocks";
    case Scenario::Decaying: return "decaying";
    case Scenario::Independent: return "independent";
  }
  return "unknown";
}

Scenario scenario_from_string(std::string_view s) {
  if (s == "correlated_blocks" || s == "1") return Scenario::CorrelatedBlocks;
  if (s == "decaying" || s == "2") return Scenario::Decaying;
  if (s == "independent" || s == "identity") return Scenario::Independent;
  throw std::invalid_argument("unknown scenario '" + std::string(s) + "'");
}

namespace {
std::size_t min_p(Scenario s) { return s == Scenario::Decaying ? 4 : 6; }
}  // namespace

void SyntheticConfig::validate() const {
  if (n < 4) throw std::invalid_argument("synthetic: n must be at least 4");
  if (p < min_p(scenario)) {
    throw std::invalid_argument("synthetic: scenario " + std::string(to_string(scenario)) + " needs p >= " +
                                std::to_string(min_p(scenario)));
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("synthetic: sigma must be >= 0");
}

Eigen::MatrixXd scenario_covariance(Scenario s, std::size_t p) {
  const auto pp = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(pp, pp);
  switch (s) {
    case Scenario::CorrelatedBlocks: {
      auto set = [&](Eigen::Index i, Eigen::Index j) { sigma(i, j) = sigma(j, i) = 0.8; };
      set(0, 1);
      set(2, 3);
      set(2, 4);
      set(3, 4);
      break;
    }
    case Scenario::Decaying:
      for (Eigen::Index i = 0; i < pp; ++i) {
        for (Eigen::Index j = 0; j < pp; ++j) sigma(i, j) = std::pow(0.9, std::abs(i - j));
      }
      break;
    case Scenario::Independent:
      break;
  }
  return sigma;
}

Eigen::VectorXd scenario_coefficients(Scenario s, std::size_t p) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  if (s == Scenario::Decaying) {
    beta.head(4) << 0.5, 0.4, 0.3, 0.2;
  } else {
    beta.head(6) << 0.9, 0.9, 0.7, 0.7, 0.7, 1.5;
  }
  return beta;
}

Dataset gen_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const auto p = static_cast<Eigen::Index>(cfg.p);
  const Eigen::LLT<Eigen::MatrixXd> llt(scenario_covariance(cfg.scenario, cfg.p));
  if (llt.info() != Eigen::Success) throw std::runtime_error("synthetic: covariance is not positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();

  Rng rng(cfg.seed);
  Eigen::MatrixXd z(p, n);  // column i holds the standard normals for row i
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(j, i) = rng.normal();
  }
  Dataset ds;
  ds.x = (lower * z).transpose();
  const Eigen::VectorXd beta = scenario_coefficients(cfg.scenario, cfg.p);
  ds.y = ds.x * beta;
  for (Eigen::Index i = 0; i < n; ++i) ds.y(i) += cfg.sigma * rng.normal();

  ds.names.reserve(cfg.p);
  for (std::size_t j = 0; j < cfg.p; ++j) ds.names.push_back("x" + std::to_string(j + 1));
  std::vector<std::size_t> truth;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (beta(j) != 0.0) truth.push_back(static_cast<std::size_t>(j));
  }
  ds.truth = std::move(truth);
  return ds;
}

void write_synthetic_meta(const std::filesystem::path& path, const SyntheticConfig& cfg, const Dataset& ds) {
  nlohmann::ordered_json meta;
  meta["scenario"] = to_string(cfg.scenario);
  meta["seed"] = cfg.seed;
  meta["n"] = cfg.n;
  meta["p"] = cfg.p;
  meta["sigma"] = cfg.sigma;
  std::vector<std::size_t> truth;
  if (ds.truth) {
    for (std::size_t j : *ds.truth) truth.push_back(j + 1);
  }
  meta["truth"] = truth;
  csv::write_text(path, meta.dump(2) + "\n");
}

}  // namespace stabsel
