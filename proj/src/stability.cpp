#include "stabsel/stability.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include "stabsel/csv.hpp"
#include "stabsel/parallel.hpp"
#include "stabsel/rng.hpp"

namespace stabsel {

void StabilityConfig::validate() const {
  if (b < 1) throw std::invalid_argument("stability: B must be at least 1");
  if (!(pi_thr > 0.0 && pi_thr < 1.0)) throw std::invalid_argument("stability: pi_thr must be in (0, 1)");
  net.validate();
}

SelectionMatrix::SelectionMatrix(std::size_t b, std::vector<std::string> names, double lambda, std::uint64_t seed)
    : rows_(b), names_(std::move(names)), lambda_(lambda), seed_(seed), cells_(rows_ * names_.size(), 0) {}

std::vector<std::size_t> SelectionMatrix::counts() const {
  std::vector<std::size_t> out(cols(), 0);
  for (std::size_t b = 0; b < rows_; ++b) {
    for (std::size_t j = 0; j < cols(); ++j) out[j] += cells_[b * cols() + j];
  }
  return out;
}

SelectionMatrix SelectionMatrix::permuted_rows(const std::vector<std::size_t>& order) const {
  if (order.size() != rows_) throw std::invalid_argument("permuted_rows: order has wrong length");
  SelectionMatrix out(rows_, names_, lambda_, seed_);
  for (std::size_t b = 0; b < rows_; ++b) {
    std::copy_n(cells_.begin() + static_cast<std::ptrdiff_t>(order[b] * cols()), cols(),
                out.cells_.begin() + static_cast<std::ptrdiff_t>(b * cols()));
  }
  return out;
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::uint64_t seed, std::size_t b) {
  const std::size_t half = n / 2;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(mix_seed(seed, b));
  rng.partial_shuffle(std::span<std::size_t>(idx), half);
  idx.resize(half);
  std::sort(idx.begin(), idx.end());
  return idx;
}

SelectionMatrix run_stability(const Dataset& ds, const StabilityConfig& cfg, const StabilityOptions& opts) {
  cfg.validate();
  ds.require_analyzable();
  const std::size_t n = ds.n();
  if (n / 2 < 2) throw std::invalid_argument("stability: subsamples of floor(n/2) need at least 2 rows");

  SelectionMatrix m(cfg.b, ds.names, cfg.net.lambda, cfg.seed);
  std::mutex warn_mutex;
  auto warn = [&](const std::string& msg) {
    std::lock_guard lock(warn_mutex);
    if (opts.warn) {
      opts.warn(msg);
    } else {
      std::cerr << "warning: " << msg << '\n';
    }
  };

  parallel_for(cfg.b, opts.threads, [&](std::size_t b) {
    const auto rows = subsample_indices(n, cfg.seed, b);
    std::vector<Eigen::Index> ri(rows.begin(), rows.end());
    const Standardized sub = standardize_lenient(ds.x(ri, Eigen::all));
    for (std::size_t j : sub.constant_columns) {
      warn("subsample " + std::to_string(b + 1) + ": column '" + ds.names[j] +
           "' is constant; recorded as not selected");
    }
    FitOptions fo;
    fo.check_standardized = false;
    const FitResult fr = fit(sub.x, ds.y(ri), cfg.net, fo);
    for (std::size_t j : fr.support) m.set(b, j, true);
  });
  return m;
}

std::vector<double> frequencies(const SelectionMatrix& m) {
  const auto counts = m.counts();
  std::vector<double> f(counts.size(), 0.0);
  if (m.rows() == 0) return f;
  for (std::size_t j = 0; j < counts.size(); ++j) f[j] = static_cast<double>(counts[j]) / static_cast<double>(m.rows());
  return f;
}

std::vector<std::size_t> stable_set_frequentist(const SelectionMatrix& m, double pi_thr) {
  if (!(pi_thr > 0.0 && pi_thr < 1.0)) throw std::invalid_argument("pi_thr must be in (0, 1)");
  const auto f = frequencies(m);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (f[j] >= pi_thr) out.push_back(j);
  }
  return out;
}

std::string matrix_to_csv(const SelectionMatrix& m) {
  std::string out;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    if (j) out += ',';
    out += m.names()[j];
  }
  out += '\n';
  for (std::size_t b = 0; b < m.rows(); ++b) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += m.at(b, j) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

SelectionMatrix matrix_from_csv(std::string_view text, double lambda, std::uint64_t seed, std::string_view source) {
  const csv::Table t = csv::parse(text, source);
  SelectionMatrix m(t.rows.size(), t.header, lambda, seed);
  for (std::size_t b = 0; b < t.rows.size(); ++b) {
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      const std::string& c = t.rows[b][j];
      if (c != "0" && c != "1") {
        throw ParseError(std::string(source) + ": selection cell must be 0 or 1, got '" + c + "' at line " +
                         std::to_string(t.line_numbers[b]) + ", column '" + t.header[j] + "'");
      }
      m.set(b, j, c == "1");
    }
  }
  return m;
}

std::filesystem::path matrix_meta_path(const std::filesystem::path& csv_path) {
  return std::filesystem::path(csv_path.string() + ".meta.json");
}

void write_matrix(const std::filesystem::path& csv_path, const SelectionMatrix& m) {
  csv::write_text(csv_path, matrix_to_csv(m));
  nlohmann::ordered_json meta;
  meta["b"] = m.rows();
  meta["p"] = m.cols();
  meta["lambda"] = m.lambda();
  meta["seed"] = m.seed();
  meta["penalty_convention"] = kPenaltyConvention;
  csv::write_text(matrix_meta_path(csv_path), meta.dump(2) + "\n");
}

SelectionMatrix read_matrix(const std::filesystem::path& csv_path) {
  if (!std::filesystem::exists(csv_path)) throw std::runtime_error("selection matrix not found: " + csv_path.string());
  double lambda = 0.0;
  std::uint64_t seed = 0;
  const auto meta_path = matrix_meta_path(csv_path);
  if (std::filesystem::exists(meta_path)) {
    try {
      const auto meta = nlohmann::json::parse(csv::read_text(meta_path));
      lambda = meta.value("lambda", 0.0);
      seed = meta.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(meta_path.string() + ": " + e.what());
    }
  }
  return matrix_from_csv(csv::read_text(csv_path), lambda, seed, csv_path.string());
}

}  // namespace stabsel
