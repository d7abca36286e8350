#include "stabsel/job.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <stdexcept>
#include <unordered_set>

#include "stabsel/csv.hpp"
#include "stabsel/parallel.hpp"

namespace stabsel {

namespace {

using json = nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw ParseError(std::string(where) + " must be an object");
  const std::unordered_set<std::string_view> ok(allowed);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw ParseError("unknown key '" + it.key() + "' in " + std::string(where));
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
    if (!v.is_number_unsigned()) {
      throw ParseError(std::string("'") + key + "' must be a non-negative integer");
    }
    out = v.get<T>();
  } else if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw ParseError(std::string("'") + key + "' must be a number");
    out = v.get<double>();
  } else {
    if (!v.is_string()) throw ParseError(std::string("'") + key + "' must be a string");
    out = v.get<std::string>();
  }
}

}  // namespace

void JobConfig::validate() const {
  if (const auto* sc = std::get_if<SyntheticConfig>(&input)) {
    sc->validate();
  } else if (std::get<CsvInput>(input).path.empty()) {
    throw std::invalid_argument("csv input needs a path");
  }
  net().validate();
  if (!auto_lambda && !(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (folds < 2) throw std::invalid_argument("folds must be at least 2");
  if (grid_size < 1) throw std::invalid_argument("grid_size must be positive");
  if (b < 1) throw std::invalid_argument("B must be at least 1");
  if (!(pi_thr > 0.0 && pi_thr < 1.0)) throw std::invalid_argument("pi_thr must be in (0, 1)");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw std::invalid_argument("ci_level must be in (0, 1)");
}

NetConfig JobConfig::net() const { return NetConfig{alpha_mix, auto_lambda ? 0.0 : lambda, max_iter, tol, ridge_scale}; }

SyntheticConfig synthetic_from_json(const json& j) {
  reject_unknown(j, {"scenario", "n", "p", "sigma", "seed"}, "synthetic");
  SyntheticConfig sc;
  std::string scenario(to_string(sc.scenario));
  read(j, "scenario", scenario);
  sc.scenario = scenario_from_string(scenario);
  read(j, "n", sc.n);
  read(j, "p", sc.p);
  read(j, "sigma", sc.sigma);
  read(j, "seed", sc.seed);
  return sc;
}

nlohmann::ordered_json to_json(const SyntheticConfig& sc) {
  nlohmann::ordered_json j;
  j["scenario"] = to_string(sc.scenario);
  j["n"] = sc.n;
  j["p"] = sc.p;
  j["sigma"] = sc.sigma;
  j["seed"] = sc.seed;
  return j;
}

JobConfig job_config_from_json(const json& j) {
  reject_unknown(j,
                 {"input", "selector", "alpha_mix", "ridge_scale", "folds", "grid_size", "cv_seed", "tol", "max_iter", "stability",
                  "priors", "pi_thr", "ci_level", "output_dir", "threads"},
                 "job config");
  JobConfig cfg;
  if (j.contains("input")) {
    const json& in = j.at("input");
    reject_unknown(in, {"synthetic", "csv"}, "input");
    if (in.contains("synthetic") == in.contains("csv")) {
      throw ParseError("input needs exactly one of 'synthetic' or 'csv'");
    }
    if (in.contains("synthetic")) {
      cfg.input = synthetic_from_json(in.at("synthetic"));
    } else {
      const json& c = in.at("csv");
      reject_unknown(c, {"path", "response"}, "csv");
      CsvInput ci;
      read(c, "path", ci.path);
      read(c, "response", ci.response);
      cfg.input = ci;
    }
  }
  if (j.contains("selector")) {
    const json& s = j.at("selector");
    if (s.is_string()) {
      if (s.get<std::string>() != "auto-1se") throw ParseError("selector must be \"auto-1se\" or {\"lambda\": x}");
      cfg.auto_lambda = true;
    } else {
      reject_unknown(s, {"lambda"}, "selector");
      if (!s.contains("lambda")) throw ParseError("selector object needs 'lambda'");
      read(s, "lambda", cfg.lambda);
      cfg.auto_lambda = false;
    }
  }
  read(j, "alpha_mix", cfg.alpha_mix);
  if (j.contains("ridge_scale")) {
    std::string rs;
    read(j, "ridge_scale", rs);
    cfg.ridge_scale = ridge_scale_from_string(rs);
  }
  read(j, "folds", cfg.folds);
  read(j, "grid_size", cfg.grid_size);
  read(j, "cv_seed", cfg.cv_seed);
  read(j, "tol", cfg.tol);
  read(j, "max_iter", cfg.max_iter);
  if (j.contains("stability")) {
    const json& s = j.at("stability");
    reject_unknown(s, {"b", "seed"}, "stability");
    read(s, "b", cfg.b);
    read(s, "seed", cfg.stability_seed);
  }
  if (j.contains("priors")) {
    std::string pr;
    read(j, "priors", pr);
    if (pr == "non-informative") {
      cfg.priors_path.reset();
    } else {
      cfg.priors_path = pr;
    }
  }
  read(j, "pi_thr", cfg.pi_thr);
  read(j, "ci_level", cfg.ci_level);
  read(j, "output_dir", cfg.output_dir);
  read(j, "threads", cfg.threads);
  cfg.validate();
  return cfg;
}

JobConfig parse_job_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  return job_config_from_json(j);
}

JobConfig load_job_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("config file not found: " + path.string());
  return parse_job_config(csv::read_text(path));
}

nlohmann::ordered_json to_json(const JobConfig& cfg) {
  nlohmann::ordered_json j;
  if (const auto* sc = std::get_if<SyntheticConfig>(&cfg.input)) {
    j["input"]["synthetic"] = to_json(*sc);
  } else {
    const auto& ci = std::get<CsvInput>(cfg.input);
    j["input"]["csv"] = {{"path", ci.path}, {"response", ci.response}};
  }
  if (cfg.auto_lambda) {
    j["selector"] = "auto-1se";
  } else {
    j["selector"] = {{"lambda", cfg.lambda}};
  }
  j["alpha_mix"] = cfg.alpha_mix;
  j["ridge_scale"] = to_string(cfg.ridge_scale);
  j["folds"] = cfg.folds;
  j["grid_size"] = cfg.grid_size;
  j["cv_seed"] = cfg.cv_seed;
  j["tol"] = cfg.tol;
  j["max_iter"] = cfg.max_iter;
  j["stability"] = {{"b", cfg.b}, {"seed", cfg.stability_seed}};
  j["priors"] = cfg.priors_path ? *cfg.priors_path : std::string("non-informative");
  j["pi_thr"] = cfg.pi_thr;
  j["ci_level"] = cfg.ci_level;
  j["output_dir"] = cfg.output_dir;
  j["threads"] = cfg.threads;
  return j;
}

Dataset load_input(const JobConfig& cfg) {
  if (const auto* sc = std::get_if<SyntheticConfig>(&cfg.input)) return gen_synthetic(*sc);
  const auto& ci = std::get<CsvInput>(cfg.input);
  return load_csv(ci.path, ci.response);
}

SelectionRun run_selection(const JobConfig& cfg, const StabilityOptions& opts) {
  cfg.validate();
  SelectionRun run;
  run.data = load_input(cfg);
  run.data.require_analyzable();
  if (cfg.auto_lambda) {
    CvOptions cv;
    cv.alpha_mix = cfg.alpha_mix;
    cv.ridge_scale = cfg.ridge_scale;
    cv.folds = cfg.folds;
    cv.grid_size = cfg.grid_size;
    cv.seed = cfg.cv_seed;
    cv.tol = cfg.tol;
    cv.max_iter = cfg.max_iter;
    cv.threads = opts.threads;
    run.cv = cross_validate(run.data, cv);
    run.lambda = run.cv->chosen.lambda;
  } else {
    run.lambda = cfg.lambda;
  }
  StabilityConfig st;
  st.b = cfg.b;
  st.net = cfg.net();
  st.net.lambda = run.lambda;
  st.seed = cfg.stability_seed;
  st.pi_thr = cfg.pi_thr;
  run.matrix = run_stability(run.data, st, opts);
  return run;
}

std::vector<PriorSpec> load_priors(const JobConfig& cfg, const std::vector<std::string>& names, std::size_t b) {
  if (!cfg.priors_path) return std::vector<PriorSpec>(names.size());
  const auto entries = read_prior_file(*cfg.priors_path);
  return resolve_priors(entries, names, b);
}

std::string frequencies_to_csv(const SelectionMatrix& m) {
  const auto counts = m.counts();
  const auto f = frequencies(m);
  std::string out = "name,n_j,frequency\n";
  for (std::size_t j = 0; j < m.cols(); ++j) {
    out += m.names()[j] + ',' + std::to_string(counts[j]) + ',' + csv::format_double(f[j]) + '\n';
  }
  return out;
}

void write_run_artifacts(const JobConfig& cfg, const SelectionRun& run, std::span<const VariableReport> report) {
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  write_matrix(dir / "selection_matrix.csv", run.matrix);
  csv::write_text(dir / "frequencies.csv", frequencies_to_csv(run.matrix));
  csv::write_text(dir / "posteriors.csv", report_to_csv(report));
  csv::write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");

  nlohmann::ordered_json meta;
  meta["lambda"] = run.lambda;
  meta["lambda_source"] = cfg.auto_lambda ? "cv_1se" : "fixed";
  meta["penalty_convention"] = kPenaltyConvention;
  meta["standardization"] = "per_subsample_sd_n_minus_1";
  meta["alpha_mix"] = cfg.alpha_mix;
  meta["ridge_scale"] = to_string(cfg.ridge_scale);
  meta["b"] = cfg.b;
  meta["stability_seed"] = cfg.stability_seed;
  meta["cv_seed"] = cfg.cv_seed;
  meta["n"] = run.data.n();
  meta["p"] = run.data.p();
  meta["pi_thr"] = cfg.pi_thr;
  meta["ci_level"] = cfg.ci_level;
  meta["interval"] = "equal_tailed";
  if (run.cv) {
    meta["cv"] = {{"folds", cfg.folds},
                  {"grid_size", run.cv->lambdas.size()},
                  {"lambda_min", run.cv->lambdas[run.cv->min_index]},
                  {"lambda_1se", run.cv->chosen.lambda}};
  }
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);
  meta["timestamp"] = stamp;
  csv::write_text(dir / "job_meta.json", meta.dump(2) + "\n");
}

}  // namespace stabsel

namespace stabsel {

void SweepJob::validate() const {
  validate_grids(sweep.zeta_grid, sweep.xi_grid);
  if (mode == SweepMode::Fixed) {
    if (!frequencies_path) throw std::invalid_argument("fixed sweep needs a 'frequencies' file");
    if (sweep.stability.b < 4) throw std::invalid_argument("sweep: B must be at least 4 for elicitation");
    if (!(sweep.pi_thr > 0.0 && sweep.pi_thr < 1.0)) throw std::invalid_argument("pi_thr must be in (0, 1)");
  } else {
    sweep.validate();
  }
}

SweepJob sweep_job_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"mode", "scenario", "replications", "selector", "alpha_mix", "ridge_scale", "folds", "grid_size", "b", "seed",
                  "pi_thr", "zeta_grid", "xi_grid", "frequencies", "truth", "output_dir", "threads", "tol",
                  "max_iter"},
                 "sweep config");
  SweepJob job;
  std::string mode = "stochastic";
  read(j, "mode", mode);
  if (mode == "stochastic") {
    job.mode = SweepMode::Stochastic;
  } else if (mode == "fixed") {
    job.mode = SweepMode::Fixed;
  } else {
    throw ParseError("sweep mode must be 'stochastic' or 'fixed'");
  }
  SweepConfig& sc = job.sweep;
  if (j.contains("scenario")) sc.scenario = synthetic_from_json(j.at("scenario"));
  read(j, "replications", sc.replications);
  if (j.contains("selector")) {
    const json& s = j.at("selector");
    if (s.is_string()) {
      if (s.get<std::string>() != "auto-1se") throw ParseError("selector must be \"auto-1se\" or {\"lambda\": x}");
    } else {
      reject_unknown(s, {"lambda"}, "selector");
      read(s, "lambda", sc.stability.net.lambda);
      sc.auto_lambda = false;
    }
  }
  read(j, "alpha_mix", sc.stability.net.alpha_mix);
  if (j.contains("ridge_scale")) {
    std::string rs;
    read(j, "ridge_scale", rs);
    sc.stability.net.ridge_scale = ridge_scale_from_string(rs);
  }
  read(j, "tol", sc.stability.net.tol);
  read(j, "max_iter", sc.stability.net.max_iter);
  read(j, "folds", sc.folds);
  read(j, "grid_size", sc.grid_size);
  read(j, "b", sc.stability.b);
  read(j, "seed", sc.stability.seed);
  read(j, "pi_thr", sc.pi_thr);
  auto grid = [&](const char* key, std::vector<double>& out) {
    if (!j.contains(key)) return;
    const json& g = j.at(key);
    if (!g.is_array()) throw ParseError(std::string("'") + key + "' must be an array of numbers");
    out.clear();
    for (const json& v : g) {
      if (!v.is_number()) throw ParseError(std::string("'") + key + "' must be an array of numbers");
      out.push_back(v.get<double>());
    }
  };
  grid("zeta_grid", sc.zeta_grid);
  grid("xi_grid", sc.xi_grid);
  if (j.contains("frequencies")) {
    std::string f;
    read(j, "frequencies", f);
    job.frequencies_path = f;
  }
  if (j.contains("truth")) {
    const json& t = j.at("truth");
    if (!t.is_array()) throw ParseError("'truth' must be an array of 1-based indices");
    for (const json& v : t) {
      if (!v.is_number_integer() || v.get<long long>() < 1) throw ParseError("'truth' entries must be integers >= 1");
      job.truth.push_back(v.get<std::size_t>() - 1);
    }
  }
  read(j, "output_dir", job.output_dir);
  read(j, "threads", job.threads);
  job.validate();
  return job;
}

SweepJob load_sweep_job(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(csv::read_text(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": malformed JSON: " + e.what());
  }
  return sweep_job_from_json(j);
}

std::vector<double> read_frequency_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("frequency file not found: " + path.string());
  const csv::Table t = csv::read(path);
  const auto fc = t.column("frequency");
  if (fc < 0) throw ParseError(path.string() + ": needs a 'frequency' column");
  std::vector<double> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    double v = 0.0;
    if (!csv::try_parse_double(t.rows[r][static_cast<std::size_t>(fc)], v)) {
      throw ParseError(path.string() + ": bad frequency at line " + std::to_string(t.line_numbers[r]));
    }
    out.push_back(v);
  }
  return out;
}

SweepJobResult run_sweep_job(const SweepJob& job, const SweepOptions& opts) {
  job.validate();
  const std::filesystem::path dir(job.output_dir);
  std::filesystem::create_directories(dir);
  SweepJobResult result;
  nlohmann::ordered_json meta;
  meta["pi_thr"] = job.sweep.pi_thr;
  meta["b"] = job.sweep.stability.b;
  if (job.mode == SweepMode::Fixed) {
    const auto freqs = read_frequency_file(*job.frequencies_path);
    result.grid = sweep_fixed_frequencies(freqs, job.sweep.stability.b, job.truth, job.sweep.zeta_grid,
                                          job.sweep.xi_grid, job.sweep.pi_thr);
    meta["mode"] = "fixed_frequency";
    meta["frequencies"] = *job.frequencies_path;
  } else {
    SweepResult sr = run_sweep(job.sweep, opts);
    result.grid = sr.per_replication;
    meta["mode"] = "replication_mean";
    meta["replications"] = job.sweep.replications;
    meta["scenario"] = to_json(job.sweep.scenario);
    meta["alpha_mix"] = job.sweep.stability.net.alpha_mix;
    meta["ridge_scale"] = to_string(job.sweep.stability.net.ridge_scale);
    meta["lambda_source"] = job.sweep.auto_lambda ? "cv_1se" : "fixed";
    meta["lambdas"] = sr.lambdas;
    meta["penalty_convention"] = kPenaltyConvention;
    std::string freq = "name,frequency\n";
    for (std::size_t j = 0; j < sr.mean_frequencies.size(); ++j) {
      freq += "x" + std::to_string(j + 1) + ',' + csv::format_double(sr.mean_frequencies[j]) + '\n';
    }
    csv::write_text(dir / "mean_frequencies.csv", freq);
    csv::write_text(dir / "relevant_panel_mean_frequency.csv", panel_to_csv(sr.on_mean_frequencies, Panel::Relevant));
    csv::write_text(dir / "irrelevant_panel_mean_frequency.csv",
                    panel_to_csv(sr.on_mean_frequencies, Panel::Irrelevant));
    result.stochastic = std::move(sr);
  }
  csv::write_text(dir / "relevant_panel.csv", panel_to_csv(result.grid, Panel::Relevant));
  csv::write_text(dir / "irrelevant_panel.csv", panel_to_csv(result.grid, Panel::Irrelevant));
  csv::write_text(dir / "sweep_meta.json", meta.dump(2) + "\n");
  return result;
}

}  // namespace stabsel
