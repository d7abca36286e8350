// stabsel: Bayesian stability selection from the command line.
//
//   stabsel run       --config job.json [overrides]
//   stabsel sweep     --config sweep.json [overrides]
//   stabsel simulate  --scenario correlated_blocks --seed 7 --out data.csv
//   stabsel posterior --matrix out/selection_matrix.csv --priors priors.csv
//   stabsel serve     --port 8080 [--ui-dir ui/dist]

#include <CLI11.hpp>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>

#include "stabsel/bayes.hpp"
#include "stabsel/csv.hpp"
#include "stabsel/job.hpp"
#include "stabsel/kernels.hpp"
#include "stabsel/parallel.hpp"
#include "stabsel/server.hpp"
#include "stabsel/sweep.hpp"

namespace {

using namespace stabsel;

std::size_t count_selected(const std::vector<VariableReport>& report) {
  std::size_t k = 0;
  for (const auto& r : report) k += r.post.selected ? 1 : 0;
  return k;
}

struct RunArgs {
  std::string config;
  std::optional<std::string> input, response, scenario, priors, out, ridge_scale;
  std::optional<std::size_t> n, p, b, threads;
  std::optional<double> sigma, lambda, alpha_mix, pi_thr, level;
  std::optional<std::uint64_t> data_seed, seed;
};

JobConfig resolve_run_config(const RunArgs& a) {
  JobConfig cfg = a.config.empty() ? JobConfig{} : load_job_config(a.config);
  if (a.input) cfg.input = CsvInput{*a.input, a.response.value_or("y")};
  if (a.response) {
    if (auto* ci = std::get_if<CsvInput>(&cfg.input)) ci->response = *a.response;
  }
  if (auto* sc = std::get_if<SyntheticConfig>(&cfg.input)) {
    if (a.scenario) sc->scenario = scenario_from_string(*a.scenario);
    if (a.n) sc->n = *a.n;
    if (a.p) sc->p = *a.p;
    if (a.sigma) sc->sigma = *a.sigma;
    if (a.data_seed) sc->seed = *a.data_seed;
  }
  if (a.lambda) {
    cfg.auto_lambda = false;
    cfg.lambda = *a.lambda;
  }
  if (a.alpha_mix) cfg.alpha_mix = *a.alpha_mix;
  if (a.ridge_scale) cfg.ridge_scale = ridge_scale_from_string(*a.ridge_scale);
  if (a.b) cfg.b = *a.b;
  if (a.seed) cfg.stability_seed = *a.seed;
  if (a.priors) {
    if (*a.priors == "non-informative") {
      cfg.priors_path.reset();
    } else {
      cfg.priors_path = *a.priors;
    }
  }
  if (a.pi_thr) cfg.pi_thr = *a.pi_thr;
  if (a.level) cfg.ci_level = *a.level;
  if (a.out) cfg.output_dir = *a.out;
  if (a.threads) cfg.threads = *a.threads;
  cfg.validate();
  return cfg;
}

int cmd_run(const RunArgs& args) {
  const JobConfig cfg = resolve_run_config(args);
  StabilityOptions so;
  so.threads = resolve_threads(cfg.threads);
  const SelectionRun run = run_selection(cfg, so);
  const auto priors = load_priors(cfg, run.matrix.names(), run.matrix.rows());
  const auto report = decision_report(run.matrix, priors, cfg.pi_thr, cfg.ci_level);
  write_run_artifacts(cfg, run, report);
  std::cout << "lambda " << csv::format_double(run.lambda) << " (" << (cfg.auto_lambda ? "cv 1-se" : "fixed")
            << ", " << kPenaltyConvention << ")\n"
            << "B " << run.matrix.rows() << ", p " << run.matrix.cols() << ", selected " << count_selected(report)
            << " at pi_thr " << cfg.pi_thr << "\n"
            << "artifacts in " << cfg.output_dir << "\n";
  return 0;
}

struct SweepArgs {
  std::string config;
  std::optional<std::string> mode, frequencies, out, scenario, ridge_scale;
  std::optional<std::size_t> replications, b, threads;
  std::optional<std::uint64_t> seed, data_seed;
  std::optional<double> pi_thr, alpha_mix, lambda;
  std::vector<double> zeta_grid, xi_grid;
  std::vector<std::size_t> truth;
};

int cmd_sweep(const SweepArgs& a) {
  SweepJob job = a.config.empty() ? SweepJob{} : load_sweep_job(a.config);
  if (a.mode) job.mode = *a.mode == "fixed" ? SweepMode::Fixed : SweepMode::Stochastic;
  if (a.frequencies) job.frequencies_path = *a.frequencies;
  if (a.out) job.output_dir = *a.out;
  if (a.scenario) job.sweep.scenario.scenario = scenario_from_string(*a.scenario);
  if (a.data_seed) job.sweep.scenario.seed = *a.data_seed;
  if (a.replications) job.sweep.replications = *a.replications;
  if (a.b) job.sweep.stability.b = *a.b;
  if (a.seed) job.sweep.stability.seed = *a.seed;
  if (a.pi_thr) job.sweep.pi_thr = *a.pi_thr;
  if (a.alpha_mix) job.sweep.stability.net.alpha_mix = *a.alpha_mix;
  if (a.ridge_scale) job.sweep.stability.net.ridge_scale = ridge_scale_from_string(*a.ridge_scale);
  if (a.lambda) {
    job.sweep.auto_lambda = false;
    job.sweep.stability.net.lambda = *a.lambda;
  }
  if (!a.zeta_grid.empty()) job.sweep.zeta_grid = a.zeta_grid;
  if (!a.xi_grid.empty()) job.sweep.xi_grid = a.xi_grid;
  if (!a.truth.empty()) {
    job.truth.clear();
    for (std::size_t t : a.truth) {
      if (t < 1) throw std::invalid_argument("--truth indices are 1-based");
      job.truth.push_back(t - 1);
    }
  }
  if (a.threads) job.threads = *a.threads;
  SweepOptions so;
  so.threads = resolve_threads(job.threads);
  so.warn = [](std::string_view) {};
  const SweepJobResult res = run_sweep_job(job, so);
  std::cout << "sweep " << (job.mode == SweepMode::Fixed ? "fixed_frequency" : "replication_mean") << ": "
            << res.grid.zeta_grid.size() << "x" << res.grid.xi_grid.size() << " grid written to " << job.output_dir
            << "\n";
  return 0;
}

struct SimulateArgs {
  std::string scenario = "correlated_blocks";
  std::size_t n = 50, p = 500;
  double sigma = 2.0;
  std::uint64_t seed = 1;
  std::string out = "synthetic.csv";
};

int cmd_simulate(const SimulateArgs& a) {
  SyntheticConfig cfg;
  cfg.scenario = scenario_from_string(a.scenario);
  cfg.n = a.n;
  cfg.p = a.p;
  cfg.sigma = a.sigma;
  cfg.seed = a.seed;
  const Dataset ds = gen_synthetic(cfg);
  write_csv(a.out, ds);
  write_synthetic_meta(a.out + ".meta.json", cfg, ds);
  std::cout << "wrote " << a.out << " (" << ds.n() << " x " << ds.p() << ")\n";
  return 0;
}

struct PosteriorArgs {
  std::string matrix;
  std::string priors;
  double pi_thr = 0.6;
  double level = 0.95;
  std::string out;
};

int cmd_posterior(const PosteriorArgs& a) {
  const SelectionMatrix m = read_matrix(a.matrix);
  std::vector<PriorSpec> priors(m.cols());
  if (!a.priors.empty() && a.priors != "non-informative") {
    priors = resolve_priors(read_prior_file(a.priors), m.names(), m.rows());
  }
  const auto report = decision_report(m, priors, a.pi_thr, a.level);
  const std::string text = report_to_csv(report);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    csv::write_text(a.out, text);
    std::cout << "selected " << count_selected(report) << " of " << m.cols() << "; wrote " << a.out << "\n";
  }
  return 0;
}

struct ServeArgs {
  std::string config;
  std::optional<int> port;
  std::optional<std::string> host, ui_dir;
  std::optional<std::size_t> workers;
};

Server* g_server = nullptr;

int cmd_serve(const ServeArgs& a) {
  ServerOptions opts;
  if (!a.config.empty()) {
    const auto j = nlohmann::json::parse(csv::read_text(a.config));
    opts.host = j.value("host", opts.host);
    opts.port = j.value("port", opts.port);
    if (j.contains("ui_dir")) opts.ui_dir = j.at("ui_dir").get<std::string>();
    opts.workers = j.value("workers", opts.workers);
  }
  if (a.port) opts.port = *a.port;
  if (a.host) opts.host = *a.host;
  if (a.ui_dir) opts.ui_dir = *a.ui_dir;
  if (a.workers) opts.workers = *a.workers;
  if (opts.port < 1 || opts.port > 65535) {
    throw std::invalid_argument("invalid port " + std::to_string(opts.port) + " (expected 1-65535)");
  }
  Server server(opts);
  const int port = server.bind();
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "listening on http://" << opts.host << ":" << port
            << (server.ui_available() ? " (UI enabled)" : " (API only; no UI bundle)") << std::endl;
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian stability selection"};
  app.require_subcommand(1);
  std::optional<std::string> simd;
  app.add_option("--simd", simd, "Force kernel backend (scalar, avx2, neon)");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Select lambda, run stability selection and report posteriors");
  run_cmd->add_option("-c,--config", run.config, "Job config (JSON)");
  run_cmd->add_option("--input", run.input, "Input CSV (replaces a synthetic input)");
  run_cmd->add_option("--response", run.response, "Response column of the input CSV");
  run_cmd->add_option("--scenario", run.scenario, "Synthetic scenario: correlated_blocks, decaying, independent");
  run_cmd->add_option("--n", run.n, "Synthetic sample size");
  run_cmd->add_option("--p", run.p, "Synthetic covariate count");
  run_cmd->add_option("--sigma", run.sigma, "Synthetic noise sd");
  run_cmd->add_option("--data-seed", run.data_seed, "Synthetic data seed");
  run_cmd->add_option("--lambda", run.lambda, "Fixed lambda (disables CV 1-SE)");
  run_cmd->add_option("--alpha-mix", run.alpha_mix, "Elastic-net mixing in (0, 1]");
  run_cmd->add_option("--ridge-scale", run.ridge_scale, "Ridge weight scaling: response_sd or unit");
  run_cmd->add_option("-B,--subsamples", run.b, "Number of subsamples B");
  run_cmd->add_option("--seed", run.seed, "Stability seed");
  run_cmd->add_option("--priors", run.priors, "Prior CSV or 'non-informative'");
  run_cmd->add_option("--pi-thr", run.pi_thr, "Decision threshold");
  run_cmd->add_option("--level", run.level, "Credible level");
  run_cmd->add_option("-o,--out", run.out, "Output directory");
  run_cmd->add_option("--threads", run.threads, "Worker threads (default STABSEL_THREADS or all cores)");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Heatmap counts over the (zeta, xi) grid");
  sweep_cmd->add_option("-c,--config", sweep.config, "Sweep config (JSON)");
  sweep_cmd->add_option("--mode", sweep.mode, "stochastic or fixed")->check(CLI::IsMember({"stochastic", "fixed"}));
  sweep_cmd->add_option("--frequencies", sweep.frequencies, "Fixed mode: CSV with a frequency column");
  sweep_cmd->add_option("--truth", sweep.truth, "Fixed mode: 1-based relevant indices")->delimiter(',');
  sweep_cmd->add_option("--scenario", sweep.scenario, "Synthetic scenario");
  sweep_cmd->add_option("--data-seed", sweep.data_seed, "Base data seed");
  sweep_cmd->add_option("--replications", sweep.replications, "Synthetic replications");
  sweep_cmd->add_option("-B,--subsamples", sweep.b, "Number of subsamples B");
  sweep_cmd->add_option("--seed", sweep.seed, "Base stability seed");
  sweep_cmd->add_option("--pi-thr", sweep.pi_thr, "Decision threshold");
  sweep_cmd->add_option("--alpha-mix", sweep.alpha_mix, "Elastic-net mixing in (0, 1]");
  sweep_cmd->add_option("--ridge-scale", sweep.ridge_scale, "Ridge weight scaling: response_sd or unit");
  sweep_cmd->add_option("--lambda", sweep.lambda, "Fixed lambda (disables CV 1-SE)");
  sweep_cmd->add_option("--zeta-grid", sweep.zeta_grid, "Comma-separated zeta values")->delimiter(',');
  sweep_cmd->add_option("--xi-grid", sweep.xi_grid, "Comma-separated xi values")->delimiter(',');
  sweep_cmd->add_option("-o,--out", sweep.out, "Output directory");
  sweep_cmd->add_option("--threads", sweep.threads, "Worker threads");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Write a synthetic dataset as CSV with a metadata sidecar");
  sim_cmd->add_option("--scenario", sim.scenario, "correlated_blocks, decaying or independent");
  sim_cmd->add_option("--n", sim.n, "Rows");
  sim_cmd->add_option("--p", sim.p, "Covariates");
  sim_cmd->add_option("--sigma", sim.sigma, "Noise sd");
  sim_cmd->add_option("--seed", sim.seed, "Seed");
  sim_cmd->add_option("-o,--out", sim.out, "Output CSV path");

  PosteriorArgs post;
  auto* post_cmd = app.add_subcommand("posterior", "Posterior report from an existing selection matrix");
  post_cmd->add_option("--matrix", post.matrix, "Selection matrix CSV")->required();
  post_cmd->add_option("--priors", post.priors, "Prior CSV (default: non-informative)");
  post_cmd->add_option("--pi-thr", post.pi_thr, "Decision threshold");
  post_cmd->add_option("--level", post.level, "Credible level");
  post_cmd->add_option("-o,--out", post.out, "Output CSV (default: stdout)");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Local HTTP API for interactive elicitation");
  serve_cmd->add_option("-c,--config", serve.config, "Server config (JSON: host, port, ui_dir, workers)");
  serve_cmd->add_option("--port", serve.port, "Port (1-65535)");
  serve_cmd->add_option("--host", serve.host, "Bind address (default loopback)");
  serve_cmd->add_option("--ui-dir", serve.ui_dir, "Directory holding the built UI bundle");
  serve_cmd->add_option("--workers", serve.workers, "Background job workers");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simd) {
      kernels::Backend backend = kernels::Backend::Scalar;
      if (*simd == "avx2") backend = kernels::Backend::Avx2;
      else if (*simd == "neon") backend = kernels::Backend::Neon;
      else if (*simd != "scalar") throw std::invalid_argument("unknown --simd backend '" + *simd + "'");
      if (!kernels::select(backend)) throw std::invalid_argument("kernel backend '" + *simd + "' unavailable");
    }
    if (*run_cmd) return cmd_run(run);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*sim_cmd) return cmd_simulate(sim);
    if (*post_cmd) return cmd_posterior(post);
    if (*serve_cmd) return cmd_serve(serve);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "stabsel: error: " << msg << std::endl;
    return 1;
  }
  return 0;
}
