#include <doctest.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <thread>

#include "stabsel/csv.hpp"
#include "stabsel/server.hpp"
#include "stabsel/stability.hpp"

#include <httplib.h>

using namespace stabsel;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(STABSEL_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path temp_dir(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("stabsel_test_cli_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("help and usage errors") {
  const Result h = cli("--help");
  CHECK(h.code == 0);
  for (const char* sub : {"run", "sweep", "simulate", "posterior", "serve"}) CHECK(contains(h.out, sub));
  CHECK(cli("frobnicate").code != 0);
  CHECK(cli("posterior").code != 0);
  CHECK(cli("--simd mmx simulate --p 10 -o /dev/null").code != 0);
}

TEST_CASE("simulate writes data and metadata") {
  const fs::path d = temp_dir("sim");
  const Result r = cli("simulate --scenario decaying --n 30 --p 12 --seed 4 -o " + (d / "s.csv").string());
  REQUIRE_MESSAGE(r.code == 0, r.out);
  const Dataset ds = load_csv(d / "s.csv", "y");
  CHECK(ds.n() == 30);
  CHECK(ds.p() == 12);
  const json meta = json::parse(csv::read_text(d / "s.csv.meta.json"));
  CHECK(meta["seed"] == 4);
  CHECK(meta["scenario"] == "decaying");

  SyntheticConfig sc;
  sc.scenario = Scenario::Decaying;
  sc.n = 30;
  sc.p = 12;
  sc.seed = 4;
  const Dataset ref = gen_synthetic(sc);
  CHECK((ref.x - ds.x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((ref.y - ds.y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("run end to end and reruns are byte identical") {
  const fs::path d = temp_dir("run");
  const std::string common = "run --p 30 --data-seed 2 --lambda 0.3 -B 24 --seed 9 ";
  const Result a = cli(common + "-o " + (d / "a").string());
  REQUIRE_MESSAGE(a.code == 0, a.out);
  CHECK(contains(a.out, "lambda 0.3 (fixed"));
  CHECK(contains(a.out, "B 24, p 30"));
  const Result b = cli(common + "--threads 1 -o " + (d / "b").string());
  REQUIRE_MESSAGE(b.code == 0, b.out);
  for (const char* f : {"selection_matrix.csv", "selection_matrix.csv.meta.json", "frequencies.csv",
                        "posteriors.csv"}) {
    CHECK_MESSAGE(csv::read_text(d / "a" / f) == csv::read_text(d / "b" / f), f);
  }
  const SelectionMatrix m = read_matrix(d / "a" / "selection_matrix.csv");
  CHECK(m.rows() == 24);
  CHECK(m.cols() == 30);
  CHECK(m.lambda() == 0.3);
  CHECK(m.seed() == 9);

  // The scalar backend gives the same selections.
  const Result s = cli("--simd scalar " + common + "-o " + (d / "s").string());
  REQUIRE_MESSAGE(s.code == 0, s.out);
  CHECK(csv::read_text(d / "a" / "selection_matrix.csv") == csv::read_text(d / "s" / "selection_matrix.csv"));

  // The written config reproduces the run.
  const Result c = cli("run -c " + (d / "a" / "config.json").string() + " -o " + (d / "c").string());
  REQUIRE_MESSAGE(c.code == 0, c.out);
  CHECK(csv::read_text(d / "a" / "posteriors.csv") == csv::read_text(d / "c" / "posteriors.csv"));
}

TEST_CASE("run with priors and a csv input") {
  const fs::path d = temp_dir("priors");
  REQUIRE(cli("simulate --p 20 --seed 3 -o " + (d / "data.csv").string()).code == 0);
  std::string pr = "name,zeta,xi\n";
  for (int j = 1; j <= 6; ++j) pr += "x" + std::to_string(j) + ",0.5,0.7\n";
  csv::write_text(d / "priors.csv", pr);
  const Result r = cli("run --input " + (d / "data.csv").string() + " --lambda 0.3 -B 100 --priors " +
                       (d / "priors.csv").string() + " -o " + (d / "out").string());
  REQUIRE_MESSAGE(r.code == 0, r.out);
  const SelectionMatrix m = read_matrix(d / "out" / "selection_matrix.csv");
  const auto counts = m.counts();
  const csv::Table post = csv::read(d / "out" / "posteriors.csv");
  const auto name_c = post.column("name"), mean_c = post.column("mean"), alpha_c = post.column("alpha");
  REQUIRE(post.rows.size() == 20);
  for (const auto& row : post.rows) {
    const std::string& nm = row[static_cast<std::size_t>(name_c)];
    const std::size_t j = std::stoul(nm.substr(1)) - 1;
    const bool informed = j < 6;
    const double expect = informed ? (70.0 + counts[j]) / 200.0 : (1.0 + counts[j]) / 102.0;
    CHECK(csv::parse_double(row[static_cast<std::size_t>(mean_c)]) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(csv::parse_double(row[static_cast<std::size_t>(alpha_c)]) == (informed ? 70.0 : 1.0));
  }
}

TEST_CASE("run errors name the problem") {
  const fs::path d = temp_dir("err");
  const Result missing = cli("run --input " + (d / "missing.csv").string() + " -o " + (d / "o").string());
  CHECK(missing.code != 0);
  CHECK(contains(missing.out, "stabsel: error:"));
  CHECK(contains(missing.out, (d / "missing.csv").string()));

  const Result cfg = cli("run -c " + (d / "nope.json").string());
  CHECK(cfg.code != 0);
  CHECK(contains(cfg.out, "nope.json"));

  csv::write_text(d / "bad.json", R"({"stability": {"bee": 3}})");
  const Result bad = cli("run -c " + (d / "bad.json").string());
  CHECK(bad.code != 0);
  CHECK(contains(bad.out, "'bee'"));

  CHECK(cli("run --p 20 --lambda 0.3 -B 0 -o " + (d / "o").string()).code != 0);
  CHECK(cli("run --p 20 --lambda 0.3 --ridge-scale wide -o " + (d / "o").string()).code != 0);
}

TEST_CASE("posterior subcommand") {
  const fs::path d = temp_dir("post");
  REQUIRE(cli("run --p 15 --lambda 0.3 -B 40 -o " + (d / "run").string()).code == 0);
  const std::string matrix = (d / "run" / "selection_matrix.csv").string();
  const Result stdout_run = cli("posterior --matrix " + matrix);
  REQUIRE_MESSAGE(stdout_run.code == 0, stdout_run.out);
  CHECK(stdout_run.out == csv::read_text(d / "run" / "posteriors.csv"));

  csv::write_text(d / "pr.csv", "name,alpha,beta\nx1,8,2\n");
  const Result f = cli("posterior --matrix " + matrix + " --priors " + (d / "pr.csv").string() +
                       " --pi-thr 0.5 -o " + (d / "p.csv").string());
  REQUIRE_MESSAGE(f.code == 0, f.out);
  CHECK(contains(f.out, "of 15"));
  const csv::Table t = csv::read(d / "p.csv");
  const std::size_t n1 = read_matrix(matrix).counts()[0];
  bool found = false;
  for (const auto& row : t.rows) {
    if (row[static_cast<std::size_t>(t.column("name"))] != "x1") continue;
    found = true;
    CHECK(csv::parse_double(row[static_cast<std::size_t>(t.column("mean"))]) ==
          doctest::Approx((8.0 + n1) / 50.0).epsilon(1e-12));
  }
  CHECK(found);

  const Result miss = cli("posterior --matrix " + (d / "none.csv").string());
  CHECK(miss.code != 0);
  CHECK(contains(miss.out, "none.csv"));
}

TEST_CASE("sweep subcommand in fixed mode") {
  const fs::path d = temp_dir("sweep");
  std::string text = "name,frequency\n";
  const double means[] = {0.529, 0.546, 0.604, 0.609, 0.622, 0.540};
  for (int j = 0; j < 50; ++j) text += "x" + std::to_string(j + 1) + ',' + csv::format_double(j < 6 ? means[j] : 0.05) + '\n';
  csv::write_text(d / "f.csv", text);
  const Result r = cli("sweep --mode fixed --frequencies " + (d / "f.csv").string() + " --truth 1,2,3,4,5,6 -B 100 -o " +
                       (d / "out").string());
  REQUIRE_MESSAGE(r.code == 0, r.out);
  CHECK(contains(r.out, "6x11"));
  const csv::Table rel = csv::read(d / "out" / "relevant_panel.csv");
  REQUIRE(rel.rows.size() == 66);
  CHECK(rel.rows[5 * 11 + 7][0] == "0.5");
  CHECK(rel.rows[5 * 11 + 7][1] == "0.7");
  CHECK(rel.rows[5 * 11 + 7][2] == "6");
  const csv::Table irr = csv::read(d / "out" / "irrelevant_panel.csv");
  for (const auto& row : irr.rows) {
    if (row[0] == "0") CHECK(row[2] == "0");
  }
  CHECK(cli("sweep --mode fixed -o " + (d / "o2").string()).code != 0);
  CHECK(cli("sweep --mode fixed --frequencies " + (d / "f.csv").string() + " --zeta-grid 0.8 -o " + (d / "o3").string())
            .code != 0);
}

TEST_CASE("sweep subcommand in stochastic mode") {
  const fs::path d = temp_dir("stoch");
  const Result r = cli("sweep --replications 2 -B 10 --lambda 0.3 --zeta-grid 0,0.5 --xi-grid 0,1 -o " +
                       (d / "out").string());
  REQUIRE_MESSAGE(r.code == 0, r.out);
  CHECK(contains(r.out, "2x2"));
  CHECK(fs::exists(d / "out" / "mean_frequencies.csv"));
  CHECK(fs::exists(d / "out" / "relevant_panel_mean_frequency.csv"));
  const json meta = json::parse(csv::read_text(d / "out" / "sweep_meta.json"));
  CHECK(meta["replications"] == 2);
  CHECK(meta["ridge_scale"] == "response_sd");
}

TEST_CASE("serve rejects bad ports") {
  const Result zero = cli("serve --port 0");
  CHECK(zero.code != 0);
  CHECK(contains(zero.out, "invalid port 0"));
  CHECK(cli("serve --port 70000").code != 0);

  Server holder(ServerOptions{"127.0.0.1", 0, std::nullopt, 1});
  const int port = holder.start();
  const Result taken = cli("serve --port " + std::to_string(port));
  CHECK(taken.code != 0);
  CHECK(contains(taken.out, std::to_string(port)));
}

TEST_CASE("serve answers health checks and stops on SIGINT") {
  int port = 0;
  {
    Server probe(ServerOptions{"127.0.0.1", 0, std::nullopt, 1});
    port = probe.bind();
  }
  Result served;
  std::thread t([&] { served = cli("serve --port " + std::to_string(port) + " & pid=$!; sleep 3; kill -INT $pid; wait $pid"); });
  httplib::Client c("127.0.0.1", port);
  bool healthy = false;
  for (int i = 0; i < 50 && !healthy; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    auto r = c.Get("/health");
    healthy = r && r->status == 200;
  }
  t.join();
  CHECK(healthy);
  CHECK_MESSAGE(served.code == 0, served.out);
  CHECK(contains(served.out, "listening on http://127.0.0.1:" + std::to_string(port)));
}
