#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <json.hpp>

#include "stabsel/csv.hpp"
#include "stabsel/server.hpp"

// After Eigen: resolv.h defines a _res macro.
#include <httplib.h>

using namespace stabsel;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kSmallJob = R"({"input": {"synthetic": {"p": 40, "seed": 2}}, "selector": {"lambda": 0.3},
                            "stability": {"b": 100, "seed": 5}})";

struct Fixture {
  Server server{ServerOptions{"127.0.0.1", 0, std::nullopt, 1}};
  int port = server.start();
  httplib::Client client{"127.0.0.1", port};

  Fixture() { client.set_read_timeout(60, 0); }

  std::string submit(const std::string& body) {
    auto r = client.Post("/jobs", body, "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 202);
    return json::parse(r->body).at("id").get<std::string>();
  }

  JobRecord finish(const std::string& id) {
    auto rec = server.jobs().wait(id, std::chrono::seconds(300));
    REQUIRE(rec);
    REQUIRE(rec->status != JobStatus::Running);
    return *rec;
  }

  json post(const std::string& path, const std::string& body, int expect) {
    auto r = client.Post(path, body, "application/json");
    REQUIRE(r);
    CHECK_MESSAGE(r->status == expect, r->body);
    return json::parse(r->body);
  }

  json get(const std::string& path, int expect) {
    auto r = client.Get(path);
    REQUIRE(r);
    CHECK_MESSAGE(r->status == expect, r->body);
    return json::parse(r->body);
  }
};

}  // namespace

TEST_CASE("health") {
  Fixture f;
  CHECK(f.port > 0);
  CHECK(f.get("/health", 200)["status"] == "ok");
}

TEST_CASE("job submission and retrieval") {
  Fixture f;
  const std::string id = f.submit(kSmallJob);
  const std::string id2 = f.submit(kSmallJob);
  CHECK(id != id2);

  const JobRecord rec = f.finish(id);
  REQUIRE(rec.status == JobStatus::Done);
  const json j = f.get("/jobs/" + id, 200);
  CHECK(j["status"] == "done");
  CHECK(j["b"] == 100);
  CHECK(j["p"] == 40);
  CHECK(j["lambda"] == 0.3);
  CHECK(j["config"]["stability"]["seed"] == 5);

  auto m = f.client.Get("/jobs/" + id + "/matrix");
  REQUIRE(m);
  CHECK(m->status == 200);
  CHECK(m->get_header_value("Content-Type").find("text/csv") != std::string::npos);
  CHECK(matrix_from_csv(m->body).counts() == rec.matrix->counts());

  // Same config, same matrix.
  f.finish(id2);
  CHECK(f.client.Get("/jobs/" + id2 + "/matrix")->body == m->body);
}

TEST_CASE("job request errors") {
  Fixture f;
  json e = f.post("/jobs", R"({"stability": {"b": 0}})", 422);
  CHECK(e["code"] == 422);
  CHECK(e["message"].get<std::string>().find("B") != std::string::npos);
  CHECK(f.post("/jobs", "{not json", 400)["code"] == 400);
  CHECK(f.post("/jobs", R"({"bogus": true})", 400)["code"] == 400);
  CHECK(f.get("/jobs/nope", 404)["code"] == 404);
  CHECK(f.get("/jobs/nope/matrix", 404)["code"] == 404);
  CHECK(f.post("/jobs/nope/posteriors", "{}", 404)["code"] == 404);
}

TEST_CASE("failed and unfinished jobs") {
  Fixture f;
  const std::string bad = f.submit(R"({"input": {"csv": {"path": "/nonexistent/data.csv"}}})");
  const JobRecord rec = f.finish(bad);
  CHECK(rec.status == JobStatus::Failed);
  const json j = f.get("/jobs/" + bad, 200);
  CHECK(j["status"] == "failed");
  CHECK(j["error"].get<std::string>().find("/nonexistent/data.csv") != std::string::npos);
  CHECK(f.get("/jobs/" + bad + "/matrix", 409)["code"] == 409);

  // One worker: the second job is still queued while the first one runs.
  const std::string slow = f.submit(R"({"stability": {"b": 100}})");
  const std::string queued = f.submit(kSmallJob);
  CHECK(f.get("/jobs/" + queued, 200)["status"] == "running");
  CHECK(f.post("/jobs/" + queued + "/posteriors", "{}", 409)["code"] == 409);
  f.finish(slow);
  f.finish(queued);
}

TEST_CASE("posteriors follow the conjugate update") {
  Fixture f;
  const std::string id = f.submit(kSmallJob);
  const JobRecord rec = f.finish(id);
  const auto counts = rec.matrix->counts();
  const auto& names = rec.matrix->names();

  const json flat = f.post("/jobs/" + id + "/posteriors", "{}", 200);
  CHECK(flat["b"] == 100);
  REQUIRE(flat["variables"].size() == 40);
  for (const json& v : flat["variables"]) {
    const std::size_t j = v["index"].get<std::size_t>() - 1;
    CHECK(v["name"] == names[j]);
    CHECK(v["n"] == counts[j]);
    CHECK(v["mean"].get<double>() == doctest::Approx((1.0 + counts[j]) / 102.0).epsilon(1e-14));
    CHECK(v["selected"] == ((1.0 + counts[j]) / 102.0 >= 0.6));
    CHECK(v["prior"]["source"] == "non_informative");
  }

  const std::string body = json{{"priors", {{{"name", names[0]}, {"zeta", 0.5}, {"xi", 0.7}},
                                            {{"name", names[1]}, {"alpha", 3}, {"beta", 4}}}},
                                {"pi_thr", 0.55},
                                {"level", 0.9}}
                               .dump();
  const json inf = f.post("/jobs/" + id + "/posteriors", body, 200);
  CHECK(inf["pi_thr"] == 0.55);
  CHECK(inf["level"] == 0.9);
  int seen = 0;
  for (const json& v : inf["variables"]) {
    const std::size_t j = v["index"].get<std::size_t>() - 1;
    if (j == 0) {
      ++seen;
      CHECK(v["prior"]["alpha"] == 70.0);
      CHECK(v["prior"]["beta"] == 30.0);
      CHECK(v["alpha_post"] == 70.0 + counts[0]);
      CHECK(v["mean"].get<double>() == doctest::Approx((70.0 + counts[0]) / 200.0).epsilon(1e-14));
      CHECK(v["selected"] == ((70.0 + counts[0]) / 200.0 >= 0.55));
    } else if (j == 1) {
      ++seen;
      CHECK(v["mean"].get<double>() == doctest::Approx((3.0 + counts[1]) / 107.0).epsilon(1e-14));
    }
    CHECK(v["ci_low"].get<double>() <= v["mean"].get<double>());
    CHECK(v["ci_high"].get<double>() >= v["mean"].get<double>());
  }
  CHECK(seen == 2);

  // Identical requests give identical bodies.
  CHECK(f.client.Post("/jobs/" + id + "/posteriors", body, "application/json")->body ==
        f.client.Post("/jobs/" + id + "/posteriors", body, "application/json")->body);

  f.post("/jobs/" + id + "/posteriors", R"({"priors": [{"name": "x1", "zeta": 0.6, "xi": 0.5}]})", 422);
  f.post("/jobs/" + id + "/posteriors", R"({"priors": [{"name": "zz", "zeta": 0.2, "xi": 0.5}]})", 422);
  f.post("/jobs/" + id + "/posteriors", R"({"priors": [{"name": "x1"}]})", 400);
  f.post("/jobs/" + id + "/posteriors", R"({"priors": {}})", 400);
  f.post("/jobs/" + id + "/posteriors", R"({"pi_thr": 1.5})", 422);
}

TEST_CASE("heatmap") {
  Fixture f;
  const std::string id = f.submit(kSmallJob);
  const JobRecord rec = f.finish(id);
  const json h = f.post("/jobs/" + id + "/heatmap", R"({"relevant": ["x1", "x2", "x3", "x4", "x5", "x6"]})", 200);
  REQUIRE(h["relevant"].size() == 6);
  REQUIRE(h["relevant"][0].size() == 11);
  const SweepGrid g = sweep_counts(rec.matrix->counts(), 100, std::vector<std::size_t>{0, 1, 2, 3, 4, 5},
                                   default_zeta_grid(), default_xi_grid(), 0.6);
  for (std::size_t zi = 0; zi < 6; ++zi) {
    for (std::size_t xi = 0; xi < 11; ++xi) {
      CHECK(h["relevant"][zi][xi] == g.at(zi, xi).true_positives);
      CHECK(h["irrelevant"][zi][xi] == g.at(zi, xi).false_positives);
    }
  }
  f.post("/jobs/" + id + "/heatmap", R"({"relevant": ["nope"]})", 422);
  f.post("/jobs/" + id + "/heatmap", R"({})", 400);
  f.post("/jobs/" + id + "/heatmap", R"({"relevant": [], "zeta_grid": [0.9]})", 422);
}

TEST_CASE("variance surface") {
  Fixture f;
  const json v = f.get("/variance-surface?b=100&n=50", 200);
  CHECK(v["gamma"] == 100);
  REQUIRE(v["alpha"].size() == 99);
  const auto row = v["informative"][0].get<std::vector<double>>();
  const auto it = std::max_element(row.begin(), row.end());
  CHECK(v["alpha"][it - row.begin()] == 50.0);
  // Beta(100, 100): 0.25 / 201.
  CHECK(*it == doctest::Approx(0.25 / 201.0).epsilon(1e-12));
  CHECK(*it == doctest::Approx(0.0012438).epsilon(1e-4));
  CHECK(v["argmax_alpha"][0] == 50.0);
  CHECK(v["baseline"][0].get<double>() == doctest::Approx(51.0 * 51.0 / (102.0 * 102.0 * 103.0)));

  CHECK(f.get("/variance-surface?b=100&n=10", 200)["argmax_alpha"][0] == 90.0);
  const json all = f.get("/variance-surface?b=20&gamma=10", 200);
  CHECK(all["n"].size() == 21);
  CHECK(all["alpha"].size() == 9);

  CHECK(f.get("/variance-surface?b=100&n=101", 422)["code"] == 422);
  f.get("/variance-surface?n=5", 422);
  f.get("/variance-surface?b=abc", 422);
  f.get("/variance-surface?b=10&gamma=1", 422);
  CHECK(f.client.Get("/variance-surface?b=100&n=50")->body == f.client.Get("/variance-surface?b=100&n=50")->body);
}

TEST_CASE("ui route without a bundle") {
  Fixture f;
  CHECK_FALSE(f.server.ui_available());
  const json e = f.get("/", 404);
  CHECK(e["message"].get<std::string>().find("--ui-dir") != std::string::npos);
}

TEST_CASE("ui bundle is served when present") {
  const fs::path d = fs::temp_directory_path() / "stabsel_test_ui";
  fs::remove_all(d);
  fs::create_directories(d);
  csv::write_text(d / "index.html", "<html>ui</html>");
  Server server(ServerOptions{"127.0.0.1", 0, d, 1});
  CHECK(server.ui_available());
  const int port = server.start();
  httplib::Client c("127.0.0.1", port);
  auto r = c.Get("/index.html");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(r->body == "<html>ui</html>");
  CHECK(c.Get("/health")->status == 200);
}

TEST_CASE("binding a taken port fails") {
  Fixture f;
  Server other(ServerOptions{"127.0.0.1", f.port, std::nullopt, 1});
  CHECK_THROWS_AS(other.bind(), std::runtime_error);
  Server bad(ServerOptions{"127.0.0.1", 70000, std::nullopt, 1});
  CHECK_THROWS_AS(bad.bind(), std::invalid_argument);
}

TEST_CASE("a bound but unserved port is released") {
  int port = 0;
  {
    Server probe(ServerOptions{"127.0.0.1", 0, std::nullopt, 1});
    port = probe.bind();
  }
  Server again(ServerOptions{"127.0.0.1", port, std::nullopt, 1});
  CHECK(again.start() == port);
  httplib::Client c("127.0.0.1", port);
  auto r = c.Get("/health");
  REQUIRE(r);
  CHECK(r->status == 200);
}
