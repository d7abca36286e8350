#include "stabsel/server.hpp"

#include <httplib.h>
#include <unistd.h>

#include <random>
#include <stdexcept>

#include "stabsel/bayes.hpp"
#include "stabsel/csv.hpp"
#include "stabsel/parallel.hpp"
#include "stabsel/rng.hpp"
#include "stabsel/sweep.hpp"

#include <algorithm>
#include <cmath>

namespace stabsel {

using json = nlohmann::json;

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::Running: return "running";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// JobStore

JobStore::JobStore(std::size_t workers) : salt_(std::random_device{}()) {
  workers = std::max<std::size_t>(workers, 1);
  for (std::size_t i = 0; i < workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobStore::~JobStore() {
  {
    std::unique_lock lock(mutex_);
    stopping_ = true;
  }
  queued_.notify_all();
  for (auto& w : workers_) w.join();
}

std::string JobStore::next_id() {
  const std::uint64_t v = mix_seed(salt_, ++counter_);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "j%06llu-%08llx", static_cast<unsigned long long>(counter_),
                static_cast<unsigned long long>(v & 0xffffffffULL));
  return buf;
}

std::string JobStore::submit(JobConfig cfg) {
  cfg.validate();
  std::unique_lock lock(mutex_);
  std::string id = next_id();
  JobRecord rec;
  rec.id = id;
  rec.config = std::move(cfg);
  jobs_.emplace(id, std::move(rec));
  queue_.push_back(id);
  lock.unlock();
  queued_.notify_one();
  return id;
}

std::optional<JobRecord> JobStore::get(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

std::optional<JobRecord> JobStore::wait(const std::string& id, std::chrono::milliseconds timeout) const {
  std::shared_lock lock(mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  changed_.wait_for(lock, timeout, [&] { return it->second.status != JobStatus::Running; });
  return it->second;
}

void JobStore::worker_loop() {
  for (;;) {
    std::string id;
    JobConfig cfg;
    {
      std::unique_lock lock(mutex_);
      queued_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
      cfg = jobs_.at(id).config;
    }
    JobStatus status = JobStatus::Done;
    std::shared_ptr<const SelectionMatrix> matrix;
    double lambda = 0.0;
    std::string error;
    try {
      StabilityOptions so;
      so.threads = resolve_threads(cfg.threads);
      so.warn = [](std::string_view) {};
      SelectionRun run = run_selection(cfg, so);
      lambda = run.lambda;
      matrix = std::make_shared<const SelectionMatrix>(std::move(run.matrix));
    } catch (const std::exception& e) {
      status = JobStatus::Failed;
      error = e.what();
    }
    {
      std::unique_lock lock(mutex_);
      JobRecord& rec = jobs_.at(id);
      rec.matrix = std::move(matrix);
      rec.lambda = lambda;
      rec.error = std::move(error);
      rec.status = status;
    }
    changed_.notify_all();
  }
}

// ---------------------------------------------------------------------------
// HTTP helpers

namespace {

struct HttpError : std::runtime_error {
  int status;
  HttpError(int s, const std::string& msg) : std::runtime_error(msg), status(s) {}
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, json{{"code", status}, {"message", message}});
}

// Runs a handler, mapping exceptions to status codes.
template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const HttpError& e) {
    send_error(res, e.status, e.what());
  } catch (const ParseError& e) {
    send_error(res, 400, e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed body: ") + e.what());
  } catch (const std::invalid_argument& e) {
    send_error(res, 422, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

double number_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ParseError(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::vector<PriorEntry> priors_from_json(const json& body) {
  std::vector<PriorEntry> out;
  if (!body.contains("priors")) return out;
  const json& arr = body.at("priors");
  if (!arr.is_array()) throw ParseError("'priors' must be an array");
  for (const json& item : arr) {
    if (!item.is_object() || !item.contains("name") || !item.at("name").is_string()) {
      throw ParseError("each prior needs a string 'name'");
    }
    PriorEntry e;
    e.name = item.at("name").get<std::string>();
    const bool elicited = item.contains("zeta") || item.contains("xi");
    const bool shapes = item.contains("alpha") || item.contains("beta");
    if (elicited == shapes) throw ParseError("prior '" + e.name + "' needs either zeta,xi or alpha,beta");
    auto need = [&](const char* k) {
      if (!item.contains(k) || !item.at(k).is_number()) {
        throw ParseError("prior '" + e.name + "' needs numeric '" + k + "'");
      }
      return item.at(k).get<double>();
    };
    if (elicited) {
      e.elicited = std::pair{need("zeta"), need("xi")};
    } else {
      e.shapes = std::pair{need("alpha"), need("beta")};
    }
    out.push_back(std::move(e));
  }
  return out;
}

json report_to_json(std::span<const VariableReport> report) {
  json arr = json::array();
  for (const auto& r : report) {
    arr.push_back({{"index", r.index + 1},
                   {"name", r.name},
                   {"n", r.post.n},
                   {"frequency", r.frequency},
                   {"prior", {{"alpha", r.prior.alpha},
                              {"beta", r.prior.beta},
                              {"source", to_string(r.prior.source)},
                              {"note", r.prior.note}}},
                   {"alpha_post", r.post.alpha_post},
                   {"beta_post", r.post.beta_post},
                   {"mean", r.post.mean},
                   {"variance", r.post.variance},
                   {"ci_low", r.post.ci_low},
                   {"ci_high", r.post.ci_high},
                   {"selected", r.post.selected},
                   {"frequentist_selected", r.frequentist_selected}});
  }
  return arr;
}

json job_to_json(const JobRecord& rec) {
  json j{{"id", rec.id}, {"status", to_string(rec.status)}, {"config", to_json(rec.config)}};
  if (rec.status == JobStatus::Done) {
    j["lambda"] = rec.lambda;
    j["b"] = rec.matrix->rows();
    j["p"] = rec.matrix->cols();
  }
  if (rec.status == JobStatus::Failed) j["error"] = rec.error;
  return j;
}

std::size_t query_count(const httplib::Request& req, const char* key, std::optional<std::size_t> fallback) {
  if (!req.has_param(key)) {
    if (!fallback) throw std::invalid_argument(std::string("missing query parameter '") + key + "'");
    return *fallback;
  }
  const std::string v = req.get_param_value(key);
  double d = 0.0;
  if (!csv::try_parse_double(v, d) || d < 0.0 || d != std::floor(d) || d > 1e7) {
    throw std::invalid_argument(std::string("'") + key + "' must be a non-negative integer");
  }
  return static_cast<std::size_t>(d);
}

// Finished job or an HttpError (404 unknown, 409 not done).
JobRecord done_job(const JobStore& store, const std::string& id) {
  auto rec = store.get(id);
  if (!rec) throw HttpError(404, "unknown job '" + id + "'");
  if (rec->status != JobStatus::Done) {
    throw HttpError(409, "job '" + id + "' is " + std::string(to_string(rec->status)));
  }
  return *rec;
}

}  // namespace

// ---------------------------------------------------------------------------
// Server

Server::Server(ServerOptions opts)
    : opts_(std::move(opts)), store_(opts_.workers), http_(std::make_unique<httplib::Server>()) {
  // No SO_REUSEPORT: a second server on a taken port must fail to bind.
  http_->set_socket_options([this](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    bound_socket_ = sock;
  });
  install_routes();
}

Server::~Server() { stop(); }

void Server::install_routes() {
  httplib::Server& s = *http_;

  s.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, json{{"status", "ok"}});
  });

  s.Post("/jobs", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      JobConfig cfg = job_config_from_json(parse_body(req));
      const std::string id = store_.submit(std::move(cfg));
      send_json(res, 202, json{{"id", id}, {"status", "running"}});
    });
  });

  s.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto rec = store_.get(req.matches[1]);
      if (!rec) throw HttpError(404, "unknown job '" + std::string(req.matches[1]) + "'");
      send_json(res, 200, job_to_json(*rec));
    });
  });

  s.Get(R"(/jobs/([^/]+)/matrix)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const JobRecord rec = done_job(store_, req.matches[1]);
      res.status = 200;
      res.set_content(matrix_to_csv(*rec.matrix), "text/csv");
    });
  });

  s.Post(R"(/jobs/([^/]+)/posteriors)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const JobRecord rec = done_job(store_, req.matches[1]);
      const json body = parse_body(req);
      const double pi_thr = number_or(body, "pi_thr", rec.config.pi_thr);
      const double level = number_or(body, "level", rec.config.ci_level);
      const SelectionMatrix& m = *rec.matrix;
      const auto priors = resolve_priors(priors_from_json(body), m.names(), m.rows());
      const auto report = decision_report(m, priors, pi_thr, level);
      send_json(res, 200,
                json{{"id", rec.id}, {"b", m.rows()}, {"pi_thr", pi_thr}, {"level", level},
                     {"variables", report_to_json(report)}});
    });
  });

  s.Post(R"(/jobs/([^/]+)/heatmap)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const JobRecord rec = done_job(store_, req.matches[1]);
      const json body = parse_body(req);
      const SelectionMatrix& m = *rec.matrix;
      if (!body.contains("relevant") || !body.at("relevant").is_array()) {
        throw ParseError("'relevant' must be an array of variable names");
      }
      std::vector<std::size_t> truth;
      for (const json& nm : body.at("relevant")) {
        if (!nm.is_string()) throw ParseError("'relevant' entries must be strings");
        const auto it = std::find(m.names().begin(), m.names().end(), nm.get<std::string>());
        if (it == m.names().end()) throw std::invalid_argument("unknown variable '" + nm.get<std::string>() + "'");
        truth.push_back(static_cast<std::size_t>(it - m.names().begin()));
      }
      const auto zg = body.contains("zeta_grid") ? body.at("zeta_grid").get<std::vector<double>>() : default_zeta_grid();
      const auto xg = body.contains("xi_grid") ? body.at("xi_grid").get<std::vector<double>>() : default_xi_grid();
      const double pi_thr = number_or(body, "pi_thr", rec.config.pi_thr);
      const SweepGrid g = sweep_counts(m.counts(), m.rows(), truth, zg, xg, pi_thr);
      json relevant = json::array(), irrelevant = json::array();
      for (std::size_t zi = 0; zi < zg.size(); ++zi) {
        json rr = json::array(), ir = json::array();
        for (std::size_t xi = 0; xi < xg.size(); ++xi) {
          rr.push_back(g.at(zi, xi).true_positives);
          ir.push_back(g.at(zi, xi).false_positives);
        }
        relevant.push_back(rr);
        irrelevant.push_back(ir);
      }
      send_json(res, 200,
                json{{"zeta_grid", zg}, {"xi_grid", xg}, {"pi_thr", pi_thr}, {"relevant", relevant},
                     {"irrelevant", irrelevant}});
    });
  });

  s.Get("/variance-surface", [](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::size_t b = query_count(req, "b", std::nullopt);
      if (b < 1) throw std::invalid_argument("'b' must be at least 1");
      const std::size_t gamma = query_count(req, "gamma", b);
      if (gamma < 2) throw std::invalid_argument("'gamma' must be at least 2");
      std::vector<std::size_t> ns;
      if (req.has_param("n")) {
        const std::size_t n = query_count(req, "n", std::nullopt);
        if (n > b) throw std::invalid_argument("'n' must not exceed 'b'");
        ns.push_back(n);
      } else {
        for (std::size_t n = 0; n <= b; ++n) ns.push_back(n);
      }
      if (ns.size() * (gamma - 1) > 2'000'000) throw std::invalid_argument("surface too large");
      const auto alphas = alpha_range(gamma);
      const VarianceSurface vs = variance_surface(b, ns, alphas, gamma);
      json rows = json::array(), argmax = json::array();
      for (std::size_t i = 0; i < ns.size(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < alphas.size(); ++k) row.push_back(vs.at(i, k));
        rows.push_back(row);
        argmax.push_back(max_variance_alpha(b, ns[i], gamma));
      }
      send_json(res, 200,
                json{{"b", b}, {"gamma", gamma}, {"n", ns}, {"alpha", alphas}, {"informative", rows},
                     {"baseline", vs.baseline}, {"argmax_alpha", argmax}});
    });
  });

  if (opts_.ui_dir && std::filesystem::is_directory(*opts_.ui_dir) &&
      std::filesystem::exists(*opts_.ui_dir / "index.html")) {
    ui_available_ = s.set_mount_point("/", opts_.ui_dir->string());
  }
  if (!ui_available_) {
    s.Get("/", [](const httplib::Request&, httplib::Response& res) {
      send_error(res, 404,
                 "UI bundle not found: build the elicitation UI and start the server with --ui-dir <dist>; "
                 "the JSON API is available");
    });
  }
}

int Server::bind() {
  if (opts_.port < 0 || opts_.port > 65535) throw std::invalid_argument("port out of range");
  if (opts_.port == 0) {
    bound_port_ = http_->bind_to_any_port(opts_.host);
  } else {
    bound_port_ = http_->bind_to_port(opts_.host, opts_.port) ? opts_.port : -1;
  }
  if (bound_port_ <= 0) {
    bound_socket_ = -1;
    throw std::runtime_error("cannot bind " + opts_.host + ":" + std::to_string(opts_.port) +
                             " (port in use or not permitted)");
  }
  return bound_port_;
}

void Server::listen() {
  if (bound_port_ <= 0) throw std::logic_error("Server::listen before bind");
  listening_ = true;
  http_->listen_after_bind();
}

int Server::start() {
  const int port = bind();
  listening_ = true;
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return port;
}

void Server::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
  // httplib only closes a socket it is serving on.
  if (!listening_ && bound_socket_ >= 0) {
    ::close(bound_socket_);
    bound_socket_ = -1;
    bound_port_ = -1;
  }
}

}  // namespace stabsel
