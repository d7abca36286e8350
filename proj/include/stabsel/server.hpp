#pragma once

// Local HTTP service: runs stability jobs in the background and recomputes
// posteriors from a finished job's selection matrix on demand.
//
//   GET  /health
//   POST /jobs                    body: job config JSON (see job.hpp) -> 202 {"id"}
//   GET  /jobs/{id}
//   GET  /jobs/{id}/matrix        text/csv
//   POST /jobs/{id}/posteriors    {"priors": [...], "pi_thr", "level"}
//   POST /jobs/{id}/heatmap       {"relevant": [names], "zeta_grid", "xi_grid", "pi_thr"}
//   GET  /variance-surface?b=&n=&gamma=
//
// Errors are {"code": <http status>, "message": "..."}.

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "stabsel/job.hpp"
#include "stabsel/stability.hpp"

namespace httplib {
class Server;
}

namespace stabsel {

enum class JobStatus { Running, Done, Failed };
std::string_view to_string(JobStatus s);

struct JobRecord {
  std::string id;
  JobConfig config;
  JobStatus status = JobStatus::Running;
  std::shared_ptr<const SelectionMatrix> matrix;  // set once Done
  double lambda = 0.0;
  std::string error;
};

/// Thread-safe in-memory job table with a background worker pool.
class JobStore {
 public:
  explicit JobStore(std::size_t workers = 1);
  ~JobStore();
  JobStore(const JobStore&) = delete;
  JobStore& operator=(const JobStore&) = delete;

  /// Queues the job and returns its id immediately.
  std::string submit(JobConfig cfg);
  /// Snapshot of the record, or nullopt for an unknown id.
  std::optional<JobRecord> get(const std::string& id) const;
  /// Blocks until the job leaves Running or the timeout expires.
  std::optional<JobRecord> wait(const std::string& id, std::chrono::milliseconds timeout) const;

 private:
  void worker_loop();
  std::string next_id();

  mutable std::shared_mutex mutex_;
  mutable std::condition_variable_any changed_;
  std::unordered_map<std::string, JobRecord> jobs_;
  std::deque<std::string> queue_;
  std::condition_variable_any queued_;
  bool stopping_ = false;
  std::uint64_t counter_ = 0;
  std::uint64_t salt_;
  std::vector<std::thread> workers_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  std::optional<std::filesystem::path> ui_dir;
  std::size_t workers = 1;
};

class Server {
 public:
  explicit Server(ServerOptions opts);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the socket; throws std::runtime_error if the port is taken.
  /// Returns the bound port.
  int bind();
  /// Serves until stop(); bind() must have succeeded.
  void listen();
  /// bind() then listen() on a background thread.
  int start();
  void stop();

  JobStore& jobs() { return store_; }
  bool ui_available() const { return ui_available_; }

 private:
  void install_routes();

  ServerOptions opts_;
  JobStore store_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  bool ui_available_ = false;
  int bound_port_ = -1;
  // Closed by stop() when the socket was bound but never served.
  int bound_socket_ = -1;
  std::atomic<bool> listening_{false};
};

}  // namespace stabsel
