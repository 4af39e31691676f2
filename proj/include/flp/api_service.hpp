#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <json.hpp>

#include "flp/solve.hpp"

namespace httplib {
class Server;
}

namespace flp {

struct HttpResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

enum class JobStatus { queued, running, done, failed };
std::string_view to_string(JobStatus s);

using Catalog = std::map<std::string, std::shared_ptr<const ProblemInstance>>;

/// Every *.json file in `dir`, keyed by file stem.
Catalog load_catalog(const std::filesystem::path& dir);

/// Transport-independent request handling. Jobs run on one background worker
/// in submission order; each job owns its instance copy and result.
class PlannerService {
 public:
  explicit PlannerService(Catalog catalog, std::shared_ptr<const Policy> policy = nullptr, bool timing = true);
  ~PlannerService();
  PlannerService(const PlannerService&) = delete;
  PlannerService& operator=(const PlannerService&) = delete;

  HttpResponse list_instances() const;
  HttpResponse submit_solve(const nlohmann::json& body);
  HttpResponse get_solution(const std::string& job_id) const;
  HttpResponse whatif(const nlohmann::json& body) const;

  /// Blocks until the queue is drained.
  void wait_idle();

 private:
  struct Job {
    std::string id;
    std::shared_ptr<const ProblemInstance> instance;
    SolveRequest request;
    JobStatus status = JobStatus::queued;
    std::shared_ptr<const MflpSolution> result;
    std::string error;
  };

  void worker_loop();

  Catalog catalog_;
  std::shared_ptr<const Policy> policy_;
  bool timing_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::deque<std::shared_ptr<Job>> queue_;
  std::size_t next_id_ = 1;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread worker_;
};

/// GET /instances, POST /solve, GET /solutions/{id}, POST /whatif.
void register_routes(httplib::Server& server, PlannerService& service);

HttpResponse error_response(int status, std::string_view code, std::string_view message, std::string_view field = {});

}  // namespace flp
