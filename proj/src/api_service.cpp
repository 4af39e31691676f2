#include "flp/api_service.hpp"

#include <algorithm>
#include <httplib.h>

#include "flp/cost_engine.hpp"
#include "flp/serialize.hpp"

namespace flp {

namespace {

using json = nlohmann::json;

// Request-validation failure carrying the HTTP status to report.
struct RequestError {
  int status;
  std::string code;
  std::string message;
  std::string field;
};

template <class T>
T field_as(const json& body, const char* name, const T& fallback) {
  if (!body.contains(name) || body[name].is_null()) return fallback;
  try {
    return body[name].get<T>();
  } catch (const json::exception&) {
    throw RequestError{400, "invalid_request", std::string("wrong type for '") + name + "'", name};
  }
}

std::vector<NodeId> node_list(const json& v, const std::string& field) {
  if (!v.is_array()) throw RequestError{400, "invalid_pins", "expected a list of node ids", field};
  std::vector<NodeId> out;
  for (const auto& x : v) {
    if (!x.is_number_integer()) throw RequestError{400, "invalid_pins", "node ids must be integers", field};
    out.push_back(x.get<NodeId>());
  }
  return out;
}

void send(httplib::Response& res, const HttpResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::queued: return "queued";
    case JobStatus::running: return "running";
    case JobStatus::done: return "done";
    case JobStatus::failed: return "failed";
  }
  return "unknown";
}

HttpResponse error_response(int status, std::string_view code, std::string_view message, std::string_view field) {
  HttpResponse r;
  r.status = status;
  r.body["code"] = code;
  r.body["message"] = message;
  if (!field.empty()) r.body["field"] = field;
  return r;
}

Catalog load_catalog(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("not a directory: '" + dir.string() + "'", "instances");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  Catalog catalog;
  for (const auto& f : files)
    catalog.emplace(f.stem().string(), std::make_shared<const ProblemInstance>(maybe_with_distance_matrix(load_instance(f))));
  return catalog;
}

PlannerService::PlannerService(Catalog catalog, std::shared_ptr<const Policy> policy, bool timing)
    : catalog_(std::move(catalog)), policy_(std::move(policy)), timing_(timing) {
  worker_ = std::thread([this] { worker_loop(); });
}

PlannerService::~PlannerService() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void PlannerService::worker_loop() {
  while (true) {
    std::shared_ptr<Job> job;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      job = queue_.front();
      queue_.pop_front();
      job->status = JobStatus::running;
      busy_ = true;
    }
    std::shared_ptr<const MflpSolution> result;
    std::string error;
    try {
      result = std::make_shared<const MflpSolution>(solve_instance(*job->instance, job->request, policy_));
    } catch (const std::exception& e) {
      error = e.what();
    }
    {
      std::lock_guard lock(mutex_);
      if (result) {
        job->result = std::move(result);
        job->status = JobStatus::done;
      } else {
        job->error = std::move(error);
        job->status = JobStatus::failed;
      }
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

void PlannerService::wait_idle() {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

HttpResponse PlannerService::list_instances() const {
  HttpResponse r;
  r.body["instances"] = nlohmann::ordered_json::array();
  for (const auto& [id, inst] : catalog_) {
    nlohmann::ordered_json e;
    e["id"] = id;
    e["n"] = inst->size();
    e["metric"] = to_string(inst->metric());
    e["budgets"] = nlohmann::ordered_json::object();
    for (const auto& t : inst->types()) e["budgets"][t.name] = t.budget;
    r.body["instances"].push_back(std::move(e));
  }
  return r;
}

HttpResponse PlannerService::submit_solve(const json& body) {
  try {
    if (!body.is_object()) throw RequestError{400, "invalid_request", "body must be a JSON object", ""};
    if (!body.contains("instance")) throw RequestError{400, "invalid_request", "missing instance", "instance"};
    std::shared_ptr<const ProblemInstance> base;
    const json& ref = body["instance"];
    if (ref.is_string()) {
      auto it = catalog_.find(ref.get<std::string>());
      if (it == catalog_.end()) throw RequestError{404, "unknown_instance", "no instance '" + ref.get<std::string>() + "'", "instance"};
      base = it->second;
    } else if (ref.is_object()) {
      try {
        base = std::make_shared<const ProblemInstance>(maybe_with_distance_matrix(parse_instance(ref.dump())));
      } catch (const Error& e) {
        throw RequestError{400, "invalid_instance", e.what(), "instance." + e.field()};
      }
    } else {
      throw RequestError{400, "invalid_request", "instance must be a catalog id or an inline instance", "instance"};
    }

    ProblemInstance inst = *base;
    if (body.contains("budgets")) {
      const json& b = body["budgets"];
      if (!b.is_object()) throw RequestError{400, "invalid_budgets", "budgets must be an object", "budgets"};
      std::vector<int> budgets;
      for (const auto& t : inst.types()) budgets.push_back(t.budget);
      for (const auto& [name, value] : b.items()) {
        std::size_t k;
        try {
          k = inst.type_index(name);
        } catch (const Error&) {
          throw RequestError{400, "invalid_budgets", "unknown type '" + name + "'", "budgets." + name};
        }
        if (!value.is_number_integer()) throw RequestError{400, "invalid_budgets", "budget must be an integer", "budgets." + name};
        budgets[k] = value.get<int>();
      }
      try {
        inst = inst.with_budgets(budgets);
      } catch (const Error& e) {
        throw RequestError{400, "invalid_budgets", e.what(), e.field()};
      }
    }

    SolveRequest req;
    req.method = field_as<std::string>(body, "method", policy_ ? "drl" : "greedy");
    if (!is_solve_method(req.method)) throw RequestError{400, "invalid_method", "unknown method '" + req.method + "'", "method"};
    if (req.method == "drl" && !policy_) throw RequestError{400, "invalid_method", "server has no policy loaded", "method"};
    req.steps = field_as<int>(body, "steps", -1);
    req.seed = field_as<std::uint64_t>(body, "seed", 0);

    req.options.pinned.assign(inst.num_types(), {});
    if (body.contains("pinned")) {
      const json& pins = body["pinned"];
      if (!pins.is_object()) throw RequestError{400, "invalid_pins", "pinned must be an object", "pinned"};
      for (const auto& [name, list] : pins.items()) {
        std::size_t k;
        try {
          k = inst.type_index(name);
        } catch (const Error&) {
          throw RequestError{400, "invalid_pins", "unknown type '" + name + "'", "pinned." + name};
        }
        req.options.pinned[k] = node_list(list, "pinned." + name);
      }
      const bool any = std::any_of(req.options.pinned.begin(), req.options.pinned.end(),
                                   [](const auto& v) { return !v.empty(); });
      if (any && req.method != "drl" && req.method != "greedy")
        throw RequestError{400, "invalid_pins", "pins need method drl or greedy", "pinned"};
      try {
        validate_pins(inst, req.options);
      } catch (const Error& e) {
        throw RequestError{400, "invalid_pins", e.what(), e.field()};
      }
    }

    auto job = std::make_shared<Job>();
    job->instance = std::make_shared<const ProblemInstance>(std::move(inst));
    job->request = std::move(req);
    {
      std::lock_guard lock(mutex_);
      job->id = "job-" + std::to_string(next_id_++);
      jobs_.emplace(job->id, job);
      queue_.push_back(job);
    }
    cv_.notify_all();
    HttpResponse r;
    r.status = 202;
    r.body["job_id"] = job->id;
    r.body["status"] = "queued";
    return r;
  } catch (const RequestError& e) {
    return error_response(e.status, e.code, e.message, e.field);
  }
}

HttpResponse PlannerService::get_solution(const std::string& job_id) const {
  std::shared_ptr<Job> job;
  JobStatus status;
  std::shared_ptr<const MflpSolution> result;
  std::string error;
  {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return error_response(404, "unknown_solution", "no job '" + job_id + "'", "id");
    job = it->second;
    status = job->status;
    result = job->result;
    error = job->error;
  }
  if (status == JobStatus::queued || status == JobStatus::running) {
    HttpResponse r = error_response(425, "not_ready", "job is " + std::string(to_string(status)));
    r.body["status"] = to_string(status);
    return r;
  }
  if (status == JobStatus::failed) {
    HttpResponse r = error_response(500, "solve_failed", error);
    r.body["status"] = "failed";
    return r;
  }
  HttpResponse r;
  r.body["job_id"] = job_id;
  r.body["status"] = "done";
  r.body["method"] = job->request.method;
  const auto doc = mflp_to_json(*job->instance, *result, timing_);
  for (const auto& [k, v] : doc.items()) r.body[k] = v;
  return r;
}

HttpResponse PlannerService::whatif(const json& body) const {
  try {
    if (!body.is_object()) throw RequestError{400, "invalid_request", "body must be a JSON object", ""};
    const auto id = field_as<std::string>(body, "solution", "");
    if (id.empty()) throw RequestError{400, "invalid_request", "missing solution", "solution"};
    std::shared_ptr<Job> job;
    std::shared_ptr<const MflpSolution> result;
    {
      std::lock_guard lock(mutex_);
      auto it = jobs_.find(id);
      if (it == jobs_.end()) throw RequestError{404, "unknown_solution", "no job '" + id + "'", "solution"};
      job = it->second;
      result = job->result;
    }
    if (!result) throw RequestError{425, "not_ready", "solution is not available", "solution"};
    const ProblemInstance& inst = *job->instance;

    for (const char* f : {"insert", "remove"})
      if (!body.contains(f)) throw RequestError{400, "invalid_request", std::string("missing ") + f, f};
    std::size_t k;
    if (body.contains("type") && body["type"].is_string()) {
      try {
        k = inst.type_index(body["type"].get<std::string>());
      } catch (const Error&) {
        throw RequestError{400, "invalid_request", "unknown type", "type"};
      }
    } else if (inst.num_types() == 1 && (!body.contains("type") || body["type"].is_null())) {
      k = 0;
    } else {
      throw RequestError{400, "invalid_request", "type must be a type name", "type"};
    }
    if (!body["insert"].is_number_integer()) throw RequestError{400, "invalid_request", "insert must be an integer", "insert"};
    if (!body["remove"].is_number_integer()) throw RequestError{400, "invalid_request", "remove must be an integer", "remove"};
    const auto insert = body["insert"].get<long long>();
    const auto remove = body["remove"].get<long long>();
    const auto n = static_cast<long long>(inst.size());
    if (insert < 0 || insert >= n) throw RequestError{409, "invalid_swap", "insert node out of range", "insert"};
    const auto& mine = result->placements[k];
    if (std::find(mine.begin(), mine.end(), remove) == mine.end())
      throw RequestError{409, "invalid_swap", "remove node is not a facility of this type", "remove"};
    for (const auto& placement : result->placements)
      if (std::find(placement.begin(), placement.end(), insert) != placement.end())
        throw RequestError{409, "invalid_swap", "insert node is already occupied", "insert"};

    // Evaluate against a fresh state so the stored solution is never touched.
    const AssignmentState state = build_assignment(inst, k, mine);
    const double total = placements_access_cost(inst, result->placements);
    HttpResponse r;
    if (state.size() >= 2) {
      const SwapComponents c = swap_components(inst, state, static_cast<NodeId>(insert), static_cast<NodeId>(remove));
      r.body["gain"] = c.gain;
      r.body["loss"] = c.loss;
      r.body["extra"] = c.extra;
      r.body["delta"] = c.delta;
      r.body["new_total_ac"] = total + c.delta;
    } else {
      const double d = swap_delta(inst, state, static_cast<NodeId>(insert), static_cast<NodeId>(remove));
      r.body["gain"] = nullptr;
      r.body["loss"] = nullptr;
      r.body["extra"] = nullptr;
      r.body["delta"] = d;
      r.body["new_total_ac"] = total + d;
    }
    return r;
  } catch (const RequestError& e) {
    return error_response(e.status, e.code, e.message, e.field);
  }
}

void register_routes(httplib::Server& server, PlannerService& service) {
  auto with_body = [](const httplib::Request& req, httplib::Response& res, auto&& handler) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      send(res, error_response(400, "invalid_json", e.what()));
      return;
    }
    send(res, handler(body));
  };
  server.Get("/instances", [&service](const httplib::Request&, httplib::Response& res) {
    send(res, service.list_instances());
  });
  server.Post("/solve", [&service, with_body](const httplib::Request& req, httplib::Response& res) {
    with_body(req, res, [&](const json& b) { return service.submit_solve(b); });
  });
  server.Get(R"(/solutions/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    send(res, service.get_solution(req.matches[1]));
  });
  server.Post("/whatif", [&service, with_body](const httplib::Request& req, httplib::Response& res) {
    with_body(req, res, [&](const json& b) { return service.whatif(b); });
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    send(res, error_response(500, "internal", message));
  });
}

}  // namespace flp
