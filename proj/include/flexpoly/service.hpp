#pragma once

// Local HTTP service over the shared api layer. Build, check and net
// answer synchronously; flex and search run as background jobs polled by id.

#include "flexpoly/api.hpp"

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>

namespace flexpoly {

enum class JobState { Pending, Running, Done, Failed };

inline std::string to_string(JobState s) {
  switch (s) {
    case JobState::Pending: return "pending";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    default: return "failed";
  }
}

struct JobInfo {
  std::string id;
  std::string kind;
  JobState state = JobState::Pending;
  std::string result;  // serialized payload once done
  json error;          // error payload once failed
  int error_status = 0;
};

/// Background jobs, one worker thread each. Results are kept for the
/// store's lifetime; the destructor waits for running work.
class JobStore {
 public:
  JobStore() = default;
  JobStore(const JobStore&) = delete;
  JobStore& operator=(const JobStore&) = delete;
  ~JobStore() {
    std::vector<std::thread> workers;
    {
      std::lock_guard lock(mu_);
      workers.swap(workers_);
    }
    for (auto& t : workers) t.join();
  }

  std::string submit(const std::string& kind, std::function<json()> work) {
    std::lock_guard lock(mu_);
    const std::string id = "job-" + std::to_string(++counter_);
    jobs_[id] = JobInfo{id, kind};
    workers_.emplace_back([this, id, work = std::move(work)] {
      set_state(id, JobState::Running);
      try {
        std::string text = api::serialize(work());
        std::lock_guard lock(mu_);
        jobs_[id].result = std::move(text);
        jobs_[id].state = JobState::Done;
      } catch (const std::exception& e) {
        std::lock_guard lock(mu_);
        jobs_[id].error = api::error_payload(e);
        jobs_[id].error_status = api::http_status(e);
        jobs_[id].state = JobState::Failed;
      }
    });
    return id;
  }

  std::optional<JobInfo> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
  }

  /// Blocks until the job leaves the queue/running states.
  JobInfo wait(const std::string& id) const {
    for (;;) {
      auto j = get(id);
      if (!j) throw NotFoundError("unknown job '" + id + "'");
      if (j->state == JobState::Done || j->state == JobState::Failed) return *j;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }

 private:
  void set_state(const std::string& id, JobState s) {
    std::lock_guard lock(mu_);
    jobs_[id].state = s;
  }

  mutable std::mutex mu_;
  std::map<std::string, JobInfo> jobs_;
  std::vector<std::thread> workers_;
  std::uint64_t counter_ = 0;
};

inline constexpr int kDefaultPort = 8765;
inline constexpr const char* kPortEnvVar = "FLEXPOLY_PORT";

/// Port from the environment when set, otherwise `fallback`.
inline int port_from_env(int fallback = kDefaultPort) {
  const char* v = std::getenv(kPortEnvVar);
  if (!v || !*v) return fallback;
  int port = 0;
  const std::string s(v);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), port);
  if (ec != std::errc() || p != s.data() + s.size() || port < 0 || port > 65535) {
    throw ValidationError(std::string(kPortEnvVar) + " must be a port number");
  }
  return port;
}

class Service {
 public:
  explicit Service(std::string host = "127.0.0.1") : host_(std::move(host)) { routes(); }
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;
  ~Service() { stop(); }

  /// Binds the listening socket; port 0 picks a free one. Returns the port.
  int bind(int port) {
    if (port == 0) {
      port_ = server_.bind_to_any_port(host_);
      if (port_ < 0) throw ValidationError("cannot bind " + host_);
    } else {
      if (!server_.bind_to_port(host_, port)) throw ValidationError("cannot bind " + host_ + ":" + std::to_string(port));
      port_ = port;
    }
    return port_;
  }

  /// Serves until stop(); call after bind().
  void run() { server_.listen_after_bind(); }

  /// Serves on a background thread.
  void start() {
    thread_ = std::thread([this] { run(); });
    server_.wait_until_ready();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  const std::string& host() const { return host_; }
  JobStore& jobs() { return jobs_; }

 private:
  static void send_json(httplib::Response& res, const std::string& body, int status = 200) {
    res.status = status;
    res.set_content(body, "application/json");
  }

  static void send_error(httplib::Response& res, const std::exception& e) {
    send_json(res, api::serialize(api::error_payload(e)), api::http_status(e));
  }

  /// Runs `fn`, mapping exceptions onto status codes.
  template <class F>
  static void guarded(httplib::Response& res, F&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  }

  json job_status(const JobInfo& j) const {
    json out{{"id", j.id}, {"kind", j.kind}, {"status", to_string(j.state)}};
    if (j.state == JobState::Failed) out["error"] = j.error["error"];
    return out;
  }

  void routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
    server_.Get("/models", [](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, api::serialize(api::models())); });
    });
    server_.Post("/build", [](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, api::serialize(api::build(api::parse_json(req.body)))); });
    });
    server_.Post("/check", [](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, api::serialize(api::check(api::parse_json(req.body)))); });
    });
    server_.Post("/net", [](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { res.set_content(api::net(api::parse_json(req.body)), "image/svg+xml"); });
    });
    server_.Post("/flex", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        // validation happens here so bad requests fail fast with 400
        auto plan = std::make_shared<api::FlexPlan>(api::plan_flex(api::parse_json(req.body)));
        const auto id = jobs_.submit("flex", [plan] { return api::run_flex(*plan); });
        send_json(res, api::serialize({{"id", id}, {"status", "pending"}}), 202);
      });
    });
    server_.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = api::parse_json(req.body);
        api::detail::require_object(body);
        const std::string model = body.value("model", std::string());
        (void)model_spec(model);  // unknown model: 404 now rather than a failed job
        const auto id = jobs_.submit("search", [body] { return api::search(body); });
        send_json(res, api::serialize({{"id", id}, {"status", "pending"}}), 202);
      });
    });
    server_.Get(R"(/jobs/([A-Za-z0-9\-]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto j = jobs_.get(req.matches[1]);
        if (!j) throw NotFoundError("unknown job '" + std::string(req.matches[1]) + "'");
        send_json(res, api::serialize(job_status(*j)));
      });
    });
    auto result = [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto j = jobs_.get(req.matches[1]);
        if (!j) throw NotFoundError("unknown job '" + std::string(req.matches[1]) + "'");
        if (j->state == JobState::Done) return send_json(res, j->result);
        if (j->state == JobState::Failed) return send_json(res, api::serialize(j->error), j->error_status);
        send_json(res, api::serialize(job_status(*j)), 409);
      });
    };
    server_.Get(R"(/jobs/([A-Za-z0-9\-]+)/frames)", result);
    server_.Get(R"(/jobs/([A-Za-z0-9\-]+)/result)", result);
  }

  std::string host_;
  int port_ = -1;
  httplib::Server server_;
  JobStore jobs_;
  std::thread thread_;
};

}  // namespace flexpoly
