#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "keyminer/canonical_json.hpp"
#include "keyminer/error.hpp"

namespace httplib {
class Server;
}

namespace keyminer {

// An error with the HTTP status it maps to.
class ApiError : public Error {
 public:
  ApiError(int status, const std::string& msg) : Error(msg), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

struct ServiceOptions {
  std::size_t max_sessions = 16;  // concurrently active (unfinished) sessions
  std::chrono::milliseconds answer_timeout{std::chrono::seconds(600)};
  // When set, each session's audit log and dataset are kept here and
  // finished sessions are recovered from them at start-up.
  std::filesystem::path audit_dir;
  // Show goal values in questions once a session has finished.
  bool reveal_goals_after_done = false;
};

enum class SessionState { kAwaitingAnswer, kRunning, kDone, kFailed };

std::string_view to_string(SessionState s);

struct Session;

// Keys sessions behind the /v1 JSON API. Every method is thread-safe and
// returns a canonical JSON document or throws ApiError.
//
//   POST /v1/sessions                      {"csv": "...", "config": {...}}
//   GET  /v1/sessions/{id}                 state summary
//   GET  /v1/sessions/{id}/question        pending pair, independent cells only
//   POST /v1/sessions/{id}/answer          {"choice": "a"|"b", "question": n}
//   GET  /v1/sessions/{id}/result|tree|audit|profile
//   POST /v1/sessions/{id}/plan            {"from": leaf, "to": leaf}
//   POST /v1/sessions/{id}/whatif          {"deltas": [range, ...]}
class SessionService {
 public:
  explicit SessionService(ServiceOptions options = {});
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  // Parses the dataset, starts the engine and returns once the session is
  // waiting for an answer, finished, or failed.
  nlohmann::json create_session(std::string_view csv, const nlohmann::json& config);
  nlohmann::json status(const std::string& id);
  nlohmann::json next_question(const std::string& id);
  // Returns once the engine has consumed the answer and settled again.
  nlohmann::json submit_answer(const std::string& id, const nlohmann::json& body);
  // artifact: result, tree, audit, profile. `query` holds URL parameters.
  nlohmann::json get(const std::string& id, const std::string& artifact,
                     const std::map<std::string, std::string>& query = {});
  // artifact: plan, whatif.
  nlohmann::json post(const std::string& id, const std::string& artifact,
                      const nlohmann::json& body);

  std::size_t session_count() const;

  // Registers the routes on `server`.
  void bind(httplib::Server& server);

 private:
  std::shared_ptr<Session> find(const std::string& id) const;
  void recover();
  void start_engine(const std::shared_ptr<Session>& s);

  ServiceOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

// Blocks serving HTTP on host:port until the process is stopped.
int serve(const std::string& host, int port, ServiceOptions options);

}  // namespace keyminer
