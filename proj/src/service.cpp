#include "keyminer/service.hpp"

#include <condition_variable>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "keyminer/audit.hpp"
#include "keyminer/keys.hpp"
#include "keyminer/planner.hpp"
#include "keyminer/profiler.hpp"
#include "keyminer/table.hpp"

namespace keyminer {

struct Session {
  std::string id;
  std::string csv;
  std::unique_ptr<const Table> table;
  KeysConfig config;
  bool interactive = false;

  mutable std::mutex m;
  std::condition_variable cv;
  SessionState state = SessionState::kRunning;
  struct Pending {
    std::size_t question = 0;
    std::size_t a = 0;
    std::size_t b = 0;
  };
  std::optional<Pending> pending;
  std::optional<Choice> answer;
  bool closing = false;

  std::unique_ptr<AuditLog> log;
  std::optional<KeysResult> result;
  std::optional<PlanTree> tree;
  std::string error;
  std::thread engine;
};

namespace {

std::string new_id() {
  static std::mutex m;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(m);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(gen()));
  return buf;
}

bool settled(SessionState s) { return s != SessionState::kRunning; }

nlohmann::json row_cells(const Table& table, std::size_t id, bool with_goals) {
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& col : table.columns()) {
    if (col.independent() || (with_goals && col.goal())) {
      cells[col.name] = table.cell_text(id, col.index);
    }
  }
  return {{"id", id}, {"cells", std::move(cells)}};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void require(bool ok, int status, const std::string& msg) {
  if (!ok) throw ApiError(status, msg);
}

}  // namespace

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::kAwaitingAnswer: return "awaiting-answer";
    case SessionState::kRunning: return "running";
    case SessionState::kDone: return "done";
    case SessionState::kFailed: return "failed";
  }
  return "failed";
}

SessionService::SessionService(ServiceOptions options) : options_(std::move(options)) {
  if (!options_.audit_dir.empty()) {
    std::filesystem::create_directories(options_.audit_dir);
    recover();
  }
}

SessionService::~SessionService() {
  std::map<std::string, std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mutex_);
    all = sessions_;
  }
  for (auto& [id, s] : all) {
    {
      std::lock_guard lock(s->m);
      s->closing = true;
    }
    s->cv.notify_all();
    if (s->engine.joinable()) s->engine.join();
  }
}

void SessionService::recover() {
  for (const auto& entry : std::filesystem::directory_iterator(options_.audit_dir)) {
    if (entry.path().extension() != ".jsonl") continue;
    const auto csv_path = std::filesystem::path(entry.path()).replace_extension(".csv");
    if (!std::filesystem::exists(csv_path)) continue;
    try {
      auto log = std::make_unique<AuditLog>(AuditLog::read(entry.path()));
      const bool finished = !log->events().empty() &&
                            log->events().back().kind == EventKind::kStop;
      if (!finished) continue;
      auto s = std::make_shared<Session>();
      s->id = entry.path().stem().string();
      s->csv = read_file(csv_path);
      s->table = std::make_unique<const Table>(parse_csv(s->csv));
      s->config = keys_config_from_json(log->header().config);
      s->interactive = log->header().oracle == "interactive";
      ReplayOptions ro;
      ro.fallback.reset();
      s->result = replay(*log, *s->table, ro);
      s->log = std::move(log);
      s->state = SessionState::kDone;
      std::lock_guard lock(mutex_);
      sessions_[s->id] = std::move(s);
    } catch (const std::exception&) {
      // Logs that no longer replay are left on disk untouched.
    }
  }
}

std::shared_ptr<Session> SessionService::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ApiError(404, "no session '" + id + "'");
  return it->second;
}

std::size_t SessionService::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

void SessionService::start_engine(const std::shared_ptr<Session>& s) {
  const auto timeout = options_.answer_timeout;
  Session* raw = s.get();
  s->engine = std::thread([raw, timeout] {
    AnswerSource source = [raw, timeout](const Row& a, const Row& b, std::size_t q) {
      std::unique_lock lock(raw->m);
      raw->pending = Session::Pending{q, a.id, b.id};
      raw->answer.reset();
      raw->state = SessionState::kAwaitingAnswer;
      raw->cv.notify_all();
      const bool got = raw->cv.wait_for(lock, timeout, [raw] {
        return raw->answer.has_value() || raw->closing;
      });
      if (raw->closing) throw SessionError("session closed");
      if (!got) throw SessionError("no answer within the timeout");
      const Choice c = *raw->answer;
      raw->answer.reset();
      raw->pending.reset();
      raw->state = SessionState::kRunning;
      return c;
    };
    try {
      Oracle oracle = Oracle::interactive(*raw->table, source);
      oracle.attach(raw->log.get());
      KeysResult r = keys0_run(*raw->table, raw->config, oracle);
      std::lock_guard lock(raw->m);
      raw->result = std::move(r);
      raw->pending.reset();
      raw->state = SessionState::kDone;
    } catch (const std::exception& e) {
      std::lock_guard lock(raw->m);
      raw->error = e.what();
      raw->pending.reset();
      raw->state = SessionState::kFailed;
    }
    raw->cv.notify_all();
  });
}

nlohmann::json SessionService::create_session(std::string_view csv,
                                              const nlohmann::json& config) {
  require(config.is_object(), 400, "config must be a JSON object");
  const std::string mode = config.value("mode", std::string("auto"));
  require(mode == "auto" || mode == "interactive", 400,
          "mode must be \"auto\" or \"interactive\"");

  auto s = std::make_shared<Session>();
  s->id = new_id();
  s->csv = std::string(csv);
  s->interactive = mode == "interactive";
  try {
    nlohmann::json keys_json = config;
    keys_json.erase("mode");
    s->config = keys_config_from_json(keys_json);
    s->table = std::make_unique<const Table>(parse_csv(s->csv));
    if (s->table->size() < s->config.effective_min_size(s->table->size())) {
      throw ConfigError("dataset has too few rows for a run");
    }
  } catch (const ApiError&) {
    throw;
  } catch (const Error& e) {
    throw ApiError(400, e.what());
  }

  {
    std::lock_guard lock(mutex_);
    std::size_t active = 0;
    for (const auto& [id, other] : sessions_) {
      std::lock_guard slock(other->m);
      if (!settled(other->state) || other->state == SessionState::kAwaitingAnswer) ++active;
    }
    require(active < options_.max_sessions, 429, "too many active sessions");
    sessions_[s->id] = s;
  }

  const OracleMode oracle_mode = s->interactive ? OracleMode::kInteractive : OracleMode::kAuto;
  s->log = std::make_unique<AuditLog>(make_header(s->table->content_hash(), s->config,
                                                  oracle_mode));
  if (!options_.audit_dir.empty()) {
    std::ofstream(options_.audit_dir / (s->id + ".csv"), std::ios::binary) << s->csv;
    s->log->write_to(options_.audit_dir / (s->id + ".jsonl"));
  }

  if (s->interactive) {
    start_engine(s);
    std::unique_lock lock(s->m);
    s->cv.wait(lock, [&] { return settled(s->state); });
  } else {
    try {
      Oracle oracle = Oracle::automatic(*s->table, s->config.domination);
      oracle.attach(s->log.get());
      KeysResult r = keys0_run(*s->table, s->config, oracle);
      std::lock_guard lock(s->m);
      s->result = std::move(r);
      s->state = SessionState::kDone;
    } catch (const Error& e) {
      std::lock_guard lock(s->m);
      s->error = e.what();
      s->state = SessionState::kFailed;
    }
  }
  return status(s->id);
}

nlohmann::json SessionService::status(const std::string& id) {
  const auto s = find(id);
  std::lock_guard lock(s->m);
  nlohmann::json j;
  j["id"] = s->id;
  j["state"] = to_string(s->state);
  j["mode"] = s->interactive ? "interactive" : "auto";
  j["rows"] = s->table->size();
  j["pending_question"] =
      s->pending ? nlohmann::json(s->pending->question) : nlohmann::json(nullptr);
  if (s->state == SessionState::kFailed) j["error"] = s->error;
  if (s->result) {
    j["questions_asked"] = s->result->questions_asked;
    j["evaluations_used"] = s->result->evaluations_used;
  }
  return j;
}

nlohmann::json SessionService::next_question(const std::string& id) {
  const auto s = find(id);
  std::lock_guard lock(s->m);
  require(s->state == SessionState::kAwaitingAnswer && s->pending.has_value(), 409,
          "session is " + std::string(to_string(s->state)) + ", no question pending");
  const bool goals = false;
  return {{"question", s->pending->question},
          {"a", row_cells(*s->table, s->pending->a, goals)},
          {"b", row_cells(*s->table, s->pending->b, goals)}};
}

nlohmann::json SessionService::submit_answer(const std::string& id,
                                             const nlohmann::json& body) {
  const auto s = find(id);
  require(body.is_object() && body.contains("choice") && body["choice"].is_string(), 400,
          "body must be {\"choice\": \"a\"|\"b\"}");
  const auto choice = parse_choice(body["choice"].get<std::string>());
  require(choice.has_value(), 400, "choice must be \"a\" or \"b\"");
  {
    std::unique_lock lock(s->m);
    require(s->state == SessionState::kAwaitingAnswer && s->pending && !s->answer, 409,
            "session is " + std::string(to_string(s->state)) + ", no question pending");
    if (body.contains("question")) {
      require(body["question"].is_number_unsigned() &&
                  body["question"].get<std::size_t>() == s->pending->question,
              409, "question " + body["question"].dump() + " is not the pending question");
    }
    const std::size_t answered = s->pending->question;
    s->answer = *choice;
    s->cv.notify_all();
    s->cv.wait(lock, [&] {
      return s->state == SessionState::kDone || s->state == SessionState::kFailed ||
             (s->state == SessionState::kAwaitingAnswer && s->pending &&
              s->pending->question != answered);
    });
  }
  return status(id);
}

nlohmann::json SessionService::get(const std::string& id, const std::string& artifact,
                                   const std::map<std::string, std::string>& query) {
  const auto s = find(id);
  std::unique_lock lock(s->m);
  if (artifact == "result") {
    require(s->state == SessionState::kDone, 409,
            "result needs a finished session (state " + std::string(to_string(s->state)) +
                (s->error.empty() ? "" : ": " + s->error) + ")");
    return to_json(*s->result);
  }
  if (artifact == "tree") {
    require(s->state == SessionState::kDone, 409, "tree needs a finished session");
    if (!s->tree) {
      try {
        TreeConfig tc;
        tc.keys = s->config;
        Oracle oracle = Oracle::automatic(*s->table, s->config.domination);
        s->tree = grow_tree(*s->table, tc, oracle);
      } catch (const Error& e) {
        throw ApiError(409, e.what());
      }
    }
    auto j = to_json(*s->tree);
    j["text"] = s->tree->render();
    return j;
  }
  if (artifact == "audit") {
    require(s->state != SessionState::kRunning, 409, "engine is running; retry");
    return s->log->to_json();
  }
  if (artifact == "profile") {
    const Table& t = *s->table;
    std::vector<std::size_t> features;
    if (auto it = query.find("features"); it != query.end() && !it->second.empty()) {
      std::stringstream ss(it->second);
      std::string name;
      while (std::getline(ss, name, ',')) {
        const auto c = t.find_column(name);
        require(c.has_value(), 400, "unknown column '" + name + "'");
        features.push_back(*c);
      }
    } else {
      for (std::size_t i = 0; i < t.independents().size() && i < 2; ++i) {
        features.push_back(t.independents()[i]);
      }
    }
    const bool active = s->state != SessionState::kDone && s->state != SessionState::kFailed;
    for (const std::size_t f : features) {
      require(!(s->interactive && active && t.column(f).goal()), 409,
              "goal columns stay hidden until the session finishes");
    }
    std::size_t bins = 10;
    if (auto it = query.find("bins"); it != query.end()) {
      try {
        bins = std::stoul(it->second);
      } catch (const std::exception&) {
        throw ApiError(400, "bins must be an integer");
      }
    }
    try {
      auto p = state_profile(t, features, bins);
      auto j = to_json(p);
      j["text"] = p.render();
      return j;
    } catch (const Error& e) {
      throw ApiError(400, e.what());
    }
  }
  throw ApiError(404, "unknown artifact '" + artifact + "'");
}

nlohmann::json SessionService::post(const std::string& id, const std::string& artifact,
                                    const nlohmann::json& body) {
  const auto s = find(id);
  if (artifact != "plan" && artifact != "whatif") {
    throw ApiError(404, "unknown artifact '" + artifact + "'");
  }
  {
    std::lock_guard lock(s->m);
    require(s->state == SessionState::kDone, 409, artifact + " needs a finished session");
  }
  const Table& t = *s->table;
  if (artifact == "whatif") {
    require(body.is_object() && body.contains("deltas") && body["deltas"].is_array(), 400,
            "body must be {\"deltas\": [...]}");
    std::vector<Range> deltas;
    try {
      for (const auto& d : body["deltas"]) deltas.push_back(range_from_json(d, t));
    } catch (const Error& e) {
      throw ApiError(400, e.what());
    }
    return to_json(what_if(t, deltas));
  }

  get(id, "tree");  // grows and caches the tree
  std::lock_guard lock(s->m);
  const PlanTree& tree = *s->tree;
  auto [from, to] = worst_and_best_leaf(tree);
  try {
    if (body.is_object()) {
      from = body.value("from", from);
      to = body.value("to", to);
    }
  } catch (const nlohmann::json::exception&) {
    throw ApiError(400, "\"from\" and \"to\" must be leaf ids");
  }
  try {
    Plan p = make_plan(tree, from, to);
    p.precedent = precedent_score(p, t);
    return to_json(p, tree.goal_names);
  } catch (const Error& e) {
    throw ApiError(400, e.what());
  }
}

void SessionService::bind(httplib::Server& server) {
  auto reply = [](httplib::Response& res, int status, const nlohmann::json& j) {
    res.status = status;
    res.set_content(canonical_dump(j), "application/json");
  };
  auto guard = [reply](httplib::Response& res, const std::function<nlohmann::json()>& f,
                       int ok_status = 200) {
    try {
      reply(res, ok_status, f());
    } catch (const ApiError& e) {
      reply(res, e.status(), {{"error", e.what()}});
    } catch (const nlohmann::json::exception& e) {
      reply(res, 400, {{"error", std::string("bad JSON: ") + e.what()}});
    } catch (const Error& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  };
  auto body_json = [](const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
      return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
      throw ApiError(400, std::string("bad JSON: ") + e.what());
    }
  };

  server.Post("/v1/sessions", [=, this](const httplib::Request& req, httplib::Response& res) {
    guard(res, [&] {
      const auto body = body_json(req);
      require(body.contains("csv") && body["csv"].is_string(), 400,
              "body must carry the dataset as {\"csv\": \"...\"}");
      return create_session(body["csv"].get<std::string>(),
                             body.value("config", nlohmann::json::object()));
    }, 201);
  });
  server.Get(R"(/v1/sessions/([0-9a-f]+))",
             [=, this](const httplib::Request& req, httplib::Response& res) {
               guard(res, [&] { return status(req.matches[1]); });
             });
  server.Get(R"(/v1/sessions/([0-9a-f]+)/question)",
             [=, this](const httplib::Request& req, httplib::Response& res) {
               guard(res, [&] { return next_question(req.matches[1]); });
             });
  server.Post(R"(/v1/sessions/([0-9a-f]+)/answer)",
              [=, this](const httplib::Request& req, httplib::Response& res) {
                guard(res, [&] { return submit_answer(req.matches[1], body_json(req)); });
              });
  server.Get(R"(/v1/sessions/([0-9a-f]+)/(result|tree|audit|profile))",
             [=, this](const httplib::Request& req, httplib::Response& res) {
               guard(res, [&] {
                 std::map<std::string, std::string> query;
                 for (const auto& [k, v] : req.params) query[k] = v;
                 return get(req.matches[1], req.matches[2], query);
               });
             });
  server.Post(R"(/v1/sessions/([0-9a-f]+)/(plan|whatif))",
              [=, this](const httplib::Request& req, httplib::Response& res) {
                guard(res, [&] {
                  return post(req.matches[1], req.matches[2], body_json(req));
                });
              });
}

int serve(const std::string& host, int port, ServiceOptions options) {
  SessionService service(std::move(options));
  httplib::Server server;
  service.bind(server);
  if (!server.listen(host, port)) return 1;
  return 0;
}

}  // namespace keyminer
