#include "keyminer/audit.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "keyminer/error.hpp"
#include "keyminer/keys.hpp"

namespace keyminer {

namespace {

std::string_view kind_name(EventKind k) {
  switch (k) {
    case EventKind::kSample: return "sample";
    case EventKind::kQuestion: return "question";
    case EventKind::kAnswer: return "answer";
    case EventKind::kRange: return "range";
    case EventKind::kStop: return "stop";
  }
  return "stop";
}

}  // namespace

AuditEvent AuditEvent::sample(std::vector<std::size_t> ids) {
  AuditEvent e;
  e.kind = EventKind::kSample;
  e.ids = std::move(ids);
  return e;
}

AuditEvent AuditEvent::question(std::size_t a, std::size_t b) {
  AuditEvent e;
  e.kind = EventKind::kQuestion;
  e.a = a;
  e.b = b;
  return e;
}

AuditEvent AuditEvent::answer(Choice c) {
  AuditEvent e;
  e.kind = EventKind::kAnswer;
  e.choice = c;
  return e;
}

AuditEvent AuditEvent::range_chosen(nlohmann::json range) {
  AuditEvent e;
  e.kind = EventKind::kRange;
  e.range = std::move(range);
  return e;
}

AuditEvent AuditEvent::stop(std::string reason) {
  AuditEvent e;
  e.kind = EventKind::kStop;
  e.reason = std::move(reason);
  return e;
}

nlohmann::json to_json(const AuditEvent& e) {
  nlohmann::json j;
  j["event"] = kind_name(e.kind);
  switch (e.kind) {
    case EventKind::kSample: j["ids"] = e.ids; break;
    case EventKind::kQuestion:
      j["a"] = e.a;
      j["b"] = e.b;
      break;
    case EventKind::kAnswer: j["choice"] = to_string(e.choice); break;
    case EventKind::kRange: j["range"] = e.range; break;
    case EventKind::kStop: j["reason"] = e.reason; break;
  }
  return j;
}

AuditEvent event_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("event").get<std::string>();
    if (kind == "sample") return AuditEvent::sample(j.at("ids").get<std::vector<std::size_t>>());
    if (kind == "question") {
      return AuditEvent::question(j.at("a").get<std::size_t>(), j.at("b").get<std::size_t>());
    }
    if (kind == "answer") {
      const auto c = parse_choice(j.at("choice").get<std::string>());
      if (!c) throw Error("answer must be \"a\" or \"b\"");
      return AuditEvent::answer(*c);
    }
    if (kind == "range") return AuditEvent::range_chosen(j.at("range"));
    if (kind == "stop") return AuditEvent::stop(j.at("reason").get<std::string>());
    throw Error("unknown audit event '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed audit event: ") + e.what());
  }
}

nlohmann::json to_json(const AuditHeader& h) {
  return {{"version", h.version},
          {"hash_algorithm", h.hash_algorithm},
          {"dataset_hash", h.dataset_hash},
          {"seed", h.seed},
          {"config", h.config},
          {"oracle", h.oracle}};
}

AuditHeader header_from_json(const nlohmann::json& j) {
  try {
    AuditHeader h;
    h.version = j.at("version").get<std::string>();
    h.hash_algorithm = j.at("hash_algorithm").get<std::string>();
    h.dataset_hash = j.at("dataset_hash").get<std::string>();
    h.seed = j.at("seed").get<std::uint64_t>();
    h.config = j.at("config");
    h.oracle = j.value("oracle", std::string("auto"));
    if (h.version != kAuditVersion) throw Error("unsupported audit version '" + h.version + "'");
    if (h.hash_algorithm != kHashAlgorithm) {
      throw Error("unsupported hash algorithm '" + h.hash_algorithm + "'");
    }
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed audit header: ") + e.what());
  }
}

AuditHeader make_header(const std::string& dataset_hash, const KeysConfig& config,
                        OracleMode mode) {
  AuditHeader h;
  h.dataset_hash = dataset_hash;
  h.seed = config.seed;
  h.config = to_json(config);
  h.oracle = std::string(to_string(mode));
  return h;
}

AuditLog::AuditLog(AuditHeader header) : header_(std::move(header)) {}

AuditLog::AuditLog(AuditLog&& other) noexcept
    : header_(std::move(other.header_)),
      events_(std::move(other.events_)),
      pending_(other.pending_),
      fd_(other.fd_) {
  other.fd_ = -1;
}

AuditLog& AuditLog::operator=(AuditLog&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    header_ = std::move(other.header_);
    events_ = std::move(other.events_);
    pending_ = other.pending_;
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

AuditLog::~AuditLog() {
  if (fd_ >= 0) ::close(fd_);
}

void AuditLog::write_line(const std::string& line, bool sync) {
  if (fd_ < 0) return;
  const std::string data = line + "\n";
  std::size_t done = 0;
  while (done < data.size()) {
    const auto n = ::write(fd_, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("audit write failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  if (sync) ::fsync(fd_);
}

void AuditLog::write_to(const std::filesystem::path& path) {
  if (fd_ >= 0) ::close(fd_);
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error("cannot open audit log '" + path.string() + "': " + std::strerror(errno));
  }
  write_line(canonical_dump(keyminer::to_json(header_)), false);
  for (const auto& e : events_) write_line(canonical_dump(keyminer::to_json(e)), false);
  ::fsync(fd_);
}

void AuditLog::record(AuditEvent event) {
  if (event.kind == EventKind::kAnswer && !pending_) {
    throw ContractViolation("answer recorded without a pending question");
  }
  if (event.kind != EventKind::kAnswer && pending_) {
    throw ContractViolation("question must be answered before the next event");
  }
  if (event.kind == EventKind::kQuestion) pending_ = true;
  if (event.kind == EventKind::kAnswer) pending_ = false;
  const bool sync = event.kind == EventKind::kQuestion || event.kind == EventKind::kStop;
  write_line(canonical_dump(keyminer::to_json(event)), sync);
  events_.push_back(std::move(event));
}

std::vector<LoggedAnswer> AuditLog::answers() const {
  std::vector<LoggedAnswer> out;
  std::optional<LoggedAnswer> open;
  for (const auto& e : events_) {
    if (e.kind == EventKind::kQuestion) {
      open = LoggedAnswer{e.a, e.b, Choice::kA};
    } else if (e.kind == EventKind::kAnswer && open) {
      open->choice = e.choice;
      out.push_back(*open);
      open.reset();
    }
  }
  return out;
}

std::string AuditLog::to_jsonl() const {
  std::string out = canonical_dump(keyminer::to_json(header_)) + "\n";
  for (const auto& e : events_) out += canonical_dump(keyminer::to_json(e)) + "\n";
  return out;
}

nlohmann::json AuditLog::to_json() const {
  auto events = nlohmann::json::array();
  for (const auto& e : events_) events.push_back(keyminer::to_json(e));
  return {{"header", keyminer::to_json(header_)}, {"events", std::move(events)}};
}

AuditLog AuditLog::parse(std::string_view jsonl) {
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::optional<AuditLog> log;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("audit log: ") + e.what(), lineno);
    }
    if (!log) {
      log.emplace(header_from_json(j));
    } else {
      log->record(event_from_json(j));
    }
  }
  if (!log) throw ParseError("audit log is empty");
  return std::move(*log);
}

AuditLog AuditLog::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open audit log '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

KeysResult replay(const AuditLog& log, const Table& table,
                  const ReplayOptions& options) {
  if (log.header().dataset_hash != table.content_hash()) {
    throw HashMismatch("dataset hash " + table.content_hash() +
                       " does not match the audit log's " + log.header().dataset_hash);
  }
  ReplayScript script;
  script.answers = log.answers();
  for (const auto& [index, choice] : options.overrides) {
    if (index < 1 || index > script.answers.size()) {
      throw ContractViolation("override #" + std::to_string(index) +
                              " is not a question in the log (it has " +
                              std::to_string(script.answers.size()) + ")");
    }
  }
  script.overrides = options.overrides;
  script.fallback = options.fallback;

  const KeysConfig config = keys_config_from_json(log.header().config);
  if (config.seed != log.header().seed) {
    throw Error("audit header seed disagrees with its config");
  }
  Oracle oracle = Oracle::replay(table, std::move(script), options.live,
                                 config.domination);
  if (options.record_to) oracle.attach(options.record_to);
  return keys0_run(table, config, oracle);
}

}  // namespace keyminer
