#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "keyminer/canonical_json.hpp"
#include "keyminer/objective.hpp"

namespace keyminer {

struct KeysConfig;
struct KeysResult;

inline constexpr const char* kAuditVersion = "keyminer-audit/1";
inline constexpr const char* kHashAlgorithm = "sha256";

struct AuditHeader {
  std::string version = kAuditVersion;
  std::string hash_algorithm = kHashAlgorithm;
  std::string dataset_hash;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::string oracle = "auto";  // mode of the recorded run
};

enum class EventKind { kSample, kQuestion, kAnswer, kRange, kStop };

struct AuditEvent {
  EventKind kind = EventKind::kStop;
  std::vector<std::size_t> ids;  // kSample
  std::size_t a = 0;             // kQuestion
  std::size_t b = 0;             // kQuestion
  Choice choice = Choice::kA;    // kAnswer
  nlohmann::json range;          // kRange
  std::string reason;            // kStop

  static AuditEvent sample(std::vector<std::size_t> ids);
  static AuditEvent question(std::size_t a, std::size_t b);
  static AuditEvent answer(Choice c);
  static AuditEvent range_chosen(nlohmann::json range);
  static AuditEvent stop(std::string reason);
};

nlohmann::json to_json(const AuditEvent& e);
AuditEvent event_from_json(const nlohmann::json& j);

// Append-only record of every random draw and oracle answer of a run.
// Stored as JSON lines: the header first, then one event per line. When a
// file is attached each event is written before record() returns, and the
// file is synced to disk before a question is handed to the oracle.
class AuditLog {
 public:
  explicit AuditLog(AuditHeader header);
  AuditLog(AuditLog&&) noexcept;
  AuditLog& operator=(AuditLog&&) noexcept;
  AuditLog(const AuditLog&) = delete;
  AuditLog& operator=(const AuditLog&) = delete;
  ~AuditLog();

  // Starts writing to `path`, truncating it, beginning with the header and
  // any events already recorded.
  void write_to(const std::filesystem::path& path);

  // Throws ContractViolation for an answer without a pending question or a
  // question while another is pending.
  void record(AuditEvent event);

  const AuditHeader& header() const { return header_; }
  const std::vector<AuditEvent>& events() const { return events_; }
  bool pending_question() const { return pending_; }

  // Question/answer pairs in order. A trailing unanswered question is dropped.
  std::vector<LoggedAnswer> answers() const;

  std::string to_jsonl() const;
  nlohmann::json to_json() const;  // {"header": ..., "events": [...]}

  static AuditLog parse(std::string_view jsonl);
  static AuditLog read(const std::filesystem::path& path);

 private:
  void write_line(const std::string& line, bool sync);

  AuditHeader header_;
  std::vector<AuditEvent> events_;
  bool pending_ = false;
  int fd_ = -1;
};

nlohmann::json to_json(const AuditHeader& h);
AuditHeader header_from_json(const nlohmann::json& j);

// Header for a keys run over a table with the given config and oracle mode.
AuditHeader make_header(const std::string& dataset_hash, const KeysConfig& config,
                        OracleMode mode);

struct ReplayOptions {
  std::map<std::size_t, Choice> overrides;  // 1-based question number
  // How to answer questions once the replay leaves the logged path.
  // Empty means a divergence is an error.
  std::optional<OracleMode> fallback = OracleMode::kAuto;
  AnswerSource live;  // for an interactive fallback
  AuditLog* record_to = nullptr;  // optional log of the replayed run
};

// Re-runs a recorded keys session. Throws HashMismatch when the table is not
// the recorded dataset, ContractViolation for an override index the log does
// not contain, and ReplayDivergence when the log runs out with no fallback.
KeysResult replay(const AuditLog& log, const Table& table,
                  const ReplayOptions& options = {});

}  // namespace keyminer
