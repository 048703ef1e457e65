#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "keyminer/table.hpp"

namespace keyminer {

class AuditLog;

enum class Direction { kMaximize, kMinimize };

// Normalized goal cells of one row with their directions.
struct GoalVector {
  std::vector<double> values;
  std::vector<Direction> directions;
};

// Builds the normalized goal vector of a row. A missing goal cell counts as
// the worst value for that goal.
GoalVector goal_vector(const Row& row, const Table& table);

enum class Verdict { kAWins, kBWins, kTie };

enum class DominationRule {
  kContinuous,  // Zitzler's indicator-based continuous domination
  kBinary,      // classic Pareto domination
};

// Relative gap below which two continuous-domination losses count as equal.
inline constexpr double kLossTolerance = 1e-12;

// Compares two goal vectors of equal length. Throws ContractViolation on a
// length or direction mismatch.
Verdict better(const GoalVector& a, const GoalVector& b,
               DominationRule rule = DominationRule::kContinuous);

// Distance from `g` to the ideal point (1 for maximize goals, 0 for
// minimize goals), scaled into [0, 1].
double distance_to_heaven(const GoalVector& g);

enum class Choice { kA, kB };

std::string_view to_string(Choice c);
std::optional<Choice> parse_choice(std::string_view s);

enum class OracleMode { kAuto, kInteractive, kReplay };

std::string_view to_string(OracleMode m);

// Blocking source of human answers. `question` is the 1-based question number.
// Implementations throw SessionError on timeout or when no answer can come.
using AnswerSource = std::function<Choice(const Row& a, const Row& b,
                                          std::size_t question)>;

// One logged question and the answer given to it.
struct LoggedAnswer {
  std::size_t a = 0;
  std::size_t b = 0;
  Choice choice = Choice::kA;
};

// Cached answers for replay. Overrides are keyed by 1-based question number.
// Once an override is applied, logged answers are used only while the asked
// pair still equals the logged pair; after the first mismatch the fallback
// answers the remaining questions. Without a fallback a mismatch or an
// exhausted script throws ReplayDivergence.
struct ReplayScript {
  std::vector<LoggedAnswer> answers;
  std::map<std::size_t, Choice> overrides;
  std::optional<OracleMode> fallback;  // kAuto or kInteractive
};

// Answers "which of these two rows is better?" and keeps the evaluation
// budget. Each row that takes part in a question is marked evaluated once.
class Oracle {
 public:
  static Oracle automatic(const Table& table,
                          DominationRule rule = DominationRule::kContinuous);
  static Oracle interactive(const Table& table, AnswerSource source);
  static Oracle replay(const Table& table, ReplayScript script,
                       AnswerSource live = {},
                       DominationRule rule = DominationRule::kContinuous);

  // Returns which of the two rows is better. Throws ContractViolation when
  // a and b are the same row.
  Choice ask(const Row& a, const Row& b);

  // Reveals the goals of one row without asking a question. Auto mode only.
  GoalVector reveal(const Row& row);

  OracleMode mode() const { return mode_; }
  std::size_t questions_asked() const { return questions_; }
  std::size_t evaluations_used() const { return evaluations_; }
  bool evaluated(std::size_t row_id) const;
  bool diverged() const { return diverged_; }

  // Events are written to `log` when attached. The log must outlive the run.
  void attach(AuditLog* log) { log_ = log; }
  AuditLog* audit() const { return log_; }

 private:
  Oracle(const Table& table, OracleMode mode) : table_(&table), mode_(mode) {}

  Choice auto_answer(const Row& a, const Row& b) const;
  Choice replay_answer(const Row& a, const Row& b);
  void mark(std::size_t row_id);

  const Table* table_;
  OracleMode mode_;
  DominationRule rule_ = DominationRule::kContinuous;
  AnswerSource source_;
  ReplayScript script_;
  bool diverged_ = false;
  std::vector<bool> evaluated_;
  std::size_t questions_ = 0;
  std::size_t evaluations_ = 0;
  AuditLog* log_ = nullptr;
};

}  // namespace keyminer
