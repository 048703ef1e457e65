#include "keyminer/objective.hpp"

#include <algorithm>
#include <cmath>

#include "keyminer/audit.hpp"
#include "keyminer/error.hpp"

namespace keyminer {

GoalVector goal_vector(const Row& row, const Table& table) {
  GoalVector g;
  for (const std::size_t c : table.goals()) {
    const auto& col = table.column(c);
    const bool maximize = col.role == Role::kMaximize;
    const double v = row.cells[c];
    double x = 0;
    if (is_missing(v)) {
      x = maximize ? 0.0 : 1.0;
    } else {
      x = normalize(col, v);
    }
    g.values.push_back(x);
    g.directions.push_back(maximize ? Direction::kMaximize : Direction::kMinimize);
  }
  return g;
}

namespace {

void check_comparable(const GoalVector& a, const GoalVector& b) {
  if (a.values.empty() || a.values.size() != b.values.size() ||
      a.directions != b.directions ||
      a.values.size() != a.directions.size()) {
    throw ContractViolation("goal vectors differ in length or directions");
  }
}

// Zitzler's loss of moving from x to y: -sum exp(w_i (x_i - y_i) / n).
double zitzler_loss(const GoalVector& x, const GoalVector& y) {
  const double n = static_cast<double>(x.values.size());
  double s = 0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const double w = x.directions[i] == Direction::kMaximize ? 1.0 : -1.0;
    s -= std::exp(w * (x.values[i] - y.values[i]) / n);
  }
  return s;
}

bool pareto_dominates(const GoalVector& x, const GoalVector& y) {
  bool strictly = false;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const bool maximize = x.directions[i] == Direction::kMaximize;
    const double gain = maximize ? x.values[i] - y.values[i]
                                 : y.values[i] - x.values[i];
    if (gain < 0) return false;
    if (gain > 0) strictly = true;
  }
  return strictly;
}

}  // namespace

Verdict better(const GoalVector& a, const GoalVector& b, DominationRule rule) {
  check_comparable(a, b);
  if (rule == DominationRule::kBinary) {
    if (pareto_dominates(a, b)) return Verdict::kAWins;
    if (pareto_dominates(b, a)) return Verdict::kBWins;
    return Verdict::kTie;
  }
  const double ab = zitzler_loss(a, b);
  const double ba = zitzler_loss(b, a);
  // losses this close are rounding noise, e.g. (0.9, 0.1) against (0.5, 0.5)
  if (std::abs(ab - ba) <= kLossTolerance * std::max(std::abs(ab), std::abs(ba))) {
    return Verdict::kTie;
  }
  return ab < ba ? Verdict::kAWins : Verdict::kBWins;
}

double distance_to_heaven(const GoalVector& g) {
  if (g.values.empty()) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    const double heaven = g.directions[i] == Direction::kMaximize ? 1.0 : 0.0;
    sum += (heaven - g.values[i]) * (heaven - g.values[i]);
  }
  return std::sqrt(sum) / std::sqrt(static_cast<double>(g.values.size()));
}

std::string_view to_string(Choice c) { return c == Choice::kA ? "a" : "b"; }

std::optional<Choice> parse_choice(std::string_view s) {
  if (s == "a" || s == "A") return Choice::kA;
  if (s == "b" || s == "B") return Choice::kB;
  return std::nullopt;
}

std::string_view to_string(OracleMode m) {
  switch (m) {
    case OracleMode::kAuto: return "auto";
    case OracleMode::kInteractive: return "interactive";
    case OracleMode::kReplay: return "replay";
  }
  return "auto";
}

Oracle Oracle::automatic(const Table& table, DominationRule rule) {
  Oracle o(table, OracleMode::kAuto);
  o.rule_ = rule;
  return o;
}

Oracle Oracle::interactive(const Table& table, AnswerSource source) {
  if (!source) throw ContractViolation("interactive oracle needs an answer source");
  Oracle o(table, OracleMode::kInteractive);
  o.source_ = std::move(source);
  return o;
}

Oracle Oracle::replay(const Table& table, ReplayScript script, AnswerSource live,
                      DominationRule rule) {
  if (script.fallback == OracleMode::kInteractive && !live) {
    throw ContractViolation("interactive fallback needs an answer source");
  }
  if (script.fallback == OracleMode::kReplay) {
    throw ContractViolation("replay cannot fall back to replay");
  }
  Oracle o(table, OracleMode::kReplay);
  o.rule_ = rule;
  o.script_ = std::move(script);
  o.source_ = std::move(live);
  return o;
}

bool Oracle::evaluated(std::size_t row_id) const {
  return row_id < evaluated_.size() && evaluated_[row_id];
}

void Oracle::mark(std::size_t row_id) {
  if (evaluated_.size() < table_->size()) evaluated_.resize(table_->size(), false);
  if (!evaluated_.at(row_id)) {
    evaluated_[row_id] = true;
    ++evaluations_;
  }
}

Choice Oracle::auto_answer(const Row& a, const Row& b) const {
  const auto ga = goal_vector(a, *table_);
  const auto gb = goal_vector(b, *table_);
  switch (better(ga, gb, rule_)) {
    case Verdict::kAWins: return Choice::kA;
    case Verdict::kBWins: return Choice::kB;
    case Verdict::kTie: break;
  }
  const double da = distance_to_heaven(ga);
  const double db = distance_to_heaven(gb);
  if (da != db) return da < db ? Choice::kA : Choice::kB;
  return a.id < b.id ? Choice::kA : Choice::kB;
}

Choice Oracle::replay_answer(const Row& a, const Row& b) {
  const std::size_t q = questions_;  // already incremented, 1-based
  if (auto it = script_.overrides.find(q); it != script_.overrides.end()) {
    return it->second;
  }
  if (!diverged_ && q <= script_.answers.size()) {
    const auto& logged = script_.answers[q - 1];
    if (logged.a == a.id && logged.b == b.id) return logged.choice;
  }
  diverged_ = true;
  if (!script_.fallback) {
    throw ReplayDivergence("question " + std::to_string(q) + " (" +
                           std::to_string(a.id) + ", " + std::to_string(b.id) +
                           ") has no matching logged answer");
  }
  if (*script_.fallback == OracleMode::kInteractive) return source_(a, b, q);
  return auto_answer(a, b);
}

Choice Oracle::ask(const Row& a, const Row& b) {
  if (a.id == b.id) throw ContractViolation("cannot compare a row with itself");
  ++questions_;
  if (log_) log_->record(AuditEvent::question(a.id, b.id));
  Choice c = Choice::kA;
  switch (mode_) {
    case OracleMode::kAuto: c = auto_answer(a, b); break;
    case OracleMode::kInteractive: c = source_(a, b, questions_); break;
    case OracleMode::kReplay: c = replay_answer(a, b); break;
  }
  mark(a.id);
  mark(b.id);
  if (log_) log_->record(AuditEvent::answer(c));
  return c;
}

GoalVector Oracle::reveal(const Row& row) {
  if (mode_ != OracleMode::kAuto) {
    throw ContractViolation("goal values can only be revealed by an auto oracle");
  }
  mark(row.id);
  return goal_vector(row, *table_);
}

}  // namespace keyminer
