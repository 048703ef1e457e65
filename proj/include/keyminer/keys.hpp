#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "keyminer/canonical_json.hpp"
#include "keyminer/objective.hpp"
#include "keyminer/rng.hpp"
#include "keyminer/table.hpp"

namespace keyminer {

enum class RangeKind { kInterval, kSymbol };

// A constraint on one column: a numeric interval [lo, hi) or a set of
// symbols. An infinite lo or hi leaves that side open, so the intervals
// produced for a column cover the whole real line.
struct Range {
  std::size_t column = 0;
  std::string column_name;
  RangeKind kind = RangeKind::kInterval;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  // Smallest and largest observed value inside the interval.
  double seen_lo = 0;
  double seen_hi = 0;
  std::vector<std::string> symbols;  // sorted
  double best = 0;   // b: best-labeled rows inside
  double rest = 0;   // r: rest-labeled rows inside
  double score = 0;

  // Missing cells match nothing. Columns are resolved by name when `table`
  // is not the table the range was mined from.
  bool matches(const Row& row, const Table& table) const;
  bool contains(double value) const;

  // "Cylinders < 5", "2 <= Age < 7", "origin == 3", "job in {a, b}".
  std::string describe() const;

  bool same_constraint(const Range& other) const;
};

nlohmann::json to_json(const Range& r);
Range range_from_json(const nlohmann::json& j, const Table& table);

enum class Label : std::uint8_t { kBest, kRest };

// Result of one distant-pair division.
struct Split {
  std::size_t best_pole = 0;   // P1, the better of the two distant rows
  std::size_t rest_pole = 0;   // P2
  std::vector<std::size_t> sampled;
  std::vector<std::size_t> rows;  // the divided rows
  std::vector<Label> labels;      // aligned with rows
  std::size_t best_count = 0;
  std::size_t rest_count = 0;
};

struct KeysConfig {
  std::uint64_t seed = 1;
  std::size_t sample_size = 32;  // rows sampled per distant pair
  double merge_epsilon = 0.05;   // merge bins whose best-proportions differ by <= this
  std::size_t min_size = 0;      // 0 = max(8, ceil(sqrt(n)))
  std::size_t max_loops = 20;
  double distance_p = 2.0;
  DominationRule domination = DominationRule::kContinuous;
  std::size_t keep_ranked = 10;  // ranked ranges kept per loop in results

  std::size_t effective_min_size(std::size_t n) const;
  void validate() const;
};

nlohmann::json to_json(const KeysConfig& c);
KeysConfig keys_config_from_json(const nlohmann::json& j);

// Samples up to k rows, finds two far-apart rows among them, asks the oracle
// which is better, then labels every row by its nearer pole (ties go to best).
// Throws ContractViolation for fewer than two rows and DegenerateSplit when
// every row is identical on the independent columns.
Split distant_pair(std::span<const std::size_t> rows, const Table& table,
                   Oracle& oracle, std::size_t k, Rng& rng, double p = 2.0);

// Discretizes one independent column over the labeled rows. Numeric columns
// get equal-frequency bins of about sqrt(n) rows, then adjacent bins merge
// while their best-proportions differ by at most `epsilon` or either holds
// fewer than 3 rows. Symbolic columns get one range per observed symbol.
std::vector<Range> make_ranges(const Table& table, std::size_t column,
                               std::span<const std::size_t> rows,
                               std::span<const Label> labels, double epsilon);

// Scores s = (b/B)^2 / (b/B + r/R) when b/B > r/R, else 0, and sorts
// descending (ties: larger b, lower column, lower bound/symbols).
std::vector<Range> rank_ranges(std::vector<Range> ranges, double best_total,
                               double rest_total);

struct LoopRecord {
  std::size_t loop = 0;  // 1-based
  std::size_t rows_in = 0;
  std::size_t best_pole = 0;
  std::size_t rest_pole = 0;
  std::size_t best_count = 0;
  std::size_t rest_count = 0;
  std::vector<Range> ranked;  // top of the ranking
  std::size_t ranked_total = 0;
  std::optional<Range> chosen;
  std::vector<std::size_t> survivors;
  bool accepted = false;  // the chosen range narrowed the rows
};

struct KeysResult {
  std::vector<LoopRecord> loops;
  std::vector<Range> selected;
  std::vector<std::size_t> survivors;
  std::size_t evaluations_used = 0;
  std::size_t questions_asked = 0;
  std::uint64_t seed = 0;
  std::string stop_reason;
  std::string dataset_hash;
  std::chrono::nanoseconds wall_time{0};

  bool no_keys() const { return selected.empty(); }
  // Selected ranges joined with " ∧ ", or "no keys found".
  std::string describe() const;
};

// Canonical document. Wall time is excluded unless requested because it is
// the one field that changes between identical runs.
nlohmann::json to_json(const KeysResult& r, bool include_timing = false);

// Repeatedly divides the current rows, keeps the rows matching the best
// range, and stops when nothing is gained. Throws ConfigError when the
// table cannot support a run.
KeysResult keys0_run(const Table& table, const KeysConfig& config,
                     Oracle& oracle);

// Stop reasons reported in KeysResult::stop_reason.
namespace stop_reason {
inline constexpr const char* kNoContrast = "no-contrast";
inline constexpr const char* kNothingDiscarded = "nothing-discarded";
inline constexpr const char* kBelowMinSize = "below-min-size";
inline constexpr const char* kMaxLoops = "max-loops";
inline constexpr const char* kDegenerate = "degenerate-split";
}  // namespace stop_reason

// Rows of `rows` that satisfy every range.
std::vector<std::size_t> filter_rows(std::span<const std::size_t> rows,
                                     std::span<const Range> ranges,
                                     const Table& table);

}  // namespace keyminer
