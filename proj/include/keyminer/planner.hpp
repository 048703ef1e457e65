#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "keyminer/canonical_json.hpp"
#include "keyminer/keys.hpp"
#include "keyminer/objective.hpp"
#include "keyminer/table.hpp"

namespace keyminer {

// The combined constraint a tree path puts on one column. Numeric columns
// hold a union of disjoint half-open intervals; symbolic columns hold an
// allowed set, or an excluded set when `exclude` is true. Built from tree
// edges: a "match" edge keeps the split range, a "no match" edge keeps its
// complement.
class Condition {
 public:
  static Condition from_range(const Range& r, bool inside = true);

  const std::string& column_name() const { return column_name_; }
  std::size_t column() const { return column_; }
  bool numeric() const { return numeric_; }
  const std::vector<std::pair<double, double>>& intervals() const { return intervals_; }
  const std::vector<std::string>& symbols() const { return symbols_; }
  bool exclude() const { return exclude_; }
  // Rows missing this column take the "no match" side of a split, so
  // complements accept a missing cell.
  bool accepts_missing() const { return accepts_missing_; }

  // Both conditions must be on the same column.
  Condition intersect(const Condition& other) const;

  bool matches(const Row& row, const Table& table) const;
  std::string describe() const;

  bool operator==(const Condition& other) const = default;

 private:
  void canonicalize();

  std::size_t column_ = 0;
  std::string column_name_;
  bool numeric_ = true;
  std::vector<std::pair<double, double>> intervals_;
  std::vector<std::string> symbols_;
  bool exclude_ = false;
  bool accepts_missing_ = false;
};

nlohmann::json to_json(const Condition& c);

struct TreeNode {
  std::size_t id = 0;
  std::size_t depth = 0;
  std::optional<std::size_t> parent;
  bool matched = true;  // which side of the parent's split this node is
  std::optional<Range> split;  // set on internal nodes
  std::optional<std::size_t> match_child;
  std::optional<std::size_t> other_child;
  std::vector<std::size_t> rows;

  bool leaf() const { return !split.has_value(); }

  // Leaf summary.
  double median_d2h = 0;
  std::vector<double> goal_medians;  // raw goal values, table goal order
};

struct TreeConfig {
  KeysConfig keys;          // seed, sample size, epsilon, distance exponent
  std::size_t min_leaf = 0; // 0 = max(4, ceil(sqrt(n)))

  std::size_t effective_min_leaf(std::size_t n) const;
};

// Unpruned binary tree over a table. Every internal node splits its rows
// into those matching one range and those that do not.
struct PlanTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root; ids are indices
  std::vector<std::string> goal_names;
  std::size_t min_leaf = 0;
  std::size_t evaluations_used = 0;
  std::size_t questions_asked = 0;

  std::vector<std::size_t> leaves() const;
  const TreeNode& node(std::size_t id) const { return nodes.at(id); }

  // Edges from the root down to `id`, each as (split range, matched side).
  std::vector<std::pair<Range, bool>> path(std::size_t id) const;

  // One combined condition per constrained column, in column order.
  std::vector<Condition> conditions(std::size_t id) const;

  // Indented text, one node per line.
  std::string render() const;
};

nlohmann::json to_json(const PlanTree& t);

// Grows the tree with one distant-pair division per node. Needs an auto
// oracle: every row is evaluated to score the leaves.
PlanTree grow_tree(const Table& table, const TreeConfig& config, Oracle& oracle);

struct Plan {
  std::size_t from = 0;
  std::size_t to = 0;
  std::vector<Condition> deltas;
  double precedent = 1.0;
  double from_median_d2h = 0;
  double to_median_d2h = 0;
  std::vector<double> expected;  // goal medians of the target leaf
};

nlohmann::json to_json(const Plan& p, const std::vector<std::string>& goal_names);

// Constraints of the `to` leaf that the `from` leaf does not already impose.
// Throws ContractViolation unless both ids are leaves.
Plan make_plan(const PlanTree& tree, std::size_t from, std::size_t to);

// Fraction of history rows that satisfy every delta at once; 1 for no
// deltas. Throws NoPrecedent for an empty history.
double precedent_score(std::span<const Condition> deltas, const Table& history);
double precedent_score(const Plan& plan, const Table& history);

// Plans from `from` to every leaf with a lower median distance to heaven,
// most precedent first (ties: better target first).
std::vector<Plan> plans_from(const PlanTree& tree, std::size_t from,
                             const Table& history);

// Leaves with the highest and lowest median distance to heaven.
std::pair<std::size_t, std::size_t> worst_and_best_leaf(const PlanTree& tree);

struct WhatIf {
  std::size_t count = 0;
  std::vector<std::string> goal_names;
  std::vector<double> goal_medians;      // empty when count == 0
  std::optional<double> median_d2h;      // empty when count == 0
  std::vector<std::string> deltas;       // text of the applied constraints

  bool no_precedent() const { return count == 0; }
};

nlohmann::json to_json(const WhatIf& w);

// Case-based answer: the historical rows that satisfy every delta.
WhatIf what_if(const Table& table, std::span<const Condition> deltas);
WhatIf what_if(const Table& table, std::span<const Range> deltas);

// Median of the non-missing values; NaN when there are none.
double median(std::vector<double> values);

}  // namespace keyminer
