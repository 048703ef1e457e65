#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "keyminer/canonical_json.hpp"
#include "keyminer/keys.hpp"
#include "keyminer/rng.hpp"
#include "keyminer/table.hpp"

namespace keyminer {

// Linear model target = intercept + sum coefficient_i * input_i.
struct RegressionModel {
  std::string target;
  std::vector<std::pair<std::string, double>> coefficients;  // input order
  double intercept = 0;
  std::size_t rows_used = 0;

  double coefficient(const std::string& input) const;
  double predict(const Row& row, const Table& table) const;
};

nlohmann::json to_json(const RegressionModel& m);

// Ridge jitter added to the diagonal of the centered normal equations X'X.
inline constexpr double kRidgeJitter = 1e-8;

// Value a cell contributes to a regression. Symbolic cells whose text is a
// number use that number; other symbols use their first-seen code.
double regression_value(const Column& col, double cell);

// Least squares through the normal equations. Rows missing the target or any
// input are dropped. Throws Error for too few rows or collinear inputs.
RegressionModel ols_fit(const Table& table, std::size_t target,
                        std::span<const std::size_t> inputs);

struct BaselineStep {
  std::size_t row = 0;
  double d2h = 0;
};

struct BaselineResult {
  std::size_t best_row = 0;
  double best_d2h = 0;
  std::vector<BaselineStep> trace;  // evaluation order
  std::size_t budget = 0;           // after clamping
  std::vector<std::string> warnings;
  std::string dataset_hash;
};

nlohmann::json to_json(const BaselineResult& r);

// Evaluates `budget` distinct rows drawn uniformly and keeps the one closest
// to heaven. A budget above the row count is clamped with a warning.
BaselineResult random_search_baseline(const Table& table, std::size_t budget, Rng& rng);

struct MethodStats {
  std::string method;
  std::size_t evaluations = 0;
  std::size_t questions = 0;
  std::size_t selected_rows = 0;
  std::optional<double> median_d2h;
  std::optional<double> best_d2h;
  std::string constraints;
  bool no_keys = false;
};

struct ComparisonReport {
  std::vector<MethodStats> methods;
  double table_median_d2h = 0;

  std::string render() const;  // aligned columns
};

nlohmann::json to_json(const ComparisonReport& r);

// Throws Error when either run was made on a different table.
ComparisonReport compare(const KeysResult& keys, const BaselineResult& baseline,
                         const Table& table);

// Distance to heaven of every listed row.
std::vector<double> d2h_of(std::span<const std::size_t> rows, const Table& table);

}  // namespace keyminer
