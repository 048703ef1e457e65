#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "keyminer/canonical_json.hpp"
#include "keyminer/table.hpp"

namespace keyminer {

// How often each discretized state of a feature subset occurs.
struct StateProfile {
  std::size_t bins = 0;  // S
  std::vector<std::string> features;
  // A state is one bin index (numeric) or symbol code (symbolic) per
  // feature. Rows missing any profiled feature share kMissingState.
  std::map<std::vector<int>, std::size_t> frequencies;
  std::size_t total = 0;
  std::size_t nonempty = 0;  // v
  // (k, share of rows in the k most frequent states), k = 1..v.
  std::vector<std::pair<std::size_t, double>> coverage;

  static inline const std::vector<int> kMissingState{-1};

  // Smallest k whose top-k states cover at least `share` of the rows.
  std::size_t states_to_cover(double share) const;
  // Share of rows in the top-k states.
  double top_coverage(std::size_t k) const;

  // Coverage curve as an aligned text table.
  std::string render() const;
};

nlohmann::json to_json(const StateProfile& p);

// Profiles `features` (column indices) with S equal-width bins per numeric
// feature. Throws ContractViolation for no features or S < 2.
StateProfile state_profile(const Table& table, std::span<const std::size_t> features,
                           std::size_t bins);

// Equal-width bin of a value in a numeric column, in [0, bins).
int equal_width_bin(const Column& col, double v, std::size_t bins);

// Number of binary key features implied by v reachable states: ceil(log2 v).
// Throws ContractViolation for v == 0.
std::size_t key_count_estimate(std::size_t v);

// Same estimate for S-ary features: ceil(log_S v).
std::size_t key_count_estimate(std::size_t v, std::size_t arity);

}  // namespace keyminer
