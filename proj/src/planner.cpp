#include "keyminer/planner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "keyminer/error.hpp"

namespace keyminer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string bound_text(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  return format_number(v);
}

std::optional<std::size_t> resolve(const Condition& c, const Table& table) {
  if (c.column() < table.columns().size() &&
      table.column(c.column()).name == c.column_name()) {
    return c.column();
  }
  return table.find_column(c.column_name());
}

}  // namespace

Condition Condition::from_range(const Range& r, bool inside) {
  Condition c;
  c.column_ = r.column;
  c.column_name_ = r.column_name;
  c.numeric_ = r.kind == RangeKind::kInterval;
  c.accepts_missing_ = !inside;
  if (c.numeric_) {
    if (inside) {
      c.intervals_ = {{r.lo, r.hi}};
    } else {
      c.intervals_ = {{-kInf, r.lo}, {r.hi, kInf}};
    }
  } else {
    c.symbols_ = r.symbols;
    c.exclude_ = !inside;
  }
  c.canonicalize();
  return c;
}

void Condition::canonicalize() {
  if (numeric_) {
    std::erase_if(intervals_, [](const auto& iv) { return !(iv.first < iv.second); });
    std::sort(intervals_.begin(), intervals_.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& iv : intervals_) {
      if (!merged.empty() && iv.first <= merged.back().second) {
        merged.back().second = std::max(merged.back().second, iv.second);
      } else {
        merged.push_back(iv);
      }
    }
    intervals_ = std::move(merged);
  } else {
    std::sort(symbols_.begin(), symbols_.end());
    symbols_.erase(std::unique(symbols_.begin(), symbols_.end()), symbols_.end());
  }
}

Condition Condition::intersect(const Condition& other) const {
  if (other.column_name_ != column_name_ || other.numeric_ != numeric_) {
    throw ContractViolation("cannot intersect conditions on different columns");
  }
  Condition out = *this;
  out.accepts_missing_ = accepts_missing_ && other.accepts_missing_;
  if (numeric_) {
    out.intervals_.clear();
    for (const auto& x : intervals_) {
      for (const auto& y : other.intervals_) {
        out.intervals_.emplace_back(std::max(x.first, y.first),
                                    std::min(x.second, y.second));
      }
    }
  } else {
    const auto& a = symbols_;
    const auto& b = other.symbols_;
    std::vector<std::string> s;
    if (!exclude_ && !other.exclude_) {
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(s));
      out.exclude_ = false;
    } else if (exclude_ && other.exclude_) {
      std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(s));
      out.exclude_ = true;
    } else {
      const auto& allowed = exclude_ ? b : a;
      const auto& banned = exclude_ ? a : b;
      std::set_difference(allowed.begin(), allowed.end(), banned.begin(), banned.end(),
                          std::back_inserter(s));
      out.exclude_ = false;
    }
    out.symbols_ = std::move(s);
  }
  out.canonicalize();
  return out;
}

bool Condition::matches(const Row& row, const Table& table) const {
  const auto c = resolve(*this, table);
  if (!c) return false;
  const double v = row.cells[*c];
  if (is_missing(v)) return accepts_missing_;
  const auto& col = table.column(*c);
  if (numeric_) {
    if (!col.numeric()) return false;
    return std::any_of(intervals_.begin(), intervals_.end(),
                       [&](const auto& iv) { return v >= iv.first && v < iv.second; });
  }
  const std::string text =
      col.numeric() ? format_number(v) : col.symbols.at(static_cast<std::size_t>(v));
  const bool listed = std::binary_search(symbols_.begin(), symbols_.end(), text);
  return exclude_ ? !listed : listed;
}

std::string Condition::describe() const {
  if (!numeric_) {
    std::string set;
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (i) set += ", ";
      set += symbols_[i];
    }
    if (!exclude_ && symbols_.size() == 1) return column_name_ + " == " + set;
    return column_name_ + (exclude_ ? " ∉ {" : " ∈ {") + set + "}";
  }
  if (intervals_.empty()) return column_name_ + " matches nothing";
  std::string out;
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    if (i) out += " or ";
    const auto [lo, hi] = intervals_[i];
    if (std::isinf(lo) && std::isinf(hi)) {
      out += column_name_ + " is any value";
    } else if (std::isinf(lo)) {
      out += column_name_ + " < " + bound_text(hi);
    } else if (std::isinf(hi)) {
      out += column_name_ + " ≥ " + bound_text(lo);
    } else {
      out += bound_text(lo) + " ≤ " + column_name_ + " < " + bound_text(hi);
    }
  }
  return out;
}

nlohmann::json to_json(const Condition& c) {
  nlohmann::json j;
  j["column"] = c.column_name();
  j["text"] = c.describe();
  if (c.numeric()) {
    j["kind"] = "interval";
    auto ivs = nlohmann::json::array();
    for (const auto& [lo, hi] : c.intervals()) {
      ivs.push_back({{"lo", bound_to_json(lo)}, {"hi", bound_to_json(hi)}});
    }
    j["intervals"] = std::move(ivs);
  } else {
    j["kind"] = "symbol";
    j["symbols"] = c.symbols();
    j["exclude"] = c.exclude();
  }
  j["accepts_missing"] = c.accepts_missing();
  return j;
}

double median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2;
}

std::size_t TreeConfig::effective_min_leaf(std::size_t n) const {
  if (min_leaf > 0) return min_leaf;
  const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  return std::max<std::size_t>(4, root);
}

std::vector<std::size_t> PlanTree::leaves() const {
  std::vector<std::size_t> out;
  for (const auto& n : nodes) {
    if (n.leaf()) out.push_back(n.id);
  }
  return out;
}

std::vector<std::pair<Range, bool>> PlanTree::path(std::size_t id) const {
  std::vector<std::pair<Range, bool>> out;
  const TreeNode* n = &nodes.at(id);
  while (n->parent) {
    const TreeNode& p = nodes.at(*n->parent);
    out.emplace_back(*p.split, n->matched);
    n = &p;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<Condition> PlanTree::conditions(std::size_t id) const {
  std::map<std::size_t, Condition> by_column;
  for (const auto& [range, inside] : path(id)) {
    const auto c = Condition::from_range(range, inside);
    auto it = by_column.find(range.column);
    if (it == by_column.end()) {
      by_column.emplace(range.column, c);
    } else {
      it->second = it->second.intersect(c);
    }
  }
  std::vector<Condition> out;
  for (auto& [col, c] : by_column) out.push_back(std::move(c));
  return out;
}

std::string PlanTree::render() const {
  std::string out;
  std::function<void(std::size_t, const std::string&)> walk =
      [&](std::size_t id, const std::string& label) {
        const TreeNode& n = nodes.at(id);
        out += std::string(n.depth * 2, ' ') + label;
        out += "[" + std::to_string(n.id) + "] n=" + std::to_string(n.rows.size());
        if (n.leaf()) {
          out += " d2h=" + format_number(std::round(n.median_d2h * 1000) / 1000);
          for (std::size_t g = 0; g < goal_names.size() && g < n.goal_medians.size(); ++g) {
            out += " " + goal_names[g] + "=" + display_number(n.goal_medians[g]);
          }
          out += "\n";
          return;
        }
        out += "\n";
        walk(*n.match_child, n.split->describe() + " : ");
        walk(*n.other_child, "not " + n.split->describe() + " : ");
      };
  if (!nodes.empty()) walk(0, "");
  return out;
}

nlohmann::json to_json(const PlanTree& t) {
  auto nodes = nlohmann::json::array();
  for (const auto& n : t.nodes) {
    nlohmann::json j;
    j["id"] = n.id;
    j["depth"] = n.depth;
    j["parent"] = n.parent ? nlohmann::json(*n.parent) : nlohmann::json(nullptr);
    j["matched"] = n.matched;
    j["size"] = n.rows.size();
    j["rows"] = n.rows;
    j["leaf"] = n.leaf();
    if (n.leaf()) {
      j["median_d2h"] = n.median_d2h;
      j["goal_medians"] = n.goal_medians;
    } else {
      j["split"] = to_json(*n.split);
      j["match_child"] = *n.match_child;
      j["other_child"] = *n.other_child;
    }
    nodes.push_back(std::move(j));
  }
  return {{"nodes", std::move(nodes)},
          {"goals", t.goal_names},
          {"min_leaf", t.min_leaf},
          {"evaluations_used", t.evaluations_used},
          {"questions_asked", t.questions_asked},
          {"leaves", t.leaves()}};
}

PlanTree grow_tree(const Table& table, const TreeConfig& config, Oracle& oracle) {
  config.keys.validate();
  if (oracle.mode() != OracleMode::kAuto) {
    throw ConfigError("growing a plan tree needs the auto oracle");
  }
  if (table.independents().empty()) throw ConfigError("table has no independent columns");
  if (table.goals().empty()) throw ConfigError("table has no goal columns");
  if (table.size() == 0) throw ConfigError("table is empty");

  PlanTree tree;
  tree.min_leaf = config.effective_min_leaf(table.size());
  for (const std::size_t g : table.goals()) tree.goal_names.push_back(table.column(g).name);
  Rng rng(config.keys.seed);

  auto summarize = [&](TreeNode& leaf) {
    std::vector<double> d2h;
    std::vector<std::vector<double>> raw(table.goals().size());
    for (const std::size_t id : leaf.rows) {
      d2h.push_back(distance_to_heaven(oracle.reveal(table.row(id))));
      for (std::size_t g = 0; g < table.goals().size(); ++g) {
        raw[g].push_back(table.row(id).cells[table.goals()[g]]);
      }
    }
    leaf.median_d2h = median(d2h);
    for (auto& v : raw) leaf.goal_medians.push_back(median(std::move(v)));
  };

  // Nodes are created in depth-first order so ids read naturally.
  std::function<std::size_t(std::vector<std::size_t>, std::size_t,
                            std::optional<std::size_t>, bool)>
      grow = [&](std::vector<std::size_t> rows, std::size_t depth,
                 std::optional<std::size_t> parent, bool matched) -> std::size_t {
    const std::size_t id = tree.nodes.size();
    tree.nodes.push_back(TreeNode{});
    tree.nodes[id].id = id;
    tree.nodes[id].depth = depth;
    tree.nodes[id].parent = parent;
    tree.nodes[id].matched = matched;
    tree.nodes[id].rows = rows;

    std::optional<Range> chosen;
    std::vector<std::size_t> inside;
    std::vector<std::size_t> outside;
    if (rows.size() >= 2 * tree.min_leaf && rows.size() >= 2) {
      try {
        const Split split = distant_pair(rows, table, oracle, config.keys.sample_size,
                                         rng, config.keys.distance_p);
        std::vector<Range> all;
        for (const std::size_t c : table.independents()) {
          auto r = make_ranges(table, c, split.rows, split.labels,
                               config.keys.merge_epsilon);
          if (r.size() < 2) continue;
          std::move(r.begin(), r.end(), std::back_inserter(all));
        }
        const auto ranked = rank_ranges(std::move(all),
                                        static_cast<double>(split.best_count),
                                        static_cast<double>(split.rest_count));
        // Highest-scoring range that leaves both children big enough.
        for (const auto& r : ranked) {
          if (r.score <= 0) break;
          std::vector<std::size_t> in;
          std::vector<std::size_t> out;
          for (const std::size_t id2 : rows) {
            (r.matches(table.row(id2), table) ? in : out).push_back(id2);
          }
          if (in.size() >= tree.min_leaf && out.size() >= tree.min_leaf) {
            chosen = r;
            inside = std::move(in);
            outside = std::move(out);
            break;
          }
        }
      } catch (const DegenerateSplit&) {
        chosen.reset();
      }
    }

    if (!chosen) {
      summarize(tree.nodes[id]);
      return id;
    }
    tree.nodes[id].split = *chosen;
    const std::size_t left = grow(std::move(inside), depth + 1, id, true);
    tree.nodes[id].match_child = left;
    const std::size_t right = grow(std::move(outside), depth + 1, id, false);
    tree.nodes[id].other_child = right;
    return id;
  };

  grow(table.all_ids(), 0, std::nullopt, true);
  tree.evaluations_used = oracle.evaluations_used();
  tree.questions_asked = oracle.questions_asked();
  return tree;
}

Plan make_plan(const PlanTree& tree, std::size_t from, std::size_t to) {
  if (from >= tree.nodes.size() || to >= tree.nodes.size() ||
      !tree.nodes[from].leaf() || !tree.nodes[to].leaf()) {
    throw ContractViolation("plans run between two leaves");
  }
  Plan plan;
  plan.from = from;
  plan.to = to;
  plan.from_median_d2h = tree.nodes[from].median_d2h;
  plan.to_median_d2h = tree.nodes[to].median_d2h;
  plan.expected = tree.nodes[to].goal_medians;

  const auto have = tree.conditions(from);
  for (const auto& want : tree.conditions(to)) {
    const auto same = std::find(have.begin(), have.end(), want);
    if (same == have.end()) plan.deltas.push_back(want);
  }
  return plan;
}

double precedent_score(std::span<const Condition> deltas, const Table& history) {
  if (history.size() == 0) throw NoPrecedent("no precedent data");
  if (deltas.empty()) return 1.0;
  std::size_t hits = 0;
  for (const auto& row : history.rows()) {
    const bool all = std::all_of(deltas.begin(), deltas.end(),
                                 [&](const Condition& c) { return c.matches(row, history); });
    if (all) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(history.size());
}

double precedent_score(const Plan& plan, const Table& history) {
  return precedent_score(plan.deltas, history);
}

std::vector<Plan> plans_from(const PlanTree& tree, std::size_t from,
                             const Table& history) {
  std::vector<Plan> out;
  for (const std::size_t leaf : tree.leaves()) {
    if (tree.node(leaf).median_d2h >= tree.node(from).median_d2h) continue;
    Plan p = make_plan(tree, from, leaf);
    p.precedent = precedent_score(p, history);
    out.push_back(std::move(p));
  }
  std::stable_sort(out.begin(), out.end(), [](const Plan& a, const Plan& b) {
    if (a.precedent != b.precedent) return a.precedent > b.precedent;
    return a.to_median_d2h < b.to_median_d2h;
  });
  return out;
}

std::pair<std::size_t, std::size_t> worst_and_best_leaf(const PlanTree& tree) {
  const auto leaves = tree.leaves();
  if (leaves.empty()) throw ContractViolation("tree has no leaves");
  std::size_t worst = leaves.front();
  std::size_t best = leaves.front();
  for (const std::size_t l : leaves) {
    if (tree.node(l).median_d2h > tree.node(worst).median_d2h) worst = l;
    if (tree.node(l).median_d2h < tree.node(best).median_d2h) best = l;
  }
  return {worst, best};
}

nlohmann::json to_json(const Plan& p, const std::vector<std::string>& goal_names) {
  auto deltas = nlohmann::json::array();
  for (const auto& d : p.deltas) deltas.push_back(to_json(d));
  nlohmann::json expected = nlohmann::json::object();
  for (std::size_t g = 0; g < goal_names.size() && g < p.expected.size(); ++g) {
    expected[goal_names[g]] = p.expected[g];
  }
  return {{"from", p.from},
          {"to", p.to},
          {"deltas", std::move(deltas)},
          {"size", p.deltas.size()},
          {"precedent", p.precedent},
          {"from_median_d2h", p.from_median_d2h},
          {"to_median_d2h", p.to_median_d2h},
          {"expected", std::move(expected)}};
}

WhatIf what_if(const Table& table, std::span<const Condition> deltas) {
  WhatIf w;
  for (const std::size_t g : table.goals()) w.goal_names.push_back(table.column(g).name);
  for (const auto& d : deltas) w.deltas.push_back(d.describe());

  std::vector<double> d2h;
  std::vector<std::vector<double>> raw(table.goals().size());
  for (const auto& row : table.rows()) {
    const bool all = std::all_of(deltas.begin(), deltas.end(),
                                 [&](const Condition& c) { return c.matches(row, table); });
    if (!all) continue;
    ++w.count;
    if (!table.goals().empty()) d2h.push_back(distance_to_heaven(goal_vector(row, table)));
    for (std::size_t g = 0; g < table.goals().size(); ++g) {
      raw[g].push_back(row.cells[table.goals()[g]]);
    }
  }
  if (w.count > 0) {
    for (auto& v : raw) w.goal_medians.push_back(median(std::move(v)));
    if (!d2h.empty()) w.median_d2h = median(std::move(d2h));
  }
  return w;
}

WhatIf what_if(const Table& table, std::span<const Range> deltas) {
  std::vector<Condition> conds;
  for (const auto& r : deltas) conds.push_back(Condition::from_range(r));
  return what_if(table, conds);
}

nlohmann::json to_json(const WhatIf& w) {
  nlohmann::json j;
  j["count"] = w.count;
  j["deltas"] = w.deltas;
  j["no_precedent"] = w.no_precedent();
  if (w.count > 0) {
    nlohmann::json medians = nlohmann::json::object();
    for (std::size_t g = 0; g < w.goal_names.size() && g < w.goal_medians.size(); ++g) {
      medians[w.goal_names[g]] = std::isnan(w.goal_medians[g])
                                     ? nlohmann::json(nullptr)
                                     : nlohmann::json(w.goal_medians[g]);
    }
    j["goal_medians"] = std::move(medians);
    j["median_d2h"] = w.median_d2h ? nlohmann::json(*w.median_d2h) : nlohmann::json(nullptr);
  }
  return j;
}

}  // namespace keyminer
