#include "keyminer/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "keyminer/audit.hpp"
#include "keyminer/error.hpp"
#include "keyminer/harness.hpp"
#include "keyminer/planner.hpp"
#include "keyminer/profiler.hpp"
#include "keyminer/service.hpp"

namespace keyminer {

namespace {

struct Options {
  std::string mode;
  std::string data;
  std::optional<std::uint64_t> seed;
  std::size_t sample_size = 32;
  double epsilon = 0.05;
  std::size_t min_size = 0;
  std::size_t min_leaf = 0;
  std::size_t max_loops = 20;
  double distance_p = 2.0;
  std::string domination = "continuous";
  std::string oracle = "auto";
  std::string audit;
  std::string replay;
  std::vector<std::string> overrides;
  std::string out = "text";
  bool timing = false;
  // profile
  std::string features = "2";
  std::size_t bins = 10;
  // whatif / plan
  std::vector<std::string> deltas;
  bool use_keys = false;
  std::optional<std::size_t> from;
  std::optional<std::size_t> to;
  // baseline
  std::size_t budget = 0;
  // ols
  std::vector<std::string> targets;
  std::vector<std::string> inputs;
  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string audit_dir;
  std::size_t max_sessions = 16;
  double answer_timeout = 600;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

double number_or_throw(const std::string& s, std::string_view context) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error("cannot read '" + s + "' as a number in '" + std::string(context) + "'");
  }
  return v;
}

KeysConfig keys_config(const Options& o) {
  KeysConfig c;
  c.seed = o.seed.value_or(1);
  c.sample_size = o.sample_size;
  c.merge_epsilon = o.epsilon;
  c.min_size = o.min_size;
  c.max_loops = o.max_loops;
  c.distance_p = o.distance_p;
  if (o.domination == "binary") {
    c.domination = DominationRule::kBinary;
  } else if (o.domination != "continuous") {
    throw UsageError("--domination must be continuous or binary");
  }
  c.validate();
  return c;
}

// Prompts on `err` and reads "a" or "b" from `in`.
AnswerSource prompt_source(const Table& table, std::ostream& err, std::istream& in) {
  return [&table, &err, &in](const Row& a, const Row& b, std::size_t q) {
    err << "\nQuestion " << q << ": which row is better?\n";
    for (const std::size_t c : table.independents()) {
      char line[256];
      std::snprintf(line, sizeof(line), "  %-20s %14s %14s\n", table.column(c).name.c_str(),
                    table.cell_text(a.id, c).c_str(), table.cell_text(b.id, c).c_str());
      err << line;
    }
    while (true) {
      err << "answer [a/b]: " << std::flush;
      std::string reply;
      if (!std::getline(in, reply)) throw SessionError("input closed before an answer");
      if (auto c = parse_choice(trim(reply))) return *c;
    }
  };
}

std::map<std::size_t, Choice> parse_overrides(const std::vector<std::string>& items) {
  std::map<std::size_t, Choice> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    const auto choice = eq == std::string::npos ? std::nullopt
                                                : parse_choice(item.substr(eq + 1));
    std::size_t index = 0;
    const auto* end = item.data() + (eq == std::string::npos ? item.size() : eq);
    auto [ptr, ec] = std::from_chars(item.data(), end, index);
    if (!choice || ec != std::errc() || ptr != end || index == 0) {
      throw UsageError("--override expects k=a or k=b with k >= 1, got '" + item + "'");
    }
    out[index] = *choice;
  }
  return out;
}

std::vector<std::size_t> resolve_columns(const Table& t, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) {
    const auto c = t.find_column(n);
    if (!c) throw Error("unknown column '" + n + "'");
    out.push_back(*c);
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) out.push_back(trim(item));
  }
  return out;
}

void print_json(std::ostream& out, const nlohmann::json& j) { out << canonical_dump(j) << "\n"; }

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

KeysResult run_keys(const Options& o, const Table& table, std::ostream& err, std::istream& in) {
  KeysConfig config = keys_config(o);
  const bool interactive = o.oracle == "interactive";
  std::optional<AuditLog> log;

  if (!o.replay.empty()) {
    const AuditLog recorded = AuditLog::read(o.replay);
    ReplayOptions ro;
    ro.overrides = parse_overrides(o.overrides);
    if (!o.audit.empty()) {
      log.emplace(recorded.header());
      log->write_to(o.audit);
      ro.record_to = &*log;
    }
    return replay(recorded, table, ro);
  }

  Oracle oracle = interactive ? Oracle::interactive(table, prompt_source(table, err, in))
                              : Oracle::automatic(table, config.domination);
  if (!o.audit.empty()) {
    log.emplace(make_header(table.content_hash(), config, oracle.mode()));
    log->write_to(o.audit);
    oracle.attach(&*log);
  }
  return keys0_run(table, config, oracle);
}

void print_keys_text(std::ostream& out, const KeysResult& r, bool timing) {
  for (const auto& l : r.loops) {
    out << "loop " << l.loop << ": " << l.rows_in << " rows, best pole " << l.best_pole
        << ", rest pole " << l.rest_pole << " (" << l.best_count << " best / "
        << l.rest_count << " rest)\n";
    if (l.chosen) {
      out << "  top range: " << l.chosen->describe() << "  score " << fixed(l.chosen->score)
          << "  -> " << l.survivors.size() << " rows" << (l.accepted ? "" : " (not kept)")
          << "\n";
    } else {
      out << "  no range separates best from rest\n";
    }
  }
  out << "keys: " << r.describe() << "\n";
  out << "evaluations: " << r.evaluations_used << "  questions: " << r.questions_asked
      << "  survivors: " << r.survivors.size() << "  stop: " << r.stop_reason << "\n";
  if (timing) {
    out << "wall time: "
        << fixed(std::chrono::duration<double, std::milli>(r.wall_time).count(), 3) << " ms\n";
  }
}

int cmd_keys(const Options& o, std::ostream& out, std::ostream& err, std::istream& in) {
  const Table table = load_csv(o.data);
  const KeysResult r = run_keys(o, table, err, in);
  if (o.out == "json") {
    print_json(out, to_json(r, o.timing));
  } else {
    print_keys_text(out, r, o.timing);
  }
  return kExitOk;
}

TreeConfig tree_config(const Options& o) {
  TreeConfig tc;
  tc.keys = keys_config(o);
  tc.min_leaf = o.min_leaf;
  return tc;
}

int cmd_tree(const Options& o, std::ostream& out) {
  const Table table = load_csv(o.data);
  Oracle oracle = Oracle::automatic(table, keys_config(o).domination);
  const PlanTree tree = grow_tree(table, tree_config(o), oracle);
  if (o.out == "json") {
    print_json(out, to_json(tree));
  } else {
    out << tree.render();
    out << "leaves: " << tree.leaves().size() << "  min leaf: " << tree.min_leaf
        << "  evaluations: " << tree.evaluations_used << "\n";
  }
  return kExitOk;
}

int cmd_plan(const Options& o, std::ostream& out) {
  const Table table = load_csv(o.data);
  Oracle oracle = Oracle::automatic(table, keys_config(o).domination);
  const PlanTree tree = grow_tree(table, tree_config(o), oracle);
  auto [worst, best] = worst_and_best_leaf(tree);
  const std::size_t from = o.from.value_or(worst);
  Plan chosen = make_plan(tree, from, o.to.value_or(best));
  chosen.precedent = precedent_score(chosen, table);
  const auto options = plans_from(tree, from, table);

  if (o.out == "json") {
    auto alts = nlohmann::json::array();
    for (const auto& p : options) alts.push_back(to_json(p, tree.goal_names));
    print_json(out, {{"plan", to_json(chosen, tree.goal_names)}, {"alternatives", alts}});
    return kExitOk;
  }
  auto show = [&](const Plan& p) {
    out << "leaf " << p.from << " (d2h " << fixed(p.from_median_d2h, 3) << ") -> leaf " << p.to
        << " (d2h " << fixed(p.to_median_d2h, 3) << "), precedent " << fixed(p.precedent, 3)
        << "\n";
    if (p.deltas.empty()) out << "  no change needed\n";
    for (const auto& d : p.deltas) out << "  adopt " << d.describe() << "\n";
  };
  show(chosen);
  if (!options.empty()) {
    out << "plans from leaf " << from << ", most precedent first:\n";
    for (const auto& p : options) show(p);
  }
  return kExitOk;
}

int cmd_whatif(const Options& o, std::ostream& out, std::ostream& err, std::istream& in) {
  const Table table = load_csv(o.data);
  std::vector<Range> deltas;
  if (o.use_keys) {
    const auto r = run_keys(o, table, err, in);
    deltas = r.selected;
  }
  for (const auto& d : o.deltas) deltas.push_back(parse_delta(d, table));
  const WhatIf w = what_if(table, deltas);
  if (o.out == "json") {
    print_json(out, to_json(w));
    return kExitOk;
  }
  out << "constraints: " << (w.deltas.empty() ? "(none)" : "") << "\n";
  for (const auto& d : w.deltas) out << "  " << d << "\n";
  if (w.no_precedent()) {
    out << "no precedent: no rows match\n";
    return kExitOk;
  }
  out << "matching rows: " << w.count << "\n";
  for (std::size_t g = 0; g < w.goal_names.size(); ++g) {
    out << "  median " << w.goal_names[g] << ": " << display_number(w.goal_medians[g]) << "\n";
  }
  if (w.median_d2h) out << "  median d2h: " << fixed(*w.median_d2h) << "\n";
  return kExitOk;
}

int cmd_profile(const Options& o, std::ostream& out) {
  const Table table = load_csv(o.data);
  std::vector<std::size_t> features;
  std::size_t count = 0;
  auto [ptr, ec] = std::from_chars(o.features.data(), o.features.data() + o.features.size(), count);
  if (ec == std::errc() && ptr == o.features.data() + o.features.size()) {
    if (count == 0 || count > table.independents().size()) {
      throw Error("--features " + o.features + ": table has " +
                  std::to_string(table.independents().size()) + " independent columns");
    }
    features.assign(table.independents().begin(),
                    table.independents().begin() + static_cast<std::ptrdiff_t>(count));
  } else {
    features = resolve_columns(table, split_list(o.features));
  }
  const StateProfile p = state_profile(table, features, o.bins);
  if (o.out == "json") {
    print_json(out, to_json(p));
  } else {
    out << p.render();
    out << "binary key features (ceil log2 v): " << key_count_estimate(std::max<std::size_t>(1, p.nonempty))
        << "\n";
  }
  return kExitOk;
}

int cmd_baseline(const Options& o, std::ostream& out, std::ostream& err, std::istream& in) {
  const Table table = load_csv(o.data);
  const KeysResult keys = run_keys(o, table, err, in);
  const std::size_t budget = o.budget > 0 ? o.budget : std::max<std::size_t>(1, keys.evaluations_used);
  Rng rng(keys.seed);
  const BaselineResult base = random_search_baseline(table, budget, rng);
  for (const auto& w : base.warnings) err << "warning: " << w << "\n";
  const ComparisonReport report = compare(keys, base, table);
  if (o.out == "json") {
    print_json(out, {{"report", to_json(report)}, {"baseline", to_json(base)}});
  } else {
    out << report.render();
  }
  return kExitOk;
}

int cmd_ols(const Options& o, std::ostream& out) {
  const Table table = load_csv(o.data);
  std::vector<std::size_t> targets = o.targets.empty() ? table.goals() : resolve_columns(table, o.targets);
  std::vector<std::size_t> inputs = o.inputs.empty() ? table.independents() : resolve_columns(table, o.inputs);
  if (targets.empty()) throw Error("no target columns");
  auto models = nlohmann::json::array();
  std::string text;
  for (const std::size_t t : targets) {
    const RegressionModel m = ols_fit(table, t, inputs);
    models.push_back(to_json(m));
    text += m.target + " =";
    for (const auto& [name, coef] : m.coefficients) {
      text += " " + fixed(coef, 3) + "×" + name + " +";
    }
    text += " " + fixed(m.intercept, 3) + "   (" + std::to_string(m.rows_used) + " rows)\n";
  }
  if (o.out == "json") {
    print_json(out, models);
  } else {
    out << text;
  }
  return kExitOk;
}

int cmd_serve(const Options& o, std::ostream& err) {
  ServiceOptions so;
  so.max_sessions = o.max_sessions;
  so.audit_dir = o.audit_dir;
  so.answer_timeout = std::chrono::milliseconds(static_cast<long long>(o.answer_timeout * 1000));
  err << "serving /v1 on http://" << o.host << ":" << o.port << "\n";
  return serve(o.host, o.port, so) == 0 ? kExitOk : kExitDomainError;
}

}  // namespace

Range parse_delta(std::string_view text, const Table& table) {
  const std::string s = trim(text);
  if (!s.empty() && s.front() == '{') {
    try {
      return range_from_json(nlohmann::json::parse(s), table);
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("bad delta JSON: ") + e.what());
    }
  }
  auto column = [&](const std::string& name) {
    const auto c = table.find_column(trim(name));
    if (!c) throw Error("unknown column '" + trim(name) + "' in '" + s + "'");
    return *c;
  };
  nlohmann::json j;
  if (const auto eq = s.find("=="); eq != std::string::npos) {
    const auto c = column(s.substr(0, eq));
    j["column"] = table.column(c).name;
    std::vector<std::string> syms;
    std::stringstream ss(s.substr(eq + 2));
    std::string item;
    while (std::getline(ss, item, '|')) syms.push_back(trim(item));
    j["symbols"] = syms;
    return range_from_json(j, table);
  }
  // a<=Name<b, Name<b, Name>=a
  if (const auto le = s.find("<="); le != std::string::npos) {
    const auto lt = s.find('<', le + 2);
    if (lt == std::string::npos) throw Error("cannot read delta '" + s + "'");
    const auto c = column(s.substr(le + 2, lt - le - 2));
    j["column"] = table.column(c).name;
    j["lo"] = number_or_throw(trim(s.substr(0, le)), s);
    j["hi"] = number_or_throw(trim(s.substr(lt + 1)), s);
    return range_from_json(j, table);
  }
  if (const auto ge = s.find(">="); ge != std::string::npos) {
    const auto c = column(s.substr(0, ge));
    j["column"] = table.column(c).name;
    j["lo"] = number_or_throw(trim(s.substr(ge + 2)), s);
    return range_from_json(j, table);
  }
  if (const auto lt = s.find('<'); lt != std::string::npos) {
    const auto c = column(s.substr(0, lt));
    j["column"] = table.column(c).name;
    j["hi"] = number_or_throw(trim(s.substr(lt + 1)), s);
    return range_from_json(j, table);
  }
  throw Error("cannot read delta '" + s + "'; use Name<b, Name>=a, a<=Name<b or name==x|y");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            std::istream& in) {
  Options o;
  CLI::App app{"keyminer: find the few feature ranges that select good rows"};
  app.require_subcommand(1);
  app.fallthrough();
  const std::vector<std::pair<std::string, std::string>> modes = {
      {"keys", "select rows with a few ranges, asking few questions"},
      {"tree", "grow the unpruned plan tree"},
      {"plan", "plans that move a worse leaf to a better one"},
      {"whatif", "summarize the rows matching some constraints"},
      {"profile", "state-frequency profile of a few features"},
      {"baseline", "compare keys with budget-matched random search"},
      {"ols", "least-squares models of the goal columns"},
      {"serve", "run the /v1 HTTP session service"}};
  for (const auto& [name, help] : modes) {
    app.add_subcommand(name, help)->callback([&o, name = name] { o.mode = name; });
  }

  app.add_option("--data", o.data, "CSV dataset");
  app.add_option("--seed", o.seed, "random seed (default: $KEYMINER_SEED, else 1)");
  app.add_option("--k,--sample-size", o.sample_size, "rows sampled per division")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
  app.add_option("--eps", o.epsilon, "bin merge tolerance")->check(CLI::NonNegativeNumber);
  app.add_option("--min-size", o.min_size, "smallest row set a loop may keep (0 = auto)");
  app.add_option("--min-leaf", o.min_leaf, "smallest tree leaf (0 = auto)");
  app.add_option("--max-loops", o.max_loops, "loop limit")->check(CLI::PositiveNumber);
  app.add_option("--p", o.distance_p, "distance exponent")->check(CLI::PositiveNumber);
  app.add_option("--domination", o.domination, "continuous or binary")
      ->check(CLI::IsMember({"continuous", "binary"}));
  auto* oracle_opt = app.add_option("--oracle", o.oracle, "auto or interactive")
                         ->check(CLI::IsMember({"auto", "interactive"}));
  app.add_option("--audit", o.audit, "write the audit log here");
  auto* replay_opt = app.add_option("--replay", o.replay, "replay this audit log");
  app.add_option("--override", o.overrides, "replace answer k during replay: k=a|b")
      ->needs(replay_opt);
  replay_opt->excludes(oracle_opt);
  app.add_option("--out", o.out, "json or text")->check(CLI::IsMember({"json", "text"}));
  app.add_flag("--timing", o.timing, "include wall time (breaks byte-identical output)");
  app.add_option("--features", o.features, "profile: a count or comma-separated names");
  app.add_option("--bins", o.bins, "profile: equal-width bins per feature");
  app.add_option("--delta", o.deltas, "whatif: constraint such as Cylinders<5 or origin==3");
  app.add_flag("--keys", o.use_keys, "whatif: start from the ranges a keys run selects");
  app.add_option("--from", o.from, "plan: source leaf id");
  app.add_option("--to", o.to, "plan: target leaf id");
  app.add_option("--budget", o.budget, "baseline: evaluations (0 = match keys)");
  app.add_option("--target", o.targets, "ols: target column (repeatable)");
  app.add_option("--inputs", o.inputs, "ols: input columns")->delimiter(',');
  app.add_option("--host", o.host, "serve: bind address");
  app.add_option("--port", o.port, "serve: port");
  app.add_option("--audit-dir", o.audit_dir, "serve: keep session logs here");
  app.add_option("--max-sessions", o.max_sessions, "serve: active session cap");
  app.add_option("--answer-timeout", o.answer_timeout, "serve: seconds to wait for an answer");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  if (!o.seed) {
    if (const char* env = std::getenv("KEYMINER_SEED")) {
      std::uint64_t v = 0;
      const std::string_view s(env);
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        err << "usage error: KEYMINER_SEED must be an unsigned integer\n";
        return kExitUsage;
      }
      o.seed = v;
    }
  }

  try {
    if (o.mode != "serve" && o.data.empty()) throw UsageError("--data is required");
    if (o.mode == "keys") return cmd_keys(o, out, err, in);
    if (o.mode == "tree") return cmd_tree(o, out);
    if (o.mode == "plan") return cmd_plan(o, out);
    if (o.mode == "whatif") return cmd_whatif(o, out, err, in);
    if (o.mode == "profile") return cmd_profile(o, out);
    if (o.mode == "baseline") return cmd_baseline(o, out, err, in);
    if (o.mode == "ols") return cmd_ols(o, out);
    if (o.mode == "serve") return cmd_serve(o, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
  err << "usage error: unknown mode\n";
  return kExitUsage;
}

}  // namespace keyminer
