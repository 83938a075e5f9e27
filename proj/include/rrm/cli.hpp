#ifndef RRM_CLI_HPP
#define RRM_CLI_HPP

// The `rrm` command line: subcommands judge, knockout, elo, bestofn,
// group-rewards, bench, patterns and post-lengths.
//
// Configuration is a flat JSON object (--config); flags override file
// values. The merged configuration, minus output locations, is hashed and
// the hash plus seed are embedded in every artifact. Artifacts are staged
// in memory and only written (atomically) once the whole run succeeded.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rrm/core.hpp"
#include "rrm/eval.hpp"
#include "rrm/io.hpp"
#include "rrm/judge.hpp"
#include "rrm/rating.hpp"
#include "rrm/remote_judge.hpp"
#include "rrm/rewards.hpp"
#include "rrm/tournament.hpp"

namespace rrm::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Defaults for every recognised key; the merged config always carries all of them.
inline ojson default_config() {
  ojson c;
  c["seed"] = 0;
  c["judge"] = "oracle";
  c["votes"] = 1;
  c["swap_orders"] = true;
  c["temperature"] = 0.6;
  c["thinking_budget"] = nullptr;
  c["post_budget"] = kDefaultPostBudget;
  c["concurrency"] = 1;
  c["retry_limit"] = 2;
  c["cache"] = true;
  c["cache_path"] = "";
  c["terminator"] = std::string(kDefaultThinkingTerminator);
  c["flip_probability"] = 0.0;
  c["ledger"] = "";
  c["record_ledger"] = "";
  c["endpoint"] = "";
  c["model"] = "";
  c["api_key_env"] = "";
  c["max_tokens"] = 8192;
  c["data"] = "";
  c["out"] = "";
  c["strategy"] = "knockout";
  c["mode"] = "full";
  c["m"] = 4;
  c["lambda"] = 0.01;
  c["group_size"] = 8;
  c["normalize"] = "raw";
  c["order_policy"] = "single-random";
  c["budgets"] = ojson::array();
  c["threshold"] = 100;
  c["bucket_width"] = 10;
  return c;
}

/// Keys that locate outputs rather than define the experiment.
inline bool is_location_key(const std::string& key) {
  return key == "out" || key == "record_ledger" || key == "cache_path";
}

struct RunConfig {
  std::string command;
  ojson merged;
  ojson hashed;
  std::string config_hash;
  std::uint64_t seed = 0;
  JudgeSpec judge;
  OracleSpec oracle;
  RemoteConfig remote;

  std::string str(const char* key) const { return merged.at(key).get<std::string>(); }
  template <typename T>
  T get(const char* key) const {
    return merged.at(key).get<T>();
  }
};

inline RunConfig build_config(const std::string& command, const std::string& config_path,
                              const ojson& overrides) {
  RunConfig cfg;
  cfg.command = command;
  cfg.merged = default_config();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw Error(ErrorCode::kConfig, "cannot open config '" + config_path + "'");
    ojson file;
    try {
      file = ojson::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kConfig, "config '" + config_path + "' is not valid JSON: " + e.what());
    }
    if (!file.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
    for (auto it = file.begin(); it != file.end(); ++it) {
      if (!cfg.merged.contains(it.key()))
        throw Error(ErrorCode::kConfig, "unknown config key '" + it.key() + "'");
      cfg.merged[it.key()] = it.value();
    }
  }
  for (auto it = overrides.begin(); it != overrides.end(); ++it) cfg.merged[it.key()] = it.value();

  for (auto it = cfg.merged.begin(); it != cfg.merged.end(); ++it) {
    if (!is_location_key(it.key())) cfg.hashed[it.key()] = it.value();
  }
  cfg.hashed["command"] = command;
  cfg.config_hash = hex64(fnv1a64(cfg.hashed.dump()));

  try {
    cfg.seed = cfg.get<std::uint64_t>("seed");
    auto& j = cfg.judge;
    j.backend = parse_backend(cfg.str("judge"));
    j.votes_per_match = cfg.get<int>("votes");
    j.swap_orders = cfg.get<bool>("swap_orders");
    j.temperature = cfg.get<double>("temperature");
    if (!cfg.merged["thinking_budget"].is_null()) j.thinking_budget = cfg.get<int>("thinking_budget");
    j.post_budget = cfg.get<int>("post_budget");
    j.max_concurrency = cfg.get<int>("concurrency");
    j.retry_limit = cfg.get<int>("retry_limit");
    j.cache_enabled = cfg.get<bool>("cache");
    j.thinking_terminator = cfg.str("terminator");
    validate(j);
    cfg.oracle.flip_probability = cfg.get<double>("flip_probability");
    cfg.oracle.rng_seed = cfg.seed;
    cfg.remote.endpoint = cfg.str("endpoint");
    cfg.remote.model = cfg.str("model");
    cfg.remote.api_key_env = cfg.str("api_key_env");
    cfg.remote.max_tokens = cfg.get<int>("max_tokens");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad config value: ") + e.what());
  }
  if (cfg.judge.thinking_budget && cfg.judge.backend != Backend::kRemote)
    throw Error(ErrorCode::kConfig, "--thinking-budget requires the remote judge");
  return cfg;
}

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw Error(ErrorCode::kConfig, std::string("no ") + what + " given");
  if (!std::filesystem::is_regular_file(path))
    throw Error(ErrorCode::kIo, std::string(what) + " '" + path + "' does not exist");
}

/// Judge stack: backend -> optional recorder -> call counter.
class JudgeStack {
 public:
  explicit JudgeStack(const RunConfig& cfg) {
    switch (cfg.judge.backend) {
      case Backend::kOracle:
        base_ = std::make_unique<OracleJudge>(cfg.oracle);
        break;
      case Backend::kScripted: {
        auto ledger = cfg.str("ledger");
        require_file(ledger, "scripted ledger");
        base_ = std::make_unique<ScriptedJudge>(read_ledger(ledger), cfg.judge.thinking_terminator);
        break;
      }
      case Backend::kRemote: {
        std::shared_ptr<VerdictCache> cache;
        cache_path_ = cfg.str("cache_path");
        if (cfg.judge.cache_enabled) {
          cache = std::make_shared<VerdictCache>();
          if (!cache_path_.empty()) cache->load(cache_path_);
        }
        auto remote = std::make_unique<RemoteJudge>(cfg.remote, cfg.judge, default_template(), cache);
        remote_ = remote.get();
        base_ = std::move(remote);
        break;
      }
    }
    PairwiseJudge* top = base_.get();
    if (!cfg.str("record_ledger").empty()) {
      recorder_ = std::make_unique<RecordingJudge>(*top);
      top = recorder_.get();
    }
    counter_ = std::make_unique<CountingJudge>(*top);
  }

  PairwiseJudge& judge() { return *counter_; }
  std::uint64_t calls() const { return counter_->calls(); }
  std::uint64_t network_requests() const { return remote_ ? remote_->network_requests() : 0; }
  const RecordingJudge* recorder() const { return recorder_.get(); }

  void persist_cache() const {
    if (remote_ && remote_->cache() && !cache_path_.empty()) remote_->cache()->save(cache_path_);
  }

 private:
  std::unique_ptr<PairwiseJudge> base_;
  std::unique_ptr<RecordingJudge> recorder_;
  std::unique_ptr<CountingJudge> counter_;
  RemoteJudge* remote_ = nullptr;
  std::string cache_path_;
};

struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;
  ojson manifest_extra = ojson::object();

  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

inline std::string jsonl(const std::vector<ojson>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l.dump();
    out += '\n';
  }
  return out;
}

inline void stamp(ojson& j, const RunConfig& cfg) {
  j["seed"] = cfg.seed;
  j["config_hash"] = cfg.config_hash;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

// --------------------------------------------------------------------------
// Commands

inline Artifacts cmd_judge(const RunConfig& cfg, JudgeStack& stack) {
  auto pairs = read_preference_pairs(cfg.str("data"));
  PairwiseOptions opts;
  opts.seed = cfg.seed;
  opts.order_policy = cfg.str("order_policy") == "both-orders" ? OrderPolicy::kBothOrders
                                                               : OrderPolicy::kSingleRandom;
  auto report = pairwise_accuracy(pairs, stack.judge(), cfg.judge, opts);
  std::vector<ojson> lines;
  for (const auto& o : report.outcomes) {
    if (o.error_code == ErrorCode::kTransport) throw Error(ErrorCode::kTransport, o.error);
    for (std::size_t p = 0; p < o.orders.size(); ++p) {
      const auto& v = o.verdicts[p];
      bool unresolved = v.votes_first + v.votes_second == 0;
      ojson l;
      l["pair_id"] = o.id;
      if (o.subset) l["subset"] = *o.subset;
      l["order"] = to_string(o.orders[p]);
      l["winner"] = unresolved ? ojson(nullptr) : ojson(o.chosen_won[p] ? "chosen" : "rejected");
      l["votes"] = {v.votes_first, v.votes_second};
      l["raw_output"] = v.raw_output;
      if (unresolved) l["error"] = o.error;
      stamp(l, cfg);
      lines.push_back(std::move(l));
    }
  }
  Artifacts a;
  a.add("verdicts.jsonl", jsonl(lines));
  a.manifest_extra["pairs"] = report.pairs;
  a.manifest_extra["unresolved"] = report.unresolved;
  return a;
}

inline Artifacts cmd_knockout(const RunConfig& cfg, JudgeStack& stack) {
  auto sets = read_candidate_pools(cfg.str("data"));
  std::vector<ojson> lines;
  std::size_t total = 0;
  std::vector<std::size_t> per_pool;
  for (const auto& s : sets) {
    auto bracket = run_knockout(s, stack.judge(), cfg.judge, cfg.seed);
    total += bracket.total_matches;
    per_pool.push_back(bracket.total_matches);
    auto j = to_json(bracket);
    j["config_hash"] = cfg.config_hash;
    lines.push_back(std::move(j));
  }
  Artifacts a;
  a.add("brackets.jsonl", jsonl(lines));
  a.manifest_extra["pools"] = sets.size();
  a.manifest_extra["matches_per_pool"] = per_pool;
  a.manifest_extra["total_matches"] = total;
  return a;
}

inline ScheduleMode schedule_mode_of(const RunConfig& cfg) {
  auto mode = cfg.str("mode");
  if (mode == "full") return ScheduleMode::full();
  if (mode == "sampled") return ScheduleMode::sampled(cfg.get<std::size_t>("m"));
  throw Error(ErrorCode::kConfig, "mode must be 'full' or 'sampled', got '" + mode + "'");
}

inline RatingConfig rating_config_of(const RunConfig& cfg) {
  RatingConfig rc;
  rc.lambda = cfg.get<double>("lambda");
  return rc;
}

inline Artifacts cmd_elo(const RunConfig& cfg, JudgeStack& stack) {
  auto sets = read_candidate_pools(cfg.str("data"));
  auto mode = schedule_mode_of(cfg);
  auto rating = rating_config_of(cfg);
  std::vector<ojson> lines;
  std::size_t total = 0;
  for (const auto& s : sets) {
    if (s.size() < 2) throw Error(ErrorCode::kInvalidArgument, "pool '" + s.query.id + "' has fewer than 2 candidates");
    auto schedule = schedule_matches(s.size(), mode, mix_key({cfg.seed, fnv1a64(s.query.id)}));
    auto records = judge_schedule(s, stack.judge(), schedule, cfg.judge, cfg.seed);
    auto table = fit_ratings(records, s.size(), rating);
    total += records.size();
    auto j = to_json(table, s.query.id);
    j["matches"] = ojson::array();
    for (const auto& r : records) j["matches"].push_back(to_json(r));
    stamp(j, cfg);
    lines.push_back(std::move(j));
  }
  Artifacts a;
  a.add("ratings.jsonl", jsonl(lines));
  a.manifest_extra["pools"] = sets.size();
  a.manifest_extra["total_matches"] = total;
  return a;
}

inline SelectionStrategy strategy_of(const RunConfig& cfg) {
  auto s = cfg.str("strategy");
  if (s == "knockout") return SelectionStrategy::knockout();
  if (s == "elo-full") return SelectionStrategy::elo_full();
  if (s == "elo-sampled") return SelectionStrategy::elo_sampled(cfg.get<std::size_t>("m"));
  throw Error(ErrorCode::kConfig, "strategy must be knockout, elo-full or elo-sampled, got '" + s + "'");
}

inline std::string subset_csv(const std::map<std::string, std::pair<std::size_t, std::size_t>>& counts,
                              const char* unit) {
  std::string csv = std::string("subset,") + unit + ",accuracy\n";
  for (const auto& [name, c] : counts) {
    csv += name + "," + std::to_string(c.second) + "," +
           format_double(static_cast<double>(c.first) / c.second) + "\n";
  }
  return csv;
}

inline Artifacts cmd_bestofn(const RunConfig& cfg, JudgeStack& stack) {
  auto sets = read_candidate_pools(cfg.str("data"));
  auto strategy = strategy_of(cfg);
  auto rating = rating_config_of(cfg);
  auto report = best_of_n_eval(sets, stack.judge(), cfg.judge, strategy, cfg.seed, rating);

  ojson j;
  j["strategy"] = report.strategy;
  j["accuracy"] = report.accuracy;
  j["sets"] = report.selections.size();
  j["total_matches"] = report.total_matches;
  j["selections"] = ojson::array();
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_subset;
  for (const auto& sel : report.selections) {
    j["selections"].push_back({{"query_id", sel.query_id},
                               {"winner", sel.winner},
                               {"correct", sel.correct},
                               {"matches", sel.matches}});
    auto& c = per_subset[sel.subset.value_or(std::string(kNoSubset))];
    c.first += sel.correct ? 1 : 0;
    ++c.second;
  }
  Artifacts a;
  auto budgets = cfg.get<std::vector<std::size_t>>("budgets");
  if (!budgets.empty()) {
    auto curve = comparison_budget_curve(sets, stack.judge(), cfg.judge, budgets, cfg.seed);
    j["budget_curve"] = ojson::array();
    std::string csv = "budget,mean_matches,accuracy\n";
    for (const auto& pt : curve) {
      j["budget_curve"].push_back(
          {{"budget", pt.budget}, {"mean_matches", pt.mean_matches}, {"accuracy", pt.accuracy}});
      csv += std::to_string(pt.budget) + "," + format_double(pt.mean_matches) + "," +
             format_double(pt.accuracy) + "\n";
    }
    a.add("budget_curve.csv", csv);
  }
  stamp(j, cfg);
  a.add("bestofn.json", j.dump(2) + "\n");
  a.add("bestofn_subsets.csv", subset_csv(per_subset, "sets"));
  a.manifest_extra["total_matches"] = report.total_matches;
  return a;
}

inline Artifacts cmd_group_rewards(const RunConfig& cfg, JudgeStack& stack) {
  auto sets = read_candidate_pools(cfg.str("data"));
  GroupRewardSpec spec;
  spec.group_size = cfg.get<std::size_t>("group_size");
  spec.competitors_per_response = cfg.get<std::size_t>("m");
  auto norm = cfg.str("normalize");
  if (norm == "zscore") {
    spec.normalize = RewardNormalization::kZScore;
  } else if (norm != "raw") {
    throw Error(ErrorCode::kConfig, "normalize must be 'raw' or 'zscore'");
  }
  spec.rating = rating_config_of(cfg);
  std::vector<ojson> lines;
  std::size_t total = 0;
  for (const auto& s : sets) {
    auto g = group_rewards(s, stack.judge(), spec, cfg.judge, cfg.seed);
    total += g.matches.size();
    auto j = to_json(g, s.query.id);
    stamp(j, cfg);
    lines.push_back(std::move(j));
  }
  Artifacts a;
  a.add("rewards.jsonl", jsonl(lines));
  a.manifest_extra["groups"] = sets.size();
  a.manifest_extra["matches_per_group"] = spec.group_size * spec.competitors_per_response;
  a.manifest_extra["total_matches"] = total;
  return a;
}

inline Artifacts cmd_bench(const RunConfig& cfg, JudgeStack& stack) {
  auto pairs = read_preference_pairs(cfg.str("data"));
  PairwiseOptions opts;
  opts.seed = cfg.seed;
  auto policy = cfg.str("order_policy");
  if (policy == "both-orders") {
    opts.order_policy = OrderPolicy::kBothOrders;
  } else if (policy != "single-random") {
    throw Error(ErrorCode::kConfig, "order_policy must be 'single-random' or 'both-orders'");
  }
  auto report = pairwise_accuracy(pairs, stack.judge(), cfg.judge, opts);
  for (const auto& o : report.outcomes) {
    if (o.error_code == ErrorCode::kTransport) throw Error(ErrorCode::kTransport, o.error);
  }
  ojson j;
  j["order_policy"] = policy;
  j["accuracy"] = report.accuracy;
  j["agreement"] = report.agreement;
  j["macro_f1"] = report.macro_f1;
  j["pairs"] = report.pairs;
  j["judgments"] = report.judgments;
  j["correct"] = report.correct;
  j["unresolved"] = report.unresolved;
  j["per_subset"] = ojson::object();
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& [name, sub] : report.per_subset) {
    j["per_subset"][name] = {{"accuracy", sub.accuracy}, {"judgments", sub.judgments}};
    counts[name] = {static_cast<std::size_t>(sub.accuracy * sub.judgments + 0.5), sub.judgments};
  }
  stamp(j, cfg);
  Artifacts a;
  a.add("bench.json", j.dump(2) + "\n");
  a.add("bench_subsets.csv", subset_csv(counts, "judgments"));
  return a;
}

inline Artifacts cmd_patterns(const RunConfig& cfg) {
  auto texts = read_output_texts(cfg.str("data"));
  auto j = to_json(analyze_patterns(texts, cfg.str("terminator")));
  stamp(j, cfg);
  Artifacts a;
  a.add("patterns.json", j.dump(2) + "\n");
  return a;
}

inline Artifacts cmd_post_lengths(const RunConfig& cfg) {
  auto texts = read_output_texts(cfg.str("data"));
  auto j = to_json(post_thinking_stats(texts, cfg.str("terminator"), cfg.get<std::size_t>("threshold"),
                                       cfg.get<std::size_t>("bucket_width")));
  stamp(j, cfg);
  Artifacts a;
  a.add("post_lengths.json", j.dump(2) + "\n");
  return a;
}

inline bool needs_judge(const std::string& command) {
  return command != "patterns" && command != "post-lengths";
}

/// Executes one command and writes its artifacts plus manifest.json and
/// timing.json into the output directory.
inline void execute(const RunConfig& cfg, std::ostream& out) {
  auto started = std::chrono::steady_clock::now();
  auto out_dir = cfg.str("out");
  if (out_dir.empty()) throw Error(ErrorCode::kConfig, "no output directory given (--out)");
  require_file(cfg.str("data"), "dataset");

  std::unique_ptr<JudgeStack> stack;
  if (needs_judge(cfg.command)) stack = std::make_unique<JudgeStack>(cfg);

  Artifacts a;
  const auto& c = cfg.command;
  if (c == "judge") a = cmd_judge(cfg, *stack);
  else if (c == "knockout") a = cmd_knockout(cfg, *stack);
  else if (c == "elo") a = cmd_elo(cfg, *stack);
  else if (c == "bestofn") a = cmd_bestofn(cfg, *stack);
  else if (c == "group-rewards") a = cmd_group_rewards(cfg, *stack);
  else if (c == "bench") a = cmd_bench(cfg, *stack);
  else if (c == "patterns") a = cmd_patterns(cfg);
  else if (c == "post-lengths") a = cmd_post_lengths(cfg);
  else throw Error(ErrorCode::kConfig, "unknown command '" + c + "'");

  std::filesystem::create_directories(out_dir);
  std::filesystem::path dir(out_dir);
  ojson manifest;
  manifest["command"] = c;
  manifest["config_hash"] = cfg.config_hash;
  manifest["seed"] = cfg.seed;
  manifest["versions"] = {{"rrm", kVersion},
                          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  manifest["judge_calls"] = stack ? stack->calls() : 0;
  manifest["network_requests"] = stack ? stack->network_requests() : 0;
  for (auto it = a.manifest_extra.begin(); it != a.manifest_extra.end(); ++it)
    manifest[it.key()] = it.value();
  manifest["artifacts"] = ojson::array();
  for (const auto& [name, content] : a.files) manifest["artifacts"].push_back(name);
  if (stack && stack->recorder()) {
    std::vector<ojson> lines;
    for (const auto& e : stack->recorder()->entries()) lines.push_back(to_json(e));
    write_file_atomic(cfg.str("record_ledger"), jsonl(lines));
  }
  manifest["config"] = cfg.hashed;
  manifest["timing"] = "timing.json";

  for (const auto& [name, content] : a.files) write_file_atomic(dir / name, content);
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  if (stack) stack->persist_cache();

  auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - started)
                     .count();
  ojson timing;
  timing["config_hash"] = cfg.config_hash;
  timing["wall_time_ms"] = wall_ms;
  write_file_atomic(dir / "timing.json", timing.dump(2) + "\n");

  out << c << ": wrote " << a.files.size() + 1 << " artifacts to " << out_dir << " (judge calls "
      << manifest["judge_calls"].get<std::uint64_t>() << ", config " << cfg.config_hash << ")\n";
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> judge;
  std::optional<int> votes;
  bool swap_orders = false;
  bool no_swap_orders = false;
  std::optional<int> thinking_budget;
  std::optional<int> post_budget;
  std::optional<int> concurrency;
  std::optional<int> retry_limit;
  std::optional<double> temperature;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::optional<double> flip;
  std::optional<std::string> ledger;
  std::optional<std::string> record_ledger;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
  std::optional<std::string> api_key_env;
  std::optional<std::string> cache_path;
  bool no_cache = false;
  std::optional<std::string> terminator;
  std::optional<std::string> strategy;
  std::optional<std::string> mode;
  std::optional<std::size_t> m;
  std::optional<double> lambda;
  std::optional<std::size_t> group_size;
  std::optional<std::string> normalize;
  std::optional<std::string> order_policy;
  std::vector<std::size_t> budgets;
  std::optional<std::size_t> threshold;

  ojson overrides() const {
    ojson o = ojson::object();
    auto set = [&](const char* key, const auto& opt) {
      if (opt) o[key] = *opt;
    };
    set("seed", seed);
    set("judge", judge);
    set("votes", votes);
    if (swap_orders) o["swap_orders"] = true;
    if (no_swap_orders) o["swap_orders"] = false;
    set("thinking_budget", thinking_budget);
    set("post_budget", post_budget);
    set("concurrency", concurrency);
    set("retry_limit", retry_limit);
    set("temperature", temperature);
    set("out", out);
    set("data", data);
    set("flip_probability", flip);
    set("ledger", ledger);
    set("record_ledger", record_ledger);
    set("endpoint", endpoint);
    set("model", model);
    set("api_key_env", api_key_env);
    set("cache_path", cache_path);
    if (no_cache) o["cache"] = false;
    set("terminator", terminator);
    set("strategy", strategy);
    set("mode", mode);
    set("m", m);
    set("lambda", lambda);
    set("group_size", group_size);
    set("normalize", normalize);
    set("order_policy", order_policy);
    if (!budgets.empty()) o["budgets"] = budgets;
    set("threshold", threshold);
    return o;
  }
};

inline void add_common_flags(CLI::App& sub, Flags& f) {
  sub.add_option("data,--data", f.data, "Input JSONL dataset");
  sub.add_option("--config", f.config, "JSON config file (flags override it)");
  sub.add_option("--seed", f.seed, "RNG seed");
  sub.add_option("--out", f.out, "Output directory");
  sub.add_option("--terminator", f.terminator, "Thinking terminator (default </think>)");
}

inline void add_judge_flags(CLI::App& sub, Flags& f) {
  sub.add_option("--judge", f.judge, "Judge backend")->check(CLI::IsMember({"oracle", "scripted", "remote"}));
  sub.add_option("--votes", f.votes, "Votes per match (voting@k)");
  sub.add_flag("--swap-orders", f.swap_orders, "Alternate presentation order across votes (default)");
  sub.add_flag("--no-swap-orders", f.no_swap_orders, "Present every vote in the same order");
  sub.add_option("--thinking-budget", f.thinking_budget, "Max thinking tokens (remote judge)");
  sub.add_option("--post-budget", f.post_budget, "Max answer tokens after forced truncation");
  sub.add_option("--concurrency", f.concurrency, "Max concurrent judge calls");
  sub.add_option("--retry-limit", f.retry_limit, "Resamples/retries on NoVerdict or transport errors");
  sub.add_option("--temperature", f.temperature, "Sampling temperature (remote judge)");
  sub.add_option("--flip", f.flip, "Oracle flip probability in [0, 0.5]");
  sub.add_option("--ledger", f.ledger, "Scripted judge ledger (JSONL)");
  sub.add_option("--record-ledger", f.record_ledger, "Write every judge sample as a replayable ledger");
  sub.add_option("--endpoint", f.endpoint, "Chat-completions base URL");
  sub.add_option("--model", f.model, "Remote model name");
  sub.add_option("--api-key-env", f.api_key_env, "Environment variable holding the bearer token");
  sub.add_option("--cache-path", f.cache_path, "Verdict cache JSONL (remote judge)");
  sub.add_flag("--no-cache", f.no_cache, "Disable the remote verdict cache");
  sub.add_option("--lambda", f.lambda, "Ridge strength for the rating fit");
}

inline int run(std::vector<std::string> args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Pairwise-judge reward engine: knockout, ELO, voting, group rewards, benchmarks"};
  app.name("rrm");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Flags f;
  struct Sub {
    const char* name;
    const char* help;
    bool judge;
  };
  const Sub subs[] = {
      {"judge", "Judge preference pairs and write verdict records", true},
      {"knockout", "Run a knockout tournament per candidate pool", true},
      {"elo", "Rate every candidate of each pool from pairwise matches", true},
      {"bestofn", "Best-of-N selection accuracy on labeled pools", true},
      {"group-rewards", "Per-response rewards for RL groups", true},
      {"bench", "Pairwise preference accuracy, agreement and F1", true},
      {"patterns", "Reasoning-pattern keyword proportions of judge outputs", false},
      {"post-lengths", "Length distribution of post-thinking segments", false},
  };
  std::vector<CLI::App*> commands;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common_flags(*sub, f);
    if (s.judge) add_judge_flags(*sub, f);
    commands.push_back(sub);
  }
  commands[2]->add_option("--mode", f.mode, "full | sampled")->check(CLI::IsMember({"full", "sampled"}));
  commands[2]->add_option("-m,--competitors", f.m, "Competitors per candidate for --mode sampled");
  commands[3]->add_option("--strategy", f.strategy, "knockout | elo-full | elo-sampled")
      ->check(CLI::IsMember({"knockout", "elo-full", "elo-sampled"}));
  commands[3]->add_option("-m,--competitors", f.m, "Competitors per candidate for elo-sampled");
  commands[3]->add_option("--budgets", f.budgets, "Also emit accuracy at these total match budgets");
  commands[4]->add_option("--group-size", f.group_size, "Responses per group (default 8)");
  commands[4]->add_option("-m,--competitors", f.m, "Competitors per response (default 4)");
  commands[4]->add_option("--normalize", f.normalize, "raw | zscore")->check(CLI::IsMember({"raw", "zscore"}));
  for (auto* sub : {commands[0], commands[5]}) {
    sub->add_option("--order-policy", f.order_policy, "single-random | both-orders")
        ->check(CLI::IsMember({"single-random", "both-orders"}));
  }
  commands[7]->add_option("--threshold", f.threshold, "Flag posts longer than this many words");

  std::reverse(args.begin(), args.end());
  if (!args.empty()) args.pop_back();  // program name
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  std::string command;
  for (auto* sub : commands) {
    if (sub->parsed()) command = sub->get_name();
  }
  try {
    auto cfg = build_config(command, f.config, f.overrides());
    execute(cfg, out);
  } catch (const Error& e) {
    err << "rrm " << command << ": " << e.what() << "\n";
    return e.code() == ErrorCode::kConfig || e.code() == ErrorCode::kIo ? 2 : 1;
  } catch (const std::exception& e) {
    err << "rrm " << command << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

inline int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}

}  // namespace rrm::cli

#endif  // RRM_CLI_HPP
