#ifndef RRM_JUDGE_HPP
#define RRM_JUDGE_HPP

// Pairwise judges and the voting layer that sits on top of them.
//
// A PairwiseJudge answers one sample: "which of the two presented responses
// is better". The answer is in presented orientation. voted_judge() owns
// order alternation, vote mapping back to the canonical pair, tie breaking,
// and NoVerdict resampling, so every backend composes with voting@k.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rrm/core.hpp"
#include "rrm/rng.hpp"

namespace rrm {

enum class Backend { kOracle, kScripted, kRemote };

inline const char* to_string(Backend b) {
  switch (b) {
    case Backend::kOracle: return "oracle";
    case Backend::kScripted: return "scripted";
    case Backend::kRemote: return "remote";
  }
  return "unknown";
}

inline Backend parse_backend(std::string_view s) {
  if (s == "oracle") return Backend::kOracle;
  if (s == "scripted") return Backend::kScripted;
  if (s == "remote") return Backend::kRemote;
  throw Error(ErrorCode::kConfig, "unknown judge backend '" + std::string(s) + "'");
}

inline constexpr int kDefaultPostBudget = 100;

struct JudgeSpec {
  Backend backend = Backend::kOracle;
  int votes_per_match = 1;
  bool swap_orders = true;
  double temperature = 0.6;
  std::optional<int> thinking_budget;
  int post_budget = kDefaultPostBudget;
  int max_concurrency = 1;
  int retry_limit = 2;
  bool cache_enabled = true;
  std::string thinking_terminator = std::string(kDefaultThinkingTerminator);
};

inline void validate(const JudgeSpec& spec) {
  if (spec.votes_per_match < 1)
    throw Error(ErrorCode::kConfig, "votes_per_match must be >= 1");
  if (spec.post_budget < 1) throw Error(ErrorCode::kConfig, "post_budget must be >= 1");
  if (spec.max_concurrency < 1) throw Error(ErrorCode::kConfig, "max_concurrency must be >= 1");
  if (spec.retry_limit < 0) throw Error(ErrorCode::kConfig, "retry_limit must be >= 0");
  if (spec.temperature < 0) throw Error(ErrorCode::kConfig, "temperature must be >= 0");
  if (spec.thinking_budget && *spec.thinking_budget < 1)
    throw Error(ErrorCode::kConfig, "thinking_budget must be >= 1");
  if (spec.thinking_terminator.empty())
    throw Error(ErrorCode::kConfig, "thinking terminator must be nonempty");
}

/// One sample request against a canonical pair (a, b).
struct SampleRequest {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  Order order = Order::kAB;
  std::uint32_t vote_index = 0;

  std::size_t first() const { return order == Order::kAB ? index_a : index_b; }
  std::size_t second() const { return order == Order::kAB ? index_b : index_a; }
};

class PairwiseJudge {
 public:
  virtual ~PairwiseJudge() = default;

  /// Winner is in presented orientation (kFirst = request.first()).
  /// Implementations must be safe to call concurrently.
  virtual Verdict judge(const CandidateSet& set, const SampleRequest& request) = 0;
};

namespace detail {

inline Verdict synthetic_verdict(Side presented_winner) {
  Verdict v;
  v.winner = presented_winner;
  v.post = presented_winner == Side::kFirst ? "\\boxed{Assistant 1}" : "\\boxed{Assistant 2}";
  v.raw_output = v.post;
  v.votes_first = presented_winner == Side::kFirst ? 1 : 0;
  v.votes_second = 1 - v.votes_first;
  return v;
}

inline Side presented_side_of(std::size_t winner_index, const SampleRequest& request) {
  return winner_index == request.first() ? Side::kFirst : Side::kSecond;
}

}  // namespace detail

struct OracleSpec {
  double flip_probability = 0.0;
  std::uint64_t rng_seed = 0;
};

/// Gold-label simulator: prefers the gold side with probability 1 - eps.
/// Draws are keyed on (seed, query id, unordered pair, vote index), so a
/// given sample is reproducible under any scheduling.
class OracleJudge final : public PairwiseJudge {
 public:
  explicit OracleJudge(OracleSpec spec) : spec_(spec) {
    if (!(spec.flip_probability >= 0.0 && spec.flip_probability <= 0.5))
      throw Error(ErrorCode::kConfig, "oracle flip probability must lie in [0, 0.5]");
  }

  Verdict judge(const CandidateSet& set, const SampleRequest& request) override {
    if (!set.has_gold())
      throw Error(ErrorCode::kNoGold, "oracle judge needs gold labels for '" + set.query.id + "'");
    auto i = request.index_a;
    auto j = request.index_b;
    if (i == j || i >= set.size() || j >= set.size())
      throw Error(ErrorCode::kInvalidArgument, "oracle judge needs two distinct valid indices");
    Rng rng(mix_key({spec_.rng_seed, fnv1a64(set.query.id), std::min(i, j), std::max(i, j),
                     request.vote_index}));
    auto preferred = preferred_of(set, i, j);
    std::size_t winner;
    if (preferred) {
      std::size_t loser = *preferred == i ? j : i;
      winner = rng.bernoulli(spec_.flip_probability) ? loser : *preferred;
    } else {
      winner = rng.coin() ? std::max(i, j) : std::min(i, j);
    }
    return detail::synthetic_verdict(detail::presented_side_of(winner, request));
  }

  const OracleSpec& spec() const { return spec_; }

 private:
  static std::optional<std::size_t> preferred_of(const CandidateSet& set, std::size_t i,
                                                 std::size_t j) {
    if (set.gold_index) {
      if (*set.gold_index == i) return i;
      if (*set.gold_index == j) return j;
    }
    if (set.gold_correct) {
      bool ci = (*set.gold_correct)[i];
      bool cj = (*set.gold_correct)[j];
      if (ci != cj) return ci ? i : j;
    }
    return std::nullopt;
  }

  OracleSpec spec_;
};

// ---------------------------------------------------------------------------
// Scripted ledgers

struct LedgerEntry {
  std::string query_id;
  std::size_t i = 0;
  std::size_t j = 0;
  Order order = Order::kAB;
  std::uint32_t vote_index = 0;
  std::string raw_output;
};

using LedgerKey = std::tuple<std::string, std::size_t, std::size_t, Order, std::uint32_t>;

inline LedgerKey key_of(const LedgerEntry& e) {
  return {e.query_id, e.i, e.j, e.order, e.vote_index};
}

inline std::string describe(const LedgerKey& key) {
  const auto& [q, i, j, order, vote] = key;
  return "(" + q + "," + std::to_string(i) + "," + std::to_string(j) + "," + to_string(order) +
         "," + std::to_string(vote) + ")";
}

inline nlohmann::ordered_json to_json(const LedgerEntry& e) {
  nlohmann::ordered_json j;
  j["query_id"] = e.query_id;
  j["i"] = e.i;
  j["j"] = e.j;
  j["order"] = to_string(e.order);
  j["vote_index"] = e.vote_index;
  j["raw_output"] = e.raw_output;
  return j;
}

inline LedgerEntry ledger_entry_from_json(const nlohmann::json& j) {
  LedgerEntry e;
  e.query_id = j.at("query_id").get<std::string>();
  e.i = j.at("i").get<std::size_t>();
  e.j = j.at("j").get<std::size_t>();
  e.order = parse_order(j.at("order").get<std::string>());
  e.vote_index = j.at("vote_index").get<std::uint32_t>();
  e.raw_output = j.at("raw_output").get<std::string>();
  return e;
}

inline std::vector<LedgerEntry> read_ledger(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open ledger '" + path + "'");
  std::vector<LedgerEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      entries.push_back(ledger_entry_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kIo,
                  path + ":" + std::to_string(line_no) + ": bad ledger record: " + e.what());
    }
  }
  return entries;
}

/// Replays recorded raw outputs. Missing keys raise MissingFixture.
class ScriptedJudge final : public PairwiseJudge {
 public:
  ScriptedJudge() = default;
  explicit ScriptedJudge(const std::vector<LedgerEntry>& entries,
                         std::string terminator = std::string(kDefaultThinkingTerminator))
      : terminator_(std::move(terminator)) {
    for (const auto& e : entries) ledger_[key_of(e)] = e.raw_output;
  }

  void add(const LedgerEntry& e) { ledger_[key_of(e)] = e.raw_output; }

  Verdict judge(const CandidateSet& set, const SampleRequest& request) override {
    LedgerKey key{set.query.id, request.index_a, request.index_b, request.order,
                  request.vote_index};
    auto it = ledger_.find(key);
    if (it == ledger_.end())
      throw Error(ErrorCode::kMissingFixture, "no ledger entry for " + describe(key));
    return parse_verdict(it->second, terminator_);
  }

  std::size_t size() const { return ledger_.size(); }

 private:
  std::map<LedgerKey, std::string> ledger_;
  std::string terminator_ = std::string(kDefaultThinkingTerminator);
};

/// Decorator that records every sample (including unparseable ones) as a
/// ledger entry suitable for ScriptedJudge replay.
class RecordingJudge final : public PairwiseJudge {
 public:
  explicit RecordingJudge(PairwiseJudge& inner) : inner_(inner) {}

  Verdict judge(const CandidateSet& set, const SampleRequest& request) override {
    try {
      Verdict v = inner_.judge(set, request);
      record(set, request, v.raw_output);
      return v;
    } catch (const NoVerdictError& e) {
      record(set, request, e.raw_output());
      throw;
    }
  }

  /// Entries sorted by key, independent of completion order.
  std::vector<LedgerEntry> entries() const {
    std::lock_guard lock(mu_);
    std::vector<LedgerEntry> out;
    out.reserve(entries_.size());
    for (const auto& [key, raw] : entries_) {
      const auto& [q, i, j, order, vote] = key;
      out.push_back(LedgerEntry{q, i, j, order, vote, raw});
    }
    return out;
  }

 private:
  void record(const CandidateSet& set, const SampleRequest& r, const std::string& raw) {
    std::lock_guard lock(mu_);
    entries_[LedgerKey{set.query.id, r.index_a, r.index_b, r.order, r.vote_index}] = raw;
  }

  PairwiseJudge& inner_;
  mutable std::mutex mu_;
  std::map<LedgerKey, std::string> entries_;
};

/// Counts sample calls, successful or not.
class CountingJudge final : public PairwiseJudge {
 public:
  explicit CountingJudge(PairwiseJudge& inner) : inner_(inner) {}

  Verdict judge(const CandidateSet& set, const SampleRequest& request) override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.judge(set, request);
  }

  std::uint64_t calls() const { return calls_.load(); }
  void reset() { calls_.store(0); }

 private:
  PairwiseJudge& inner_;
  std::atomic<std::uint64_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Voting

inline constexpr int kMaxTieBreakSamples = 3;

/// voting@k for the canonical pair (i, j). Sample s is presented in
/// `base_order` when s is even and flipped when s is odd (if swap_orders).
/// Ties draw up to three extra samples at a seeded random order, then fall
/// back to a seeded fair coin. NoVerdict samples are redrawn with a fresh
/// vote index, at most spec.retry_limit times per match.
/// The returned winner is canonical: kFirst means i won.
inline Verdict voted_judge(PairwiseJudge& judge, const CandidateSet& set, std::size_t i,
                           std::size_t j, const JudgeSpec& spec, std::uint64_t seed,
                           Order base_order = Order::kAB) {
  if (i == j) throw Error(ErrorCode::kInvalidArgument, "a match needs two distinct candidates");
  if (spec.votes_per_match < 1) throw Error(ErrorCode::kConfig, "votes_per_match must be >= 1");

  int votes[2] = {0, 0};
  std::uint32_t next_index = 0;
  int resamples_left = spec.retry_limit;
  std::vector<std::pair<Side, Verdict>> samples;

  auto draw = [&](Order order) {
    for (;;) {
      SampleRequest req{i, j, order, next_index++};
      try {
        Verdict v = judge.judge(set, req);
        Side canonical = order == Order::kAB ? v.winner : other(v.winner);
        ++votes[canonical == Side::kFirst ? 0 : 1];
        samples.emplace_back(canonical, std::move(v));
        return;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoVerdict || resamples_left == 0) throw;
        --resamples_left;
      }
    }
  };

  for (int s = 0; s < spec.votes_per_match; ++s) {
    draw(spec.swap_orders && (s % 2 == 1) ? flip(base_order) : base_order);
  }

  Rng tie_rng(mix_key({seed, fnv1a64(set.query.id), i, j, 0x7469655FULL}));
  for (int extra = 0; votes[0] == votes[1] && extra < kMaxTieBreakSamples; ++extra) {
    draw(tie_rng.coin() ? Order::kBA : Order::kAB);
  }

  Side winner;
  if (votes[0] != votes[1]) {
    winner = votes[0] > votes[1] ? Side::kFirst : Side::kSecond;
  } else {
    winner = tie_rng.coin() ? Side::kSecond : Side::kFirst;
  }

  Verdict out;
  for (auto& [side, v] : samples) {
    if (side == winner) {
      out = std::move(v);
      break;
    }
  }
  out.winner = winner;
  out.votes_first = votes[0];
  out.votes_second = votes[1];
  return out;
}

}  // namespace rrm

#endif  // RRM_JUDGE_HPP
