#ifndef RRM_EVAL_HPP
#define RRM_EVAL_HPP

// Benchmark harness: pairwise preference accuracy, best-of-N selection
// accuracy, comparison-budget curves, reasoning-pattern proportions and
// post-thinking length statistics.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rrm/core.hpp"
#include "rrm/judge.hpp"
#include "rrm/parallel.hpp"
#include "rrm/rating.hpp"
#include "rrm/rng.hpp"
#include "rrm/tournament.hpp"

namespace rrm {

struct PreferencePair {
  std::string id;
  Query query;
  std::string chosen;
  std::string rejected;
  std::optional<std::string> subset;
};

/// Two-candidate set with gold_index on the chosen response.
inline CandidateSet to_candidate_set(const PreferencePair& pair, bool chosen_first = true) {
  CandidateSet set;
  set.query = pair.query;
  if (set.query.id.empty()) set.query.id = pair.id;
  if (!set.query.subset) set.query.subset = pair.subset;
  if (chosen_first) {
    set.candidates = {pair.chosen, pair.rejected};
    set.gold_index = 0;
  } else {
    set.candidates = {pair.rejected, pair.chosen};
    set.gold_index = 1;
  }
  return set;
}

enum class OrderPolicy { kSingleRandom, kBothOrders };

struct PairwiseOptions {
  OrderPolicy order_policy = OrderPolicy::kSingleRandom;
  std::uint64_t seed = 0;
  /// Internal storage order of (chosen, rejected); results must not depend on it.
  bool chosen_first_in_storage = true;
};

struct PairOutcome {
  std::string id;
  std::optional<std::string> subset;
  /// One entry per presentation: true when the chosen response won.
  std::vector<bool> chosen_won;
  std::vector<Order> orders;
  std::vector<Verdict> verdicts;
  int unresolved = 0;
  std::string error;
  std::optional<ErrorCode> error_code;
};

struct SubsetAccuracy {
  double accuracy = 0.0;
  std::size_t judgments = 0;
};

struct PairwiseReport {
  double accuracy = 0.0;
  double agreement = 0.0;
  double macro_f1 = 0.0;
  std::size_t pairs = 0;
  std::size_t judgments = 0;
  std::size_t correct = 0;
  std::size_t unresolved = 0;
  std::map<std::string, SubsetAccuracy> per_subset;
  std::vector<PairOutcome> outcomes;
};

inline constexpr std::string_view kNoSubset = "unlabeled";

namespace detail {

inline bool recordable_judge_error(ErrorCode code) {
  return code == ErrorCode::kNoVerdict || code == ErrorCode::kBudgetExceeded ||
         code == ErrorCode::kTransport;
}

// Macro-F1 over the presented-position classes {First, Second}, averaged
// over classes that occur in either the labels or the predictions.
inline double macro_f1(const std::array<std::array<std::size_t, 2>, 2>& confusion) {
  double sum = 0.0;
  int classes = 0;
  for (int c = 0; c < 2; ++c) {
    auto tp = confusion[c][c];
    auto fn = confusion[c][1 - c];
    auto fp = confusion[1 - c][c];
    if (tp + fn + fp == 0) continue;
    sum += 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
    ++classes;
  }
  return classes == 0 ? 0.0 : sum / classes;
}

}  // namespace detail

/// Accuracy of a judge on (chosen, rejected) pairs. SingleRandom presents
/// each pair once in a seeded random order; BothOrders judges both
/// presentations and counts each. Unresolved judgments count as wrong and
/// are tallied in `unresolved`.
inline PairwiseReport pairwise_accuracy(std::span<const PreferencePair> pairs,
                                        PairwiseJudge& judge, const JudgeSpec& spec,
                                        const PairwiseOptions& options = {}) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "pairwise accuracy needs pairs");
  PairwiseReport report;
  report.pairs = pairs.size();
  report.outcomes.resize(pairs.size());

  parallel_for(pairs.size(), static_cast<std::size_t>(spec.max_concurrency), [&](std::size_t k) {
    const auto& pair = pairs[k];
    if (pair.chosen == pair.rejected)
      throw Error(ErrorCode::kInvalidArgument, "pair '" + pair.id + "' has identical responses");
    auto set = to_candidate_set(pair, options.chosen_first_in_storage);
    std::size_t chosen = options.chosen_first_in_storage ? 0 : 1;
    std::size_t rejected = 1 - chosen;
    auto& out = report.outcomes[k];
    out.id = pair.id;
    out.subset = pair.subset;

    // Orders are relative to (chosen, rejected) so storage order is invisible.
    std::vector<Order> orders;
    if (options.order_policy == OrderPolicy::kBothOrders) {
      orders = {Order::kAB, Order::kBA};
    } else {
      Rng rng(mix_key({options.seed, fnv1a64(pair.id), 0x6F72646572ULL}));
      orders = {rng.coin() ? Order::kBA : Order::kAB};
    }
    for (auto order : orders) {
      out.orders.push_back(order);
      try {
        Verdict v = voted_judge(judge, set, chosen, rejected, spec,
                                mix_key({options.seed, fnv1a64(pair.id)}), order);
        out.chosen_won.push_back(v.winner == Side::kFirst);
        out.verdicts.push_back(std::move(v));
      } catch (const Error& e) {
        if (!detail::recordable_judge_error(e.code())) throw;
        out.chosen_won.push_back(false);
        out.verdicts.emplace_back();
        ++out.unresolved;
        out.error = e.what();
        out.error_code = e.code();
      }
    }
  });

  std::array<std::array<std::size_t, 2>, 2> confusion{};
  std::map<std::string, std::pair<std::size_t, std::size_t>> subset_counts;
  for (const auto& out : report.outcomes) {
    auto& sc = subset_counts[out.subset.value_or(std::string(kNoSubset))];
    for (std::size_t p = 0; p < out.chosen_won.size(); ++p) {
      bool ok = out.chosen_won[p];
      // Class = presented position of the chosen response.
      int truth = out.orders[p] == Order::kAB ? 0 : 1;
      int predicted = ok ? truth : 1 - truth;
      ++confusion[truth][predicted];
      ++report.judgments;
      ++sc.second;
      if (ok) {
        ++report.correct;
        ++sc.first;
      }
    }
    report.unresolved += static_cast<std::size_t>(out.unresolved);
  }
  report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.judgments);
  report.agreement = report.accuracy;
  report.macro_f1 = detail::macro_f1(confusion);
  for (const auto& [name, counts] : subset_counts) {
    report.per_subset[name] = {static_cast<double>(counts.first) / counts.second, counts.second};
  }
  return report;
}

struct SelectionStrategy {
  enum class Kind { kKnockout, kEloFull, kEloSampled, kEloBudget };

  Kind kind = Kind::kKnockout;
  std::size_t param = 0;

  static SelectionStrategy knockout() { return {Kind::kKnockout, 0}; }
  static SelectionStrategy elo_full() { return {Kind::kEloFull, 0}; }
  static SelectionStrategy elo_sampled(std::size_t m) { return {Kind::kEloSampled, m}; }
  static SelectionStrategy elo_budget(std::size_t matches) { return {Kind::kEloBudget, matches}; }
};

inline std::string to_string(const SelectionStrategy& s) {
  switch (s.kind) {
    case SelectionStrategy::Kind::kKnockout: return "knockout";
    case SelectionStrategy::Kind::kEloFull: return "elo-full";
    case SelectionStrategy::Kind::kEloSampled: return "elo-sampled(" + std::to_string(s.param) + ")";
    case SelectionStrategy::Kind::kEloBudget: return "elo-budget(" + std::to_string(s.param) + ")";
  }
  return "unknown";
}

struct Selection {
  std::string query_id;
  std::size_t winner = 0;
  bool correct = false;
  std::size_t matches = 0;
  std::optional<std::string> subset;
};

/// Picks one candidate from the set; 0 matches when n == 1.
inline Selection select_best(const CandidateSet& set, PairwiseJudge& judge, const JudgeSpec& spec,
                             const SelectionStrategy& strategy, std::uint64_t seed,
                             const RatingConfig& rating = {}) {
  validate(set);
  Selection sel;
  sel.query_id = set.query.id;
  sel.subset = set.query.subset;
  if (set.size() == 1) {
    sel.winner = 0;
  } else if (strategy.kind == SelectionStrategy::Kind::kKnockout) {
    auto bracket = run_knockout(set, judge, spec, seed);
    sel.winner = bracket.winner;
    sel.matches = bracket.total_matches;
  } else {
    ScheduleMode mode = strategy.kind == SelectionStrategy::Kind::kEloFull
                            ? ScheduleMode::full()
                        : strategy.kind == SelectionStrategy::Kind::kEloSampled
                            ? ScheduleMode::sampled(strategy.param)
                            : ScheduleMode::budgeted(strategy.param);
    auto schedule = schedule_matches(set.size(), mode, mix_key({seed, fnv1a64(set.query.id)}));
    auto records = judge_schedule(set, judge, schedule, spec, seed);
    auto table = fit_ratings(records, set.size(), rating);
    sel.winner = argmax(table.ratings);
    sel.matches = records.size();
  }
  sel.correct = set.is_correct(sel.winner);
  return sel;
}

struct BestOfNReport {
  std::string strategy;
  double accuracy = 0.0;
  std::size_t total_matches = 0;
  std::vector<Selection> selections;
};

inline BestOfNReport best_of_n_eval(std::span<const CandidateSet> sets, PairwiseJudge& judge,
                                    const JudgeSpec& spec, const SelectionStrategy& strategy,
                                    std::uint64_t seed, const RatingConfig& rating = {}) {
  BestOfNReport report;
  report.strategy = to_string(strategy);
  if (sets.empty()) return report;
  for (const auto& s : sets) {
    if (!s.gold_correct && !s.gold_index)
      throw Error(ErrorCode::kNoGold, "best-of-N needs correctness labels for '" + s.query.id + "'");
  }
  std::size_t correct = 0;
  for (const auto& s : sets) {
    auto sel = select_best(s, judge, spec, strategy, seed, rating);
    correct += sel.correct ? 1 : 0;
    report.total_matches += sel.matches;
    report.selections.push_back(std::move(sel));
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(sets.size());
  return report;
}

struct BudgetPoint {
  std::size_t budget = 0;
  double mean_matches = 0.0;
  double accuracy = 0.0;
};

/// Best-of-N accuracy of budgeted ELO selection, one point per budget.
inline std::vector<BudgetPoint> comparison_budget_curve(std::span<const CandidateSet> sets,
                                                        PairwiseJudge& judge,
                                                        const JudgeSpec& spec,
                                                        std::span<const std::size_t> budgets,
                                                        std::uint64_t seed) {
  if (!std::is_sorted(budgets.begin(), budgets.end()))
    throw Error(ErrorCode::kInvalidArgument, "comparison budgets must be ascending");
  std::vector<BudgetPoint> curve;
  for (auto b : budgets) {
    auto report = best_of_n_eval(sets, judge, spec, SelectionStrategy::elo_budget(b), seed);
    BudgetPoint pt;
    pt.budget = b;
    pt.accuracy = report.accuracy;
    pt.mean_matches = sets.empty() ? 0.0
                                   : static_cast<double>(report.total_matches) /
                                         static_cast<double>(sets.size());
    curve.push_back(pt);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Reasoning patterns

enum class PatternGroup { kTransition, kReflection, kComparison, kBreakdown };

inline constexpr std::array<std::string_view, 7> kTransitionKeywords = {
    "alternatively",   "think differently", "another way",  "another approach",
    "another method",  "another solution",  "another point"};
inline constexpr std::array<std::string_view, 8> kReflectionKeywords = {
    "wait",        "verify",       "make sure",   "hold on",
    "think again", "let me check", "seems right", "seems incorrect"};
inline constexpr std::array<std::string_view, 5> kComparisonKeywords = {
    "more", "compared to", "comparison", "between the two", "similarly"};
inline constexpr std::array<std::string_view, 2> kBreakdownKeywords = {"break down",
                                                                       "break this down"};

struct PatternReport {
  double transition = 0.0;
  double reflection = 0.0;
  double comparison = 0.0;
  double breakdown = 0.0;
  std::size_t samples = 0;
};

namespace detail {

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

template <std::size_t N>
bool contains_any(std::string_view lowered, const std::array<std::string_view, N>& keywords) {
  return std::any_of(keywords.begin(), keywords.end(),
                     [&](std::string_view k) { return lowered.find(k) != std::string_view::npos; });
}

}  // namespace detail

/// Case-insensitive substring match of each group's keywords against the
/// thinking segment of every output.
inline PatternReport analyze_patterns(std::span<const std::string> outputs,
                                      std::string_view terminator = kDefaultThinkingTerminator) {
  PatternReport report;
  report.samples = outputs.size();
  if (outputs.empty()) return report;
  std::size_t hits[4] = {0, 0, 0, 0};
  for (const auto& text : outputs) {
    auto lowered = detail::ascii_lower(split_thinking(text, terminator).first);
    hits[0] += detail::contains_any(lowered, kTransitionKeywords);
    hits[1] += detail::contains_any(lowered, kReflectionKeywords);
    hits[2] += detail::contains_any(lowered, kComparisonKeywords);
    hits[3] += detail::contains_any(lowered, kBreakdownKeywords);
  }
  double n = static_cast<double>(outputs.size());
  report.transition = hits[0] / n;
  report.reflection = hits[1] / n;
  report.comparison = hits[2] / n;
  report.breakdown = hits[3] / n;
  return report;
}

// ---------------------------------------------------------------------------
// Post-thinking lengths

struct PostLength {
  std::size_t words = 0;
  std::size_t chars = 0;
};

struct PostLengthReport {
  std::vector<PostLength> lengths;
  /// Bucket lower bound (in words) -> count.
  std::map<std::size_t, std::size_t> word_histogram;
  std::vector<std::size_t> flagged;
  std::size_t threshold_words = 100;
  std::size_t max_words = 0;
  double mean_words = 0.0;
};

inline std::size_t count_words(std::string_view s) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : s) {
    bool space = detail::is_space(c);
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

inline std::size_t count_utf8_chars(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

/// Word and character counts of the segment after the thinking terminator.
/// Words approximate model tokens; exact tokenization is out of scope.
inline PostLengthReport post_thinking_stats(std::span<const std::string> outputs,
                                            std::string_view terminator = kDefaultThinkingTerminator,
                                            std::size_t threshold_words = 100,
                                            std::size_t bucket_width = 10) {
  if (bucket_width == 0) throw Error(ErrorCode::kInvalidArgument, "bucket width must be positive");
  PostLengthReport report;
  report.threshold_words = threshold_words;
  std::size_t total = 0;
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    auto post = split_thinking(outputs[k], terminator).second;
    PostLength len{count_words(post), count_utf8_chars(post)};
    report.lengths.push_back(len);
    ++report.word_histogram[(len.words / bucket_width) * bucket_width];
    if (len.words > threshold_words) report.flagged.push_back(k);
    report.max_words = std::max(report.max_words, len.words);
    total += len.words;
  }
  if (!outputs.empty()) report.mean_words = static_cast<double>(total) / outputs.size();
  return report;
}

}  // namespace rrm

#endif  // RRM_EVAL_HPP
