#include <gtest/gtest.h>

#include <algorithm>

#include "rrm/eval.hpp"
#include "rrm/io.hpp"
#include "support.hpp"

namespace rrm {
namespace {

using testing::fixture;
using testing::FirstPositionJudge;
using testing::make_pool;

std::vector<PreferencePair> synthetic_pairs(std::size_t count) {
  std::vector<PreferencePair> pairs;
  for (std::size_t k = 0; k < count; ++k) {
    PreferencePair p;
    p.id = "s" + std::to_string(k);
    p.query = Query{p.id, "query " + std::to_string(k), std::nullopt};
    p.chosen = "good " + std::to_string(k);
    p.rejected = "bad " + std::to_string(k);
    p.subset = k % 3 == 0 ? std::optional<std::string>("Reasoning") : std::nullopt;
    pairs.push_back(p);
  }
  return pairs;
}

TEST(PairwiseAccuracy, ScriptedFixtureIsSeventyPercent) {
  auto pairs = read_preference_pairs(fixture("pairs10.jsonl"));
  ScriptedJudge judge(read_ledger(fixture("pairs10_ledger.jsonl")));
  for (auto policy : {OrderPolicy::kSingleRandom, OrderPolicy::kBothOrders}) {
    for (std::uint64_t seed : {0u, 1u, 99u}) {
      PairwiseOptions options;
      options.order_policy = policy;
      options.seed = seed;
      auto report = pairwise_accuracy(pairs, judge, JudgeSpec{}, options);
      EXPECT_EQ(report.accuracy, 0.7);
      EXPECT_EQ(report.agreement, report.accuracy);
      EXPECT_EQ(report.unresolved, 0u);
      EXPECT_EQ(report.pairs, 10u);
      EXPECT_EQ(report.judgments, policy == OrderPolicy::kBothOrders ? 20u : 10u);
      EXPECT_GE(report.macro_f1, 0.0);
      EXPECT_LE(report.macro_f1, 1.0);
    }
  }
}

TEST(PairwiseAccuracy, PerSubsetBreakdown) {
  auto pairs = read_preference_pairs(fixture("pairs10.jsonl"));
  ScriptedJudge judge(read_ledger(fixture("pairs10_ledger.jsonl")));
  auto report = pairwise_accuracy(pairs, judge, JudgeSpec{});
  std::size_t judged = 0;
  double weighted = 0.0;
  for (const auto& [name, sub] : report.per_subset) {
    judged += sub.judgments;
    weighted += sub.accuracy * static_cast<double>(sub.judgments);
  }
  EXPECT_EQ(judged, 10u);
  EXPECT_NEAR(weighted / judged, 0.7, 1e-12);
}

TEST(PairwiseAccuracy, AlwaysFirstIsCoinFlip) {
  auto pairs = synthetic_pairs(10000);
  FirstPositionJudge judge;
  JudgeSpec spec;
  PairwiseOptions options;
  options.seed = 2024;
  auto report = pairwise_accuracy(pairs, judge, spec, options);
  EXPECT_NEAR(report.accuracy, 0.5, 0.02);
  // Always predicting position one: F1 is 2/3 for that class, 0 for the other.
  EXPECT_NEAR(report.macro_f1, (2.0 * report.accuracy / (1.0 + report.accuracy)) / 2.0, 1e-12);
}

TEST(PairwiseAccuracy, BothOrdersIgnoresStorageOrder) {
  auto pairs = synthetic_pairs(300);
  OracleJudge oracle({0.3, 5});
  JudgeSpec spec;
  spec.votes_per_match = 3;
  PairwiseOptions a;
  a.order_policy = OrderPolicy::kBothOrders;
  a.seed = 7;
  PairwiseOptions b = a;
  b.chosen_first_in_storage = false;
  auto ra = pairwise_accuracy(pairs, oracle, spec, a);
  auto rb = pairwise_accuracy(pairs, oracle, spec, b);
  EXPECT_EQ(ra.accuracy, rb.accuracy);
  EXPECT_EQ(ra.macro_f1, rb.macro_f1);
  for (std::size_t k = 0; k < pairs.size(); ++k) EXPECT_EQ(ra.outcomes[k].chosen_won, rb.outcomes[k].chosen_won);

  FirstPositionJudge biased;
  auto fa = pairwise_accuracy(pairs, biased, JudgeSpec{}, a);
  auto fb = pairwise_accuracy(pairs, biased, JudgeSpec{}, b);
  EXPECT_EQ(fa.accuracy, 0.5);
  EXPECT_EQ(fb.accuracy, 0.5);
}

TEST(PairwiseAccuracy, UnresolvedCountAsWrong) {
  auto pairs = synthetic_pairs(4);
  ScriptedJudge judge;
  // Under AB: s0 and s3 right, s1 wrong, s2 never parseable. Under BA every
  // resolved answer names the rejected response.
  for (const auto& [id, raw] : std::vector<std::pair<std::string, std::string>>{
           {"s0", "\\boxed{Assistant 1}"}, {"s1", "\\boxed{Assistant 2}"}, {"s3", "\\boxed{Assistant 1}"}}) {
    judge.add({id, 0, 1, Order::kAB, 0, raw});
  }
  for (std::uint32_t v = 0; v < 3; ++v) judge.add({"s2", 0, 1, Order::kAB, v, "undecided"});
  JudgeSpec spec;
  spec.swap_orders = false;
  PairwiseOptions options;
  options.order_policy = OrderPolicy::kBothOrders;
  for (const auto& id : {"s0", "s1", "s3"}) judge.add({id, 0, 1, Order::kBA, 0, "\\boxed{Assistant 1}"});
  for (std::uint32_t v = 0; v < 3; ++v) judge.add({"s2", 0, 1, Order::kBA, v, "undecided"});
  auto report = pairwise_accuracy(pairs, judge, spec, options);
  EXPECT_EQ(report.judgments, 8u);
  EXPECT_EQ(report.unresolved, 2u);
  EXPECT_EQ(report.correct, 2u);
  EXPECT_EQ(report.accuracy, 0.25);
  EXPECT_EQ(report.outcomes[2].error_code, ErrorCode::kNoVerdict);
}

TEST(PairwiseAccuracy, HardErrorsPropagate) {
  auto pairs = synthetic_pairs(3);
  ScriptedJudge empty;
  EXPECT_THROW(pairwise_accuracy(pairs, empty, JudgeSpec{}), Error);
  EXPECT_THROW(pairwise_accuracy({}, empty, JudgeSpec{}), Error);
}

TEST(PairwiseAccuracy, AcceptsSixteenVotes) {
  auto pairs = synthetic_pairs(20);
  OracleJudge oracle({0.1, 1});
  CountingJudge counter(oracle);
  JudgeSpec spec;
  spec.votes_per_match = 16;
  auto report = pairwise_accuracy(pairs, counter, spec);
  EXPECT_GE(counter.calls(), 16u * 20u);
  EXPECT_LE(counter.calls(), 17u * 20u);
  EXPECT_GE(report.accuracy, 0.9);
}

TEST(PairwiseAccuracy, DeterministicAcrossConcurrency) {
  auto pairs = synthetic_pairs(500);
  OracleJudge oracle({0.3, 9});
  JudgeSpec serial;
  serial.votes_per_match = 3;
  JudgeSpec threaded = serial;
  threaded.max_concurrency = 8;
  auto a = pairwise_accuracy(pairs, oracle, serial);
  auto b = pairwise_accuracy(pairs, oracle, threaded);
  EXPECT_EQ(a.accuracy, b.accuracy);
  for (std::size_t k = 0; k < pairs.size(); ++k) EXPECT_EQ(a.outcomes[k].chosen_won, b.outcomes[k].chosen_won);
}

TEST(BestOfN, NoiselessUpperBound) {
  auto sets = read_candidate_pools(fixture("pools8.jsonl"));
  std::vector<CandidateSet> with_empty = sets;
  with_empty.push_back(make_pool("none", 8, std::vector<bool>(8, false)));
  OracleJudge oracle({0.0, 0});
  for (auto strategy : {SelectionStrategy::knockout(), SelectionStrategy::elo_full(),
                        SelectionStrategy::elo_sampled(4)}) {
    auto report = best_of_n_eval(with_empty, oracle, JudgeSpec{}, strategy, 3);
    EXPECT_NEAR(report.accuracy, 6.0 / 7.0, 1e-12) << report.strategy;
  }
}

TEST(BestOfN, MatchCounts) {
  OracleJudge oracle({0.1, 0});
  CountingJudge counter(oracle);
  std::vector<CandidateSet> sets{make_pool("big", 32, std::vector<bool>(32, false))};
  (*sets[0].gold_correct)[5] = true;
  auto report = best_of_n_eval(sets, counter, JudgeSpec{}, SelectionStrategy::elo_full(), 0);
  EXPECT_EQ(report.total_matches, 496u);
  EXPECT_EQ(counter.calls(), 496u);
  counter.reset();
  report = best_of_n_eval(sets, counter, JudgeSpec{}, SelectionStrategy::knockout(), 0);
  EXPECT_EQ(report.total_matches, 31u);
}

TEST(BestOfN, SingletonsNeedNoJudge) {
  FirstPositionJudge judge;
  std::vector<CandidateSet> sets{make_pool("a", 1, {true}), make_pool("b", 1, {false}),
                                 make_pool("c", 1, {true}), make_pool("d", 1, {true})};
  auto report = best_of_n_eval(sets, judge, JudgeSpec{}, SelectionStrategy::elo_full(), 0);
  EXPECT_EQ(report.accuracy, 0.75);
  EXPECT_EQ(judge.calls.load(), 0);
}

TEST(BestOfN, RequiresLabels) {
  FirstPositionJudge judge;
  std::vector<CandidateSet> sets{CandidateSet{Query{"q", "t", {}}, {"a", "b"}, std::nullopt, std::nullopt}};
  try {
    best_of_n_eval(sets, judge, JudgeSpec{}, SelectionStrategy::knockout(), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoGold);
  }
}

TEST(BestOfN, EloFullAtLeastKnockoutUnderNoise) {
  OracleJudge oracle({0.15, 31});
  auto sets = testing::single_correct_pools(2000, 8, 5);
  auto knockout = best_of_n_eval(sets, oracle, JudgeSpec{}, SelectionStrategy::knockout(), 1);
  auto elo = best_of_n_eval(sets, oracle, JudgeSpec{}, SelectionStrategy::elo_full(), 1);
  EXPECT_GE(elo.accuracy, knockout.accuracy - 0.01);
  EXPECT_NEAR(knockout.accuracy, 0.85 * 0.85 * 0.85, 0.03);
}

TEST(BudgetCurve, EndpointsAndMonotonicity) {
  OracleJudge oracle({0.2, 17});
  auto sets = testing::single_correct_pools(2000, 8, 11);
  std::vector<std::size_t> budgets{7, 12, 16, 20, 24, 28};
  auto curve = comparison_budget_curve(sets, oracle, JudgeSpec{}, budgets, 2);
  ASSERT_EQ(curve.size(), budgets.size());
  EXPECT_DOUBLE_EQ(curve.front().mean_matches, 7.0);
  EXPECT_DOUBLE_EQ(curve.back().mean_matches, 28.0);
  for (std::size_t k = 1; k < curve.size(); ++k) EXPECT_GE(curve[k].accuracy, curve[k - 1].accuracy - 0.02);
  auto full = best_of_n_eval(sets, oracle, JudgeSpec{}, SelectionStrategy::elo_full(), 2);
  EXPECT_EQ(curve.back().accuracy, full.accuracy);

  std::vector<std::size_t> descending{10, 5};
  EXPECT_THROW(comparison_budget_curve(sets, oracle, JudgeSpec{}, descending, 0), Error);
}

TEST(Patterns, ReflectionExample) {
  std::vector<std::string> outputs{"Wait, let me check"};
  auto r = analyze_patterns(outputs);
  EXPECT_EQ(r.reflection, 1.0);
  EXPECT_EQ(r.transition, 0.0);
  EXPECT_EQ(r.comparison, 0.0);
  EXPECT_EQ(r.breakdown, 0.0);
  EXPECT_EQ(r.samples, 1u);
}

TEST(Patterns, EmptyInput) {
  auto r = analyze_patterns(std::vector<std::string>{});
  EXPECT_EQ(r.samples, 0u);
  EXPECT_EQ(r.transition + r.reflection + r.comparison + r.breakdown, 0.0);
}

TEST(Patterns, OnlyThinkingSegmentCounts) {
  std::vector<std::string> outputs{"plain reasoning</think>Wait, alternatively compare more"};
  auto r = analyze_patterns(outputs);
  EXPECT_EQ(r.reflection + r.transition + r.comparison, 0.0);
}

TEST(Patterns, HandLabeledFixture) {
  std::ifstream in(fixture("pattern_texts.jsonl"));
  std::vector<std::string> texts;
  double expected[4] = {0, 0, 0, 0};
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    texts.push_back(j["raw_output"].get<std::string>());
    expected[0] += j["transition"].get<int>();
    expected[1] += j["reflection"].get<int>();
    expected[2] += j["comparison"].get<int>();
    expected[3] += j["breakdown"].get<int>();
  }
  ASSERT_EQ(texts.size(), 10u);
  auto r = analyze_patterns(texts);
  EXPECT_EQ(r.transition, expected[0] / 10);
  EXPECT_EQ(r.reflection, expected[1] / 10);
  EXPECT_EQ(r.comparison, expected[2] / 10);
  EXPECT_EQ(r.breakdown, expected[3] / 10);
  EXPECT_EQ(r.transition, 0.4);
  EXPECT_EQ(r.reflection, 0.4);
  EXPECT_EQ(r.comparison, 0.4);
  EXPECT_EQ(r.breakdown, 0.2);

  std::reverse(texts.begin(), texts.end());
  auto reversed = analyze_patterns(texts);
  EXPECT_EQ(reversed.transition, r.transition);
  EXPECT_EQ(reversed.comparison, r.comparison);
}

TEST(PostLengths, Examples) {
  std::vector<std::string> outputs{"abc</think>one two three", "no terminator here"};
  auto r = post_thinking_stats(outputs);
  EXPECT_EQ(r.lengths[0].words, 3u);
  EXPECT_EQ(r.lengths[1].words, 0u);
  EXPECT_EQ(r.lengths[1].chars, 0u);
  EXPECT_EQ(count_utf8_chars("h\xC3\xA9llo"), 5u);
}

TEST(PostLengths, TranscriptFixture) {
  std::ifstream in(fixture("post_transcripts.jsonl"));
  std::vector<std::string> texts;
  std::vector<std::size_t> words, chars;
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    texts.push_back(j["raw_output"].get<std::string>());
    words.push_back(j["words"].get<std::size_t>());
    chars.push_back(j["chars"].get<std::size_t>());
  }
  ASSERT_EQ(texts.size(), 20u);
  auto r = post_thinking_stats(texts);
  for (std::size_t k = 0; k < texts.size(); ++k) {
    EXPECT_EQ(r.lengths[k].words, words[k]) << k;
    EXPECT_EQ(r.lengths[k].chars, chars[k]) << k;
  }
  std::map<std::size_t, std::size_t> expected{{0, 12}, {10, 2}, {20, 2}, {30, 1}, {100, 2}, {120, 1}};
  EXPECT_EQ(r.word_histogram, expected);
  EXPECT_EQ(r.flagged, (std::vector<std::size_t>{8, 10}));
  EXPECT_EQ(r.max_words, 120u);
}

TEST(Readers, RejectMalformedInput) {
  auto dir = std::filesystem::temp_directory_path();
  auto path = (dir / "rrm_bad_pools.jsonl").string();
  {
    std::ofstream out(path);
    out << R"({"id":"x","query":"q","candidates":[{"text":"a","correct":true},{"text":"b"}]})" << "\n";
  }
  EXPECT_THROW(read_candidate_pools(path), Error);
  {
    std::ofstream out(path);
    out << R"({"id":"x","query":"q","chosen":"same","rejected":"same"})" << "\n";
  }
  EXPECT_THROW(read_preference_pairs(path), Error);
  {
    std::ofstream out(path);
    out << "{not json\n";
  }
  try {
    read_preference_pairs(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
    EXPECT_NE(std::string(e.what()).find(":1:"), std::string::npos);
  }
  std::filesystem::remove(path);
  EXPECT_THROW(read_preference_pairs(path), Error);
}

}  // namespace
}  // namespace rrm
