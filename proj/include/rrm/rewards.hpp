#ifndef RRM_REWARDS_HPP
#define RRM_REWARDS_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "rrm/core.hpp"
#include "rrm/judge.hpp"
#include "rrm/rating.hpp"

namespace rrm {

enum class RewardNormalization { kRaw, kZScore };

struct GroupRewardSpec {
  std::size_t group_size = 8;
  std::size_t competitors_per_response = 4;
  RewardNormalization normalize = RewardNormalization::kRaw;
  RatingConfig rating;
};

struct GroupRewards {
  std::vector<double> rewards;
  RatingTable table;
  std::vector<MatchRecord> matches;
};

/// Within-group z-scores (population stdev). A constant group has no
/// signal and maps to all zeros.
inline std::vector<double> zscore(const std::vector<double>& values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  double n = static_cast<double>(values.size());
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  double sd = std::sqrt(var / n);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sd;
  return out;
}

/// Rewards for one RL group: Sampled(m) schedule, voted matches, rating fit.
inline GroupRewards group_rewards(const CandidateSet& set, PairwiseJudge& judge,
                                  const GroupRewardSpec& spec, const JudgeSpec& judge_spec,
                                  std::uint64_t seed) {
  validate(set);
  if (set.size() != spec.group_size)
    throw Error(ErrorCode::kInvalidArgument,
                "group '" + set.query.id + "' has " + std::to_string(set.size()) +
                    " responses, expected " + std::to_string(spec.group_size));
  if (spec.group_size < 2) throw Error(ErrorCode::kInvalidArgument, "group size must be >= 2");
  if (spec.competitors_per_response + 1 > spec.group_size || spec.competitors_per_response < 1)
    throw Error(ErrorCode::kInvalidM, "competitors per response must be in [1, group_size - 1]");

  auto schedule = schedule_matches(set.size(), ScheduleMode::sampled(spec.competitors_per_response),
                                   mix_key({seed, fnv1a64(set.query.id)}));
  GroupRewards out;
  out.matches = judge_schedule(set, judge, schedule, judge_spec, seed);
  out.table = fit_ratings(out.matches, set.size(), spec.rating);
  out.rewards = spec.normalize == RewardNormalization::kZScore ? zscore(out.table.ratings)
                                                               : out.table.ratings;
  return out;
}

/// +1 when the judge picked the gold side, -1 otherwise.
inline int correctness_reward(const Verdict& verdict, Side gold_side) {
  return verdict.winner == gold_side ? 1 : -1;
}

}  // namespace rrm

#endif  // RRM_REWARDS_HPP
