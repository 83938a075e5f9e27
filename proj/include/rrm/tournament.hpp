#ifndef RRM_TOURNAMENT_HPP
#define RRM_TOURNAMENT_HPP

// Single-elimination (knockout) selection over a candidate pool.
//
// Each round shuffles the survivors with a seeded RNG, pairs them off, and
// gives one random bye when the count is odd. Pairings are fixed before any
// match is dispatched, so brackets are seed-deterministic regardless of how
// the matches inside a round are scheduled.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rrm/core.hpp"
#include "rrm/judge.hpp"
#include "rrm/parallel.hpp"
#include "rrm/rng.hpp"

namespace rrm {

struct Bye {
  std::size_t round = 0;
  std::size_t candidate = 0;
};

struct Bracket {
  std::string query_id;
  std::uint64_t seed = 0;
  std::size_t entrants = 0;
  std::vector<std::vector<MatchRecord>> rounds;
  std::vector<Bye> byes;
  std::size_t winner = 0;
  std::size_t total_matches = 0;

  /// Candidates still alive after `completed_rounds` rounds (0 = everyone).
  std::vector<std::size_t> pool_after(std::size_t completed_rounds) const {
    std::vector<std::size_t> pool;
    if (completed_rounds == 0) {
      for (std::size_t c = 0; c < entrants; ++c) pool.push_back(c);
      return pool;
    }
    if (completed_rounds > rounds.size()) completed_rounds = rounds.size();
    if (completed_rounds == 0) return pool_after(0);
    std::size_t r = completed_rounds - 1;
    for (const auto& m : rounds[r]) pool.push_back(m.winner_index());
    for (const auto& b : byes) {
      if (b.round == r) pool.push_back(b.candidate);
    }
    return pool;
  }
};

/// ceil(log2(n)) for n >= 1.
inline std::size_t knockout_round_count(std::size_t n) {
  std::size_t rounds = 0;
  for (std::size_t alive = n; alive > 1; alive = (alive + 1) / 2) ++rounds;
  return rounds;
}

inline Bracket run_knockout(const CandidateSet& set, PairwiseJudge& judge, const JudgeSpec& spec,
                            std::uint64_t seed) {
  validate(set);
  Bracket bracket;
  bracket.query_id = set.query.id;
  bracket.seed = seed;
  bracket.entrants = set.size();

  std::vector<std::size_t> alive(set.size());
  for (std::size_t c = 0; c < alive.size(); ++c) alive[c] = c;

  for (std::size_t round = 0; alive.size() > 1; ++round) {
    Rng rng(mix_key({seed, fnv1a64(set.query.id), round}));
    rng.shuffle(std::span<std::size_t>(alive));

    std::vector<MatchRecord> matches(alive.size() / 2);
    for (std::size_t m = 0; m < matches.size(); ++m) {
      matches[m].index_a = alive[2 * m];
      matches[m].index_b = alive[2 * m + 1];
      matches[m].presented_order = Order::kAB;
      matches[m].round = round;
      matches[m].seed_path = {seed, round, m};
    }
    std::vector<std::size_t> next;
    if (alive.size() % 2 == 1) {
      bracket.byes.push_back(Bye{round, alive.back()});
    }

    try {
      parallel_for(matches.size(), static_cast<std::size_t>(spec.max_concurrency),
                   [&](std::size_t m) {
                     auto& rec = matches[m];
                     rec.verdict = voted_judge(judge, set, rec.index_a, rec.index_b, spec,
                                               mix_key({seed, round, m}), rec.presented_order);
                   });
    } catch (const Error& e) {
      throw Error(e.code(), "knockout for '" + set.query.id + "' aborted in round " +
                                std::to_string(round) + " after " +
                                std::to_string(bracket.total_matches) +
                                " completed matches: " + e.what());
    }

    for (const auto& rec : matches) next.push_back(rec.winner_index());
    if (alive.size() % 2 == 1) next.push_back(alive.back());
    bracket.total_matches += matches.size();
    bracket.rounds.push_back(std::move(matches));
    alive = std::move(next);
  }
  bracket.winner = alive.front();
  return bracket;
}

struct RoundAccuracy {
  std::size_t round = 0;
  double fraction = 0.0;
};

/// Fraction of brackets whose surviving pool still holds a gold-correct
/// candidate, after each round. Pools that finish early keep their winner.
inline std::vector<RoundAccuracy> round_accuracy_curve(std::span<const CandidateSet> sets,
                                                       PairwiseJudge& judge,
                                                       const JudgeSpec& spec,
                                                       std::uint64_t seed) {
  std::vector<RoundAccuracy> curve;
  if (sets.empty()) return curve;
  std::size_t max_rounds = 0;
  for (const auto& s : sets) {
    if (!s.has_gold())
      throw Error(ErrorCode::kNoGold, "round accuracy needs gold labels for '" + s.query.id + "'");
    max_rounds = std::max(max_rounds, knockout_round_count(s.size()));
  }
  std::vector<std::size_t> alive_counts(max_rounds + 1, 0);
  for (const auto& s : sets) {
    Bracket b = run_knockout(s, judge, spec, seed);
    for (std::size_t r = 0; r <= max_rounds; ++r) {
      for (auto c : b.pool_after(r)) {
        if (s.is_correct(c)) {
          ++alive_counts[r];
          break;
        }
      }
    }
  }
  for (std::size_t r = 0; r <= max_rounds; ++r) {
    curve.push_back({r, static_cast<double>(alive_counts[r]) / static_cast<double>(sets.size())});
  }
  return curve;
}

}  // namespace rrm

#endif  // RRM_TOURNAMENT_HPP
