#ifndef RRM_RATING_HPP
#define RRM_RATING_HPP

// Round-robin scheduling and ELO-scale ratings from pairwise outcomes.
//
// Ratings come from a ridge-regularized Bradley-Terry maximum-likelihood
// fit (order-independent, unlike sequential K-factor updates), reported on
// the usual ELO scale: r_i = 1000 + 400/ln(10) * (theta_i - mean(theta)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rrm/core.hpp"
#include "rrm/judge.hpp"
#include "rrm/parallel.hpp"
#include "rrm/rng.hpp"

namespace rrm {

inline constexpr double kEloAnchor = 1000.0;
inline constexpr double kEloScale = 400.0;

struct ScheduleMode {
  enum class Kind { kFullRoundRobin, kSampled, kBudgeted };

  Kind kind = Kind::kFullRoundRobin;
  /// m for kSampled, total match budget for kBudgeted.
  std::size_t param = 0;

  static ScheduleMode full() { return {Kind::kFullRoundRobin, 0}; }
  static ScheduleMode sampled(std::size_t m) { return {Kind::kSampled, m}; }
  static ScheduleMode budgeted(std::size_t matches) { return {Kind::kBudgeted, matches}; }
};

struct ScheduledPair {
  std::size_t i = 0;
  std::size_t j = 0;
  Order order = Order::kAB;
};

struct MatchSchedule {
  std::vector<ScheduledPair> pairs;
  ScheduleMode mode;
};

inline std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }

namespace detail {

inline MatchSchedule budgeted_schedule(std::size_t n, std::size_t budget, Rng& rng) {
  // Greedy degree-balanced subset of distinct unordered pairs: repeatedly
  // take the pair whose endpoints have played least, ties broken by a
  // seeded shuffle.
  std::vector<std::pair<std::size_t, std::size_t>> all;
  all.reserve(pair_count(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) all.emplace_back(i, j);
  rng.shuffle(std::span(all));
  std::vector<std::size_t> degree(n, 0);
  std::vector<bool> used(all.size(), false);
  MatchSchedule out;
  out.mode = ScheduleMode::budgeted(budget);
  for (std::size_t taken = 0; taken < budget; ++taken) {
    std::size_t best = all.size();
    std::pair<std::size_t, std::size_t> best_cost{~std::size_t{0}, ~std::size_t{0}};
    for (std::size_t p = 0; p < all.size(); ++p) {
      if (used[p]) continue;
      auto [a, b] = all[p];
      std::pair cost{std::max(degree[a], degree[b]), degree[a] + degree[b]};
      if (cost < best_cost) {
        best_cost = cost;
        best = p;
      }
    }
    used[best] = true;
    auto [a, b] = all[best];
    ++degree[a];
    ++degree[b];
    out.pairs.push_back({a, b, Order::kAB});
  }
  for (auto& p : out.pairs) p.order = rng.coin() ? Order::kBA : Order::kAB;
  return out;
}

}  // namespace detail

/// FullRoundRobin: all n(n-1)/2 unordered pairs, random presentation order.
/// Sampled(m): for each candidate i, m distinct competitors drawn without
/// replacement (rows are independent, so an unordered pair may recur).
/// Budgeted(b): b distinct pairs with near-equal per-candidate degree;
/// b >= n(n-1)/2 yields the full round robin.
inline MatchSchedule schedule_matches(std::size_t n, ScheduleMode mode, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "scheduling needs at least 2 candidates");
  Rng rng(mix_key({seed, n, static_cast<std::uint64_t>(mode.kind), mode.param}));
  MatchSchedule out;
  out.mode = mode;
  switch (mode.kind) {
    case ScheduleMode::Kind::kFullRoundRobin:
      out.pairs.reserve(pair_count(n));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          out.pairs.push_back({i, j, rng.coin() ? Order::kBA : Order::kAB});
        }
      }
      return out;
    case ScheduleMode::Kind::kSampled: {
      auto m = mode.param;
      if (m < 1 || m > n - 1)
        throw Error(ErrorCode::kInvalidM, "competitors per candidate must be in [1, " +
                                              std::to_string(n - 1) + "], got " +
                                              std::to_string(m));
      out.pairs.reserve(m * n);
      std::vector<std::size_t> others;
      for (std::size_t i = 0; i < n; ++i) {
        others.clear();
        for (std::size_t c = 0; c < n; ++c) {
          if (c != i) others.push_back(c);
        }
        // Partial Fisher-Yates: the first m slots are a uniform m-subset.
        for (std::size_t k = 0; k < m; ++k) {
          auto pick = k + static_cast<std::size_t>(rng.below(others.size() - k));
          std::swap(others[k], others[pick]);
          out.pairs.push_back({i, others[k], rng.coin() ? Order::kBA : Order::kAB});
        }
      }
      return out;
    }
    case ScheduleMode::Kind::kBudgeted:
      if (mode.param < 1) throw Error(ErrorCode::kInvalidArgument, "match budget must be >= 1");
      if (mode.param >= pair_count(n)) {
        auto full = schedule_matches(n, ScheduleMode::full(), seed);
        full.mode = mode;
        return full;
      }
      return detail::budgeted_schedule(n, mode.param, rng);
  }
  return out;
}

/// Logistic win expectancy on the 400-point scale.
inline double expected_score(double rating_a, double rating_b) {
  return 1.0 / (1.0 + std::pow(10.0, (rating_b - rating_a) / kEloScale));
}

struct RatingConfig {
  double lambda = 0.01;
  double tolerance = 1e-8;
  int max_iterations = 10000;
};

struct RatingTable {
  std::vector<double> ratings;
  std::vector<int> wins;
  std::vector<int> losses;
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline bool connected(std::size_t n, const std::vector<std::vector<int>>& games) {
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    auto u = stack.back();
    stack.pop_back();
    for (std::size_t v = 0; v < n; ++v) {
      if (!seen[v] && games[u][v] > 0) {
        seen[v] = true;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  return reached == n;
}

inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Penalized log-likelihood: sum_ij beat_ij * log sigma(t_i - t_j) - lambda/2 |t|^2.
inline double objective(const std::vector<std::vector<int>>& beat, const std::vector<double>& t,
                        double lambda) {
  double f = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (beat[i][j] > 0) f -= beat[i][j] * softplus(t[j] - t[i]);
    }
    f -= 0.5 * lambda * t[i] * t[i];
  }
  return f;
}

// Solves a symmetric positive definite system in place (Cholesky).
inline bool cholesky_solve(std::vector<std::vector<double>> a, std::vector<double>& x) {
  const std::size_t n = x.size();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
    if (!(d > 0.0)) return false;
    a[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i][j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i][k] * a[j][k];
      a[i][j] = v / a[j][j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) x[i] -= a[i][k] * x[k];
    x[i] /= a[i][i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) x[i] -= a[k][i] * x[k];
    x[i] /= a[i][i];
  }
  return true;
}

}  // namespace detail

/// Ridge-regularized Bradley-Terry maximum-likelihood fit.
/// Outcomes are aggregated into integer win counts first, so the result
/// does not depend on record order.
inline RatingTable fit_ratings(std::span<const MatchRecord> records, std::size_t n,
                               const RatingConfig& config = {}) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "rating needs at least one candidate");
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "rating needs at least one match");
  if (config.lambda < 0.0) throw Error(ErrorCode::kConfig, "lambda must be >= 0");

  std::vector<std::vector<int>> beat(n, std::vector<int>(n, 0));
  RatingTable table;
  table.lambda = config.lambda;
  table.wins.assign(n, 0);
  table.losses.assign(n, 0);
  for (const auto& r : records) {
    if (r.index_a >= n || r.index_b >= n || r.index_a == r.index_b)
      throw Error(ErrorCode::kInvalidArgument, "match record references invalid candidates");
    auto w = r.winner_index();
    auto l = r.loser_index();
    ++beat[w][l];
    ++table.wins[w];
    ++table.losses[l];
  }
  std::vector<std::vector<int>> games(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) games[i][j] = beat[i][j] + beat[j][i];
  if (config.lambda == 0.0 && !detail::connected(n, games))
    throw Error(ErrorCode::kDisconnected,
                "match graph is disconnected; ratings are unidentifiable without regularization");

  // Damped Newton ascent. The objective is concave, strictly so for
  // lambda > 0; for lambda = 0 the all-ones direction is pinned by adding
  // 11^T/n to the curvature, which leaves centered steps unchanged.
  constexpr double kThetaBound = 50.0;
  const double pin = config.lambda == 0.0 ? 1.0 / static_cast<double>(n) : 0.0;
  std::vector<double> theta(n, 0.0), grad(n), trial(n);
  std::vector<std::vector<double>> hess(n, std::vector<double>(n));
  double f = detail::objective(beat, theta, config.lambda);
  for (table.iterations = 0; table.iterations < config.max_iterations;) {
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = table.wins[i] - config.lambda * theta[i];
      hess[i].assign(n, pin);
      hess[i][i] += config.lambda + 1e-12;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (games[i][j] == 0) continue;
        double p = detail::sigmoid(theta[i] - theta[j]);
        double w = games[i][j] * p * (1.0 - p);
        grad[i] -= games[i][j] * p;
        grad[j] -= games[i][j] * (1.0 - p);
        hess[i][i] += w;
        hess[j][j] += w;
        hess[i][j] -= w;
        hess[j][i] -= w;
      }
    }
    std::vector<double> step = grad;
    if (!detail::cholesky_solve(hess, step)) step = grad;

    double t = 1.0, f_trial = f;
    for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
      for (std::size_t i = 0; i < n; ++i)
        trial[i] = std::clamp(theta[i] + t * step[i], -kThetaBound, kThetaBound);
      f_trial = detail::objective(beat, trial, config.lambda);
      if (f_trial >= f) break;
    }
    double max_delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_delta = std::max(max_delta, std::abs(trial[i] - theta[i]));
    theta.swap(trial);
    f = f_trial;
    ++table.iterations;
    if (max_delta < config.tolerance) {
      table.converged = true;
      break;
    }
  }

  double mean = std::accumulate(theta.begin(), theta.end(), 0.0) / static_cast<double>(n);
  table.ratings.resize(n);
  const double scale = kEloScale / std::log(10.0);
  for (std::size_t i = 0; i < n; ++i) table.ratings[i] = kEloAnchor + scale * (theta[i] - mean);
  return table;
}

/// Judges every scheduled pair with voting; matches run concurrently up to
/// spec.max_concurrency and are returned in schedule order.
inline std::vector<MatchRecord> judge_schedule(const CandidateSet& set, PairwiseJudge& judge,
                                               const MatchSchedule& schedule,
                                               const JudgeSpec& spec, std::uint64_t seed) {
  std::vector<MatchRecord> records(schedule.pairs.size());
  parallel_for(records.size(), static_cast<std::size_t>(spec.max_concurrency), [&](std::size_t k) {
    const auto& p = schedule.pairs[k];
    auto& rec = records[k];
    rec.index_a = p.i;
    rec.index_b = p.j;
    rec.presented_order = p.order;
    rec.seed_path = {seed, k};
    rec.verdict = voted_judge(judge, set, p.i, p.j, spec, mix_key({seed, k}), p.order);
  });
  return records;
}

inline std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace rrm

#endif  // RRM_RATING_HPP
