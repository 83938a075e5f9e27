#ifndef RRM_TESTS_ORACLES_HPP
#define RRM_TESTS_ORACLES_HPP

// Independent reference computations the library is checked against.

#include <cmath>
#include <cstddef>
#include <vector>

#include "rrm/rating.hpp"

namespace rrm::testing {

// P(majority of k correct) for independent votes with accuracy p, k odd.
inline double binomial_majority(int k, double p) {
  double total = 0.0;
  for (int c = k / 2 + 1; c <= k; ++c) {
    double comb = std::tgamma(k + 1.0) / (std::tgamma(c + 1.0) * std::tgamma(k - c + 1.0));
    total += comb * std::pow(p, c) * std::pow(1.0 - p, k - c);
  }
  return total;
}

using WinMatrix = std::vector<std::vector<int>>;

inline std::vector<MatchRecord> records_from(const WinMatrix& w) {
  std::vector<MatchRecord> out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      for (int k = 0; k < w[i][j]; ++k) {
        MatchRecord r;
        // Alternate which side the winner is stored on.
        if (k % 2 == 0) {
          r.index_a = i;
          r.index_b = j;
          r.verdict.winner = Side::kFirst;
        } else {
          r.index_a = j;
          r.index_b = i;
          r.verdict.winner = Side::kSecond;
        }
        out.push_back(r);
      }
    }
  }
  return out;
}

// Penalized Bradley-Terry log-likelihood in log-strength space.
inline double penalized_loglik(const WinMatrix& w, const std::vector<double>& theta, double lambda) {
  double ll = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w[i][j] > 0) ll += w[i][j] * -std::log1p(std::exp(theta[j] - theta[i]));
    }
    ll -= 0.5 * lambda * theta[i] * theta[i];
  }
  return ll;
}

// Brute-force maximizer for three candidates: nested grid refinement over
// (theta0, theta1, theta2), each level a full 3-D grid around the incumbent.
inline std::vector<double> grid_search_elo(const WinMatrix& w, double lambda) {
  std::vector<double> best{0.0, 0.0, 0.0};
  double span = 6.0;
  for (int level = 0; level < 12; ++level) {
    const int steps = 24;
    auto center = best;
    double best_ll = penalized_loglik(w, best, lambda);
    for (int a = -steps; a <= steps; ++a) {
      for (int b = -steps; b <= steps; ++b) {
        for (int c = -steps; c <= steps; ++c) {
          std::vector<double> t{center[0] + span * a / steps, center[1] + span * b / steps,
                                center[2] + span * c / steps};
          double ll = penalized_loglik(w, t, lambda);
          if (ll > best_ll) {
            best_ll = ll;
            best = t;
          }
        }
      }
    }
    span /= 4.0;
  }
  double mean = (best[0] + best[1] + best[2]) / 3.0;
  std::vector<double> elo;
  for (double t : best) elo.push_back(1000.0 + 400.0 / std::log(10.0) * (t - mean));
  return elo;
}

}  // namespace rrm::testing

#endif  // RRM_TESTS_ORACLES_HPP
