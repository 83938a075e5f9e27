#ifndef RRM_TESTS_SUPPORT_HPP
#define RRM_TESTS_SUPPORT_HPP

// Shared test helpers: reference judges, synthetic pools, a local
// chat-completions stub server.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iterator>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "rrm/core.hpp"
#include "rrm/judge.hpp"
#include "rrm/rng.hpp"

namespace rrm::testing {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string fixture(const std::string& name) {
  return std::string(RRM_FIXTURE_DIR) + "/" + name;
}

/// Noiseless transitive judge: the candidate with the larger strength wins.
class TotalOrderJudge final : public PairwiseJudge {
 public:
  explicit TotalOrderJudge(std::vector<int> strength) : strength_(std::move(strength)) {}

  Verdict judge(const CandidateSet&, const SampleRequest& r) override {
    std::size_t winner = strength_[r.index_a] > strength_[r.index_b] ? r.index_a : r.index_b;
    Verdict v;
    v.winner = winner == r.first() ? Side::kFirst : Side::kSecond;
    v.votes_first = v.winner == Side::kFirst;
    v.votes_second = 1 - v.votes_first;
    return v;
  }

 private:
  std::vector<int> strength_;
};

/// Always answers "Assistant 1".
class FirstPositionJudge final : public PairwiseJudge {
 public:
  Verdict judge(const CandidateSet&, const SampleRequest&) override {
    calls.fetch_add(1);
    return parse_verdict("\\boxed{Assistant 1}");
  }
  std::atomic<int> calls{0};
};

/// Returns scripted presented-side answers in call order (single-threaded use).
class SequenceJudge final : public PairwiseJudge {
 public:
  explicit SequenceJudge(std::vector<std::string> outputs) : outputs_(std::move(outputs)) {}

  Verdict judge(const CandidateSet&, const SampleRequest& r) override {
    requests.push_back(r);
    return parse_verdict(outputs_.at(next_++));
  }

  std::vector<SampleRequest> requests;

 private:
  std::vector<std::string> outputs_;
  std::size_t next_ = 0;
};

inline CandidateSet make_pool(std::string id, std::size_t n, std::vector<bool> correct) {
  CandidateSet s;
  s.query = Query{std::move(id), "Pick the best answer.", std::nullopt};
  for (std::size_t c = 0; c < n; ++c) s.candidates.push_back("candidate " + std::to_string(c));
  s.gold_correct = std::move(correct);
  return s;
}

inline CandidateSet make_gold_pool(std::string id, std::size_t n, std::size_t gold) {
  CandidateSet s;
  s.query = Query{std::move(id), "Pick the best answer.", std::nullopt};
  for (std::size_t c = 0; c < n; ++c) s.candidates.push_back("candidate " + std::to_string(c));
  s.gold_index = gold;
  return s;
}

/// `count` pools of size n with exactly one correct candidate at a seeded position.
inline std::vector<CandidateSet> single_correct_pools(std::size_t count, std::size_t n,
                                                      std::uint64_t seed) {
  std::vector<CandidateSet> sets;
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<bool> correct(n, false);
    correct[rng.below(n)] = true;
    sets.push_back(make_pool("q" + std::to_string(k), n, correct));
  }
  return sets;
}

struct StubReply {
  int status = 200;
  std::string content;
};

/// Minimal chat-completions server on 127.0.0.1. Honors max_tokens by
/// truncating the reply to that many whitespace-separated words and
/// reporting finish_reason "length".
class StubChatServer {
 public:
  using Handler = std::function<StubReply(const nlohmann::json& request, int index)>;

  explicit StubChatServer(Handler handler, int delay_ms = 0)
      : handler_(std::move(handler)), delay_ms_(delay_ms) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      int now = in_flight_.fetch_add(1) + 1;
      int prev = peak_.load();
      while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
      }
      auto body = nlohmann::json::parse(req.body);
      int index;
      {
        std::lock_guard lock(mu_);
        index = static_cast<int>(requests_.size());
        requests_.push_back(body);
      }
      if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
      StubReply reply = handler_(body, index);
      in_flight_.fetch_sub(1);
      res.status = reply.status;
      if (reply.status != 200) {
        res.set_content("{\"error\":\"stub\"}", "application/json");
        return;
      }
      std::string finish = "stop";
      std::string content = reply.content;
      if (body.contains("max_tokens")) {
        auto limit = body["max_tokens"].get<std::size_t>();
        std::istringstream words(reply.content);
        std::vector<std::string> kept;
        std::string w;
        std::size_t total = 0;
        while (words >> w) {
          if (kept.size() < limit) kept.push_back(w);
          ++total;
        }
        if (total > limit) {
          finish = "length";
          content.clear();
          for (std::size_t k = 0; k < kept.size(); ++k) content += (k ? " " : "") + kept[k];
        }
      }
      nlohmann::json out;
      out["choices"] = nlohmann::json::array(
          {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}, {"finish_reason", finish}}});
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubChatServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::vector<nlohmann::json> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

  std::size_t request_count() const {
    std::lock_guard lock(mu_);
    return requests_.size();
  }

  int peak_in_flight() const { return peak_.load(); }

 private:
  Handler handler_;
  int delay_ms_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<nlohmann::json> requests_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
};

}  // namespace rrm::testing

#endif  // RRM_TESTS_SUPPORT_HPP
