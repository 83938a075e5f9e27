#ifndef RRM_REMOTE_JUDGE_HPP
#define RRM_REMOTE_JUDGE_HPP

// Chat-completions judge backend.
//
// Wire shape: POST <endpoint>/chat/completions with
//   {model, messages:[{role, content}...], max_tokens, temperature, seed}
// and the answer read from choices[0].message.content.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "rrm/core.hpp"
#include "rrm/judge.hpp"
#include "rrm/parallel.hpp"
#include "rrm/rng.hpp"

namespace rrm {

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Concurrent raw-output cache persisted as JSONL
/// {key_hash, raw_output, created_at}. Identical keys are last-write-wins.
class VerdictCache {
 public:
  struct Entry {
    std::string raw_output;
    std::string created_at;
  };

  std::optional<std::string> get(const std::string& key_hash) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key_hash);
    if (it == entries_.end()) return std::nullopt;
    return it->second.raw_output;
  }

  void put(const std::string& key_hash, std::string raw_output) {
    std::lock_guard lock(mu_);
    entries_[key_hash] = Entry{std::move(raw_output), utc_timestamp()};
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) return;
    std::string line;
    std::lock_guard lock(mu_);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("key_hash") || !j.contains("raw_output")) continue;
      entries_[j["key_hash"].get<std::string>()] =
          Entry{j["raw_output"].get<std::string>(), j.value("created_at", std::string())};
    }
  }

  void save(const std::string& path) const {
    std::lock_guard lock(mu_);
    std::map<std::string, const Entry*> sorted;
    for (const auto& [k, e] : entries_) sorted.emplace(k, &e);
    std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::kIo, "cannot write cache '" + tmp + "'");
      for (const auto& [k, e] : sorted) {
        nlohmann::ordered_json j;
        j["key_hash"] = k;
        j["raw_output"] = e->raw_output;
        j["created_at"] = e->created_at;
        out << j.dump() << '\n';
      }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
      throw Error(ErrorCode::kIo, "cannot move cache into place at '" + path + "'");
  }

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, Entry> entries_;
};

struct RemoteConfig {
  /// Base URL, e.g. "http://127.0.0.1:8000/v1"; "/chat/completions" is appended.
  std::string endpoint;
  std::string model;
  /// Name of the environment variable holding a bearer token; empty = no auth.
  std::string api_key_env;
  /// max_tokens for unbudgeted requests.
  int max_tokens = 8192;
  int timeout_seconds = 600;
  /// First delay before retrying a 5xx/429/connection failure; doubles per attempt.
  int retry_backoff_ms = 250;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct Completion {
  std::string content;
  std::string finish_reason;
};

class RemoteJudge final : public PairwiseJudge {
 public:
  RemoteJudge(RemoteConfig config, JudgeSpec spec, PromptTemplate tmpl = default_template(),
              std::shared_ptr<VerdictCache> cache = nullptr)
      : config_(std::move(config)),
        spec_(std::move(spec)),
        template_(std::move(tmpl)),
        cache_(std::move(cache)),
        gate_(static_cast<std::size_t>(spec_.max_concurrency)) {
    validate(spec_);
    validate(template_);
    if (config_.endpoint.empty())
      throw Error(ErrorCode::kConfig, "remote judge needs an endpoint");
    auto scheme = config_.endpoint.find("://");
    if (scheme == std::string::npos)
      throw Error(ErrorCode::kConfig, "endpoint must include a scheme: '" + config_.endpoint + "'");
    auto slash = config_.endpoint.find('/', scheme + 3);
    host_ = config_.endpoint.substr(0, slash);
    path_prefix_ = slash == std::string::npos ? "" : config_.endpoint.substr(slash);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    if (spec_.cache_enabled && !cache_) cache_ = std::make_shared<VerdictCache>();
  }

  Verdict judge(const CandidateSet& set, const SampleRequest& request) override {
    if (request.index_a == request.index_b)
      throw Error(ErrorCode::kInvalidArgument, "a match needs two distinct candidates");
    std::string prompt = render_pairwise_prompt(template_, set.query, set.candidates[request.first()],
                                                set.candidates[request.second()]);
    if (spec_.thinking_budget) return judge_with_budget(prompt, request);

    std::string last_raw;
    for (int attempt = 0; attempt <= spec_.retry_limit; ++attempt) {
      auto sample = sample_index(request, attempt);
      last_raw = complete({{"user", prompt}}, config_.max_tokens, sample).content;
      try {
        return parse_verdict(last_raw, spec_.thinking_terminator);
      } catch (const NoVerdictError&) {
      }
    }
    throw NoVerdictError("no parseable verdict after " + std::to_string(spec_.retry_limit + 1) +
                             " samples",
                         last_raw);
  }

  /// Thinking capped at B tokens. If the terminator does not appear (or no
  /// verdict follows it), the truncated thinking is sent back with a forced
  /// terminator and the answer phase gets post_budget tokens.
  Verdict judge_with_budget(const std::string& prompt, const SampleRequest& request) {
    const auto& term = spec_.thinking_terminator;
    auto sample = sample_index(request, 0);
    Completion phase1 = complete({{"user", prompt}}, *spec_.thinking_budget, sample);
    if (phase1.content.find(term) != std::string::npos) {
      try {
        return parse_verdict(phase1.content, term);
      } catch (const NoVerdictError&) {
      }
    }
    std::string thinking = split_thinking(phase1.content, term).first;
    std::string prefill = thinking + "\n" + term + "\n\n";
    Completion phase2 =
        complete({{"user", prompt}, {"assistant", prefill}}, spec_.post_budget, sample);
    try {
      Verdict v = parse_verdict(phase2.content, term);
      v.raw_output = thinking + term + phase2.content;
      v.thinking = thinking;
      v.post = phase2.content;
      return v;
    } catch (const NoVerdictError&) {
      throw Error(ErrorCode::kBudgetExceeded,
                  "no verdict within the " + std::to_string(spec_.post_budget) +
                      "-token answer phase after a " + std::to_string(*spec_.thinking_budget) +
                      "-token thinking budget");
    }
  }

  std::uint64_t network_requests() const { return requests_.load(); }
  std::size_t peak_in_flight() const { return gate_.peak(); }
  const std::shared_ptr<VerdictCache>& cache() const { return cache_; }

 private:
  std::uint64_t sample_index(const SampleRequest& r, int attempt) const {
    return static_cast<std::uint64_t>(r.vote_index) *
               static_cast<std::uint64_t>(spec_.retry_limit + 1) +
           static_cast<std::uint64_t>(attempt);
  }

  Completion complete(const std::vector<ChatMessage>& messages, int max_tokens,
                      std::uint64_t sample) {
    nlohmann::ordered_json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    body["max_tokens"] = max_tokens;
    body["temperature"] = spec_.temperature;
    body["seed"] = mix_key({fnv1a64(body["messages"].dump()), sample}) >> 33;
    std::string payload = body.dump();

    std::string key;
    if (cache_ && spec_.cache_enabled) {
      char temp[32];
      std::snprintf(temp, sizeof(temp), "%.6g", spec_.temperature);
      key = hex64(fnv1a64(config_.endpoint + '\x1f' + config_.model + '\x1f' +
                          hex64(fnv1a64(body["messages"].dump())) + '\x1f' + temp + '\x1f' +
                          std::to_string(sample) + '\x1f' + std::to_string(max_tokens)));
      if (auto hit = cache_->get(key)) return Completion{*hit, "cached"};
    }

    Completion result = post_with_retries(payload);
    if (!key.empty()) cache_->put(key, result.content);
    return result;
  }

  Completion post_with_retries(const std::string& payload) {
    std::string last_error;
    for (int attempt = 0; attempt <= spec_.retry_limit; ++attempt) {
      if (attempt > 0 && config_.retry_backoff_ms > 0) {
        auto delay = std::chrono::milliseconds(config_.retry_backoff_ms) * (1 << std::min(attempt - 1, 6));
        std::this_thread::sleep_for(delay);
      }
      PermitGate::Permit permit(gate_);
      requests_.fetch_add(1);
      httplib::Client client(host_);
      client.set_connection_timeout(30);
      client.set_read_timeout(config_.timeout_seconds);
      client.set_write_timeout(60);
      httplib::Headers headers;
      if (!config_.api_key_env.empty()) {
        if (const char* token = std::getenv(config_.api_key_env.c_str()))
          headers.emplace("Authorization", std::string("Bearer ") + token);
      }
      auto res = client.Post(path_prefix_ + "/chat/completions", headers, payload,
                             "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500 || res->status == 429) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status >= 400) {
        throw Error(ErrorCode::kTransport,
                    "HTTP " + std::to_string(res->status) + " from " + host_ + ": " + res->body);
      }
      auto j = nlohmann::json::parse(res->body, nullptr, false);
      try {
        if (j.is_discarded()) throw std::runtime_error("response is not JSON");
        const auto& choice = j.at("choices").at(0);
        Completion c;
        c.content = choice.at("message").at("content").get<std::string>();
        if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
          c.finish_reason = choice["finish_reason"].get<std::string>();
        return c;
      } catch (const std::exception& e) {
        last_error = std::string("malformed completion: ") + e.what();
      }
    }
    throw Error(ErrorCode::kTransport, host_ + path_prefix_ + "/chat/completions: " + last_error +
                                           " (after " + std::to_string(spec_.retry_limit + 1) +
                                           " attempts)");
  }

  RemoteConfig config_;
  JudgeSpec spec_;
  PromptTemplate template_;
  std::shared_ptr<VerdictCache> cache_;
  PermitGate gate_;
  std::string host_;
  std::string path_prefix_;
  std::atomic<std::uint64_t> requests_{0};
};

}  // namespace rrm

#endif  // RRM_REMOTE_JUDGE_HPP
