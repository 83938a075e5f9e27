#ifndef RRM_IO_HPP
#define RRM_IO_HPP

// JSON/JSONL formats: dataset readers, artifact serializers, atomic writes.
//
//   preference pairs   {id, query, chosen, rejected, subset?}
//   candidate pools    {id, query, candidates:[{text, correct?}], subset?}
//   bracket            {query_id, seed, rounds:[[{a, b, order, winner, votes}]],
//                       byes, winner, total_matches}
//   rating table       {query_id, ratings, wins, losses, lambda, converged}
//   reward batch line  {query_id, rewards, ratings, matches}

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rrm/core.hpp"
#include "rrm/eval.hpp"
#include "rrm/rating.hpp"
#include "rrm/rewards.hpp"
#include "rrm/tournament.hpp"

namespace rrm {

using ojson = nlohmann::ordered_json;

namespace detail {

template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kIo, path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<std::string>();
}

}  // namespace detail

inline std::vector<PreferencePair> read_preference_pairs(const std::string& path) {
  std::vector<PreferencePair> pairs;
  detail::for_each_jsonl(path, [&](const nlohmann::json& j) {
    PreferencePair p;
    p.id = j.at("id").is_string() ? j["id"].get<std::string>() : j["id"].dump();
    p.query = Query{p.id, j.at("query").get<std::string>(), detail::optional_string(j, "subset")};
    p.chosen = j.at("chosen").get<std::string>();
    p.rejected = j.at("rejected").get<std::string>();
    p.subset = p.query.subset;
    if (p.query.text.empty()) throw Error(ErrorCode::kInvalidArgument, "pair '" + p.id + "' has empty query");
    if (p.chosen == p.rejected)
      throw Error(ErrorCode::kInvalidArgument, "pair '" + p.id + "' has identical chosen/rejected");
    pairs.push_back(std::move(p));
  });
  return pairs;
}

inline std::vector<CandidateSet> read_candidate_pools(const std::string& path) {
  std::vector<CandidateSet> sets;
  detail::for_each_jsonl(path, [&](const nlohmann::json& j) {
    CandidateSet s;
    s.query.id = j.at("id").is_string() ? j["id"].get<std::string>() : j["id"].dump();
    s.query.text = j.at("query").get<std::string>();
    s.query.subset = detail::optional_string(j, "subset");
    std::vector<bool> correct;
    std::size_t labeled = 0;
    for (const auto& c : j.at("candidates")) {
      s.candidates.push_back(c.at("text").get<std::string>());
      bool has = c.contains("correct") && !c["correct"].is_null();
      labeled += has ? 1 : 0;
      correct.push_back(has && c["correct"].get<bool>());
    }
    if (labeled != 0 && labeled != s.candidates.size())
      throw Error(ErrorCode::kInvalidArgument,
                  "pool '" + s.query.id + "' labels only some candidates as correct/incorrect");
    if (labeled != 0) s.gold_correct = std::move(correct);
    validate(s);
    sets.push_back(std::move(s));
  });
  return sets;
}

inline ojson to_json(const Bracket& b) {
  ojson j;
  j["query_id"] = b.query_id;
  j["seed"] = b.seed;
  j["rounds"] = ojson::array();
  for (const auto& round : b.rounds) {
    ojson r = ojson::array();
    for (const auto& m : round) {
      ojson mj;
      mj["a"] = m.index_a;
      mj["b"] = m.index_b;
      mj["order"] = to_string(m.presented_order);
      mj["winner"] = m.winner_index();
      mj["votes"] = {m.verdict.votes_first, m.verdict.votes_second};
      r.push_back(std::move(mj));
    }
    j["rounds"].push_back(std::move(r));
  }
  j["byes"] = ojson::array();
  for (const auto& bye : b.byes) j["byes"].push_back({{"round", bye.round}, {"candidate", bye.candidate}});
  j["winner"] = b.winner;
  j["total_matches"] = b.total_matches;
  return j;
}

inline ojson to_json(const RatingTable& t, const std::string& query_id) {
  ojson j;
  j["query_id"] = query_id;
  j["ratings"] = t.ratings;
  j["wins"] = t.wins;
  j["losses"] = t.losses;
  j["lambda"] = t.lambda;
  j["converged"] = t.converged;
  return j;
}

inline ojson to_json(const GroupRewards& g, const std::string& query_id) {
  ojson j;
  j["query_id"] = query_id;
  j["rewards"] = g.rewards;
  j["ratings"] = g.table.ratings;
  j["matches"] = g.matches.size();
  return j;
}

inline ojson to_json(const MatchRecord& m) {
  ojson j;
  j["a"] = m.index_a;
  j["b"] = m.index_b;
  j["order"] = to_string(m.presented_order);
  j["winner"] = m.winner_index();
  j["votes"] = {m.verdict.votes_first, m.verdict.votes_second};
  return j;
}

inline ojson to_json(const PatternReport& r) {
  ojson j;
  j["samples"] = r.samples;
  j["transition"] = r.transition;
  j["reflection"] = r.reflection;
  j["comparison"] = r.comparison;
  j["breakdown"] = r.breakdown;
  return j;
}

inline ojson to_json(const PostLengthReport& r) {
  ojson j;
  j["length_unit"] = "whitespace words (approximation of model tokens)";
  j["threshold_words"] = r.threshold_words;
  j["max_words"] = r.max_words;
  j["mean_words"] = r.mean_words;
  j["histogram"] = ojson::array();
  for (const auto& [bucket, count] : r.word_histogram)
    j["histogram"].push_back({{"min_words", bucket}, {"count", count}});
  j["flagged"] = r.flagged;
  j["lengths"] = ojson::array();
  for (const auto& l : r.lengths) j["lengths"].push_back({{"words", l.words}, {"chars", l.chars}});
  return j;
}

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written artifact.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw Error(ErrorCode::kIo, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot move '" + tmp.string() + "' into place: " + ec.message());
}

inline std::vector<std::string> read_output_texts(const std::string& path) {
  std::vector<std::string> texts;
  detail::for_each_jsonl(path, [&](const nlohmann::json& j) {
    for (const char* key : {"raw_output", "output", "text"}) {
      if (j.contains(key) && j[key].is_string()) {
        texts.push_back(j[key].get<std::string>());
        return;
      }
    }
    throw Error(ErrorCode::kInvalidArgument, "record has no raw_output/output/text field");
  });
  return texts;
}

}  // namespace rrm

#endif  // RRM_IO_HPP
