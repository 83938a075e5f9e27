#ifndef RRM_CORE_HPP
#define RRM_CORE_HPP

// Domain types shared by every module: queries, candidate pools, verdicts,
// match records, the pairwise prompt template, and verdict/thinking parsing.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rrm {

enum class ErrorCode {
  kMissingPlaceholder,
  kNoVerdict,
  kNoGold,
  kMissingFixture,
  kTransport,
  kBudgetExceeded,
  kInvalidM,
  kDisconnected,
  kInvalidArgument,
  kIo,
  kConfig,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::kNoVerdict: return "NoVerdict";
    case ErrorCode::kNoGold: return "NoGold";
    case ErrorCode::kMissingFixture: return "MissingFixture";
    case ErrorCode::kTransport: return "TransportError";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kInvalidM: return "InvalidM";
    case ErrorCode::kDisconnected: return "Disconnected";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// NoVerdict carrying the unparseable output, so recorders can replay it.
class NoVerdictError : public Error {
 public:
  NoVerdictError(const std::string& message, std::string raw_output)
      : Error(ErrorCode::kNoVerdict, message), raw_output_(std::move(raw_output)) {}

  const std::string& raw_output() const noexcept { return raw_output_; }

 private:
  std::string raw_output_;
};

/// Which of the two presented responses won.
enum class Side { kFirst, kSecond };

inline Side other(Side s) { return s == Side::kFirst ? Side::kSecond : Side::kFirst; }

/// Presentation order of a canonical pair (a, b): AB shows a as
/// "Assistant 1", BA shows b as "Assistant 1".
enum class Order { kAB, kBA };

inline Order flip(Order o) { return o == Order::kAB ? Order::kBA : Order::kAB; }

inline const char* to_string(Side s) { return s == Side::kFirst ? "First" : "Second"; }
inline const char* to_string(Order o) { return o == Order::kAB ? "AB" : "BA"; }

inline Order parse_order(std::string_view s) {
  if (s == "AB") return Order::kAB;
  if (s == "BA") return Order::kBA;
  throw Error(ErrorCode::kInvalidArgument, "order must be AB or BA, got '" + std::string(s) + "'");
}

struct Query {
  std::string id;
  std::string text;
  std::optional<std::string> subset;
};

struct CandidateSet {
  Query query;
  std::vector<std::string> candidates;
  std::optional<std::size_t> gold_index;
  std::optional<std::vector<bool>> gold_correct;

  std::size_t size() const { return candidates.size(); }
  bool has_gold() const { return gold_index.has_value() || gold_correct.has_value(); }
  bool any_correct() const;
  bool is_correct(std::size_t i) const;
};

/// Throws kInvalidArgument when a set violates its invariants.
inline void validate(const CandidateSet& set) {
  if (set.query.id.empty()) throw Error(ErrorCode::kInvalidArgument, "query id is empty");
  if (set.query.text.empty())
    throw Error(ErrorCode::kInvalidArgument, "query '" + set.query.id + "' has empty text");
  if (set.candidates.empty())
    throw Error(ErrorCode::kInvalidArgument, "query '" + set.query.id + "' has no candidates");
  if (set.gold_index && *set.gold_index >= set.size())
    throw Error(ErrorCode::kInvalidArgument, "gold_index out of range for '" + set.query.id + "'");
  if (set.gold_correct && set.gold_correct->size() != set.size())
    throw Error(ErrorCode::kInvalidArgument,
                "gold_correct length differs from candidate count for '" + set.query.id + "'");
}

inline bool CandidateSet::is_correct(std::size_t i) const {
  if (gold_correct) return (*gold_correct)[i];
  if (gold_index) return *gold_index == i;
  throw Error(ErrorCode::kNoGold, "query '" + query.id + "' carries no gold labels");
}

inline bool CandidateSet::any_correct() const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (is_correct(i)) return true;
  }
  return false;
}

/// One judge decision. `winner` is expressed in the orientation the caller
/// asked about: presented order for raw samples, canonical (a, b) order for
/// voted verdicts.
struct Verdict {
  Side winner = Side::kFirst;
  std::string raw_output;
  std::string thinking;
  std::string post;
  int votes_first = 0;
  int votes_second = 0;
};

struct MatchRecord {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  Order presented_order = Order::kAB;
  Verdict verdict;
  std::size_t round = 0;
  std::vector<std::uint64_t> seed_path;

  std::size_t winner_index() const {
    return verdict.winner == Side::kFirst ? index_a : index_b;
  }
  std::size_t loser_index() const {
    return verdict.winner == Side::kFirst ? index_b : index_a;
  }
};

inline constexpr std::string_view kQueryPlaceholder = "{Query}";
inline constexpr std::string_view kResponse1Placeholder = "{Response 1}";
inline constexpr std::string_view kResponse2Placeholder = "{Response 2}";
inline constexpr std::string_view kDefaultThinkingTerminator = "</think>";

struct PromptTemplate {
  std::string system_preamble;
  std::string body;
};

namespace detail {

inline std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

}  // namespace detail

inline void validate(const PromptTemplate& tmpl) {
  for (auto placeholder : {kQueryPlaceholder, kResponse1Placeholder, kResponse2Placeholder}) {
    auto in_body = detail::count_occurrences(tmpl.body, placeholder);
    if (in_body != 1 || detail::count_occurrences(tmpl.system_preamble, placeholder) != 0) {
      throw Error(ErrorCode::kMissingPlaceholder,
                  "template body must contain " + std::string(placeholder) +
                      " exactly once (found " + std::to_string(in_body) + ")");
    }
  }
}

// Byte-identical copy of assets/pairwise_prompt.txt, split before "## Query".
inline constexpr std::string_view kDefaultPreamble = R"prompt(You are a helpful assistant in evaluating the quality of the responses for a given instruction. Your goal is to select the best response for the given instruction.

Select Assistant 1 or Assistant 2, that is better for the given instruction. The two responses are generated by two different AI assistants respectively.

Do NOT say both / neither are good.

Here are some rules of the evaluation:

(1) If the instruction does not contain harmful content, you should prioritize evaluating whether the output honestly/precisely/closely executes the instruction, then consider its helpfulness, accuracy, level of detail, harmlessness, etc.

(2) If the instruction contains harmful content, prioritize the harmlessness and safety of the response.

(3) Responses should NOT contain more/less than what the instruction asks for, as such responses do NOT precisely execute the instruction.

(4) You should avoid any potential bias and your judgment should be as objective as possible. Here are some potential sources of bias:

- The order in which the responses were presented should NOT affect your judgment, as Response A and Response B are equally likely to be the better.

- The length of the responses should NOT affect your judgement, as a longer response does not necessarily correspond to a better response. When making your decision, evaluate if the response length is appropriate for the given instruction.

(5) Your output should only consist of "\boxed{Assistant 1}" if assistant 1 is better, or "\boxed{Assistant 2}" if assistant 2 is better. Omit any other output.

)prompt";

inline constexpr std::string_view kDefaultBody = R"prompt(## Query


{Query}


## Assistant responses

### Assistant 1

{Response 1}

### Assistant 2

{Response 2}

## Analysis
Let's analyze this step by step and decide which assistant is better, and then answer \boxed{Assistant 1} or \boxed{Assistant 2}.)prompt";

inline PromptTemplate default_template() {
  return PromptTemplate{std::string(kDefaultPreamble), std::string(kDefaultBody)};
}

/// Substitutes the three placeholders in a single left-to-right pass, so
/// placeholder-like text inside the query or responses is never re-expanded.
inline std::string render_pairwise_prompt(const PromptTemplate& tmpl, const Query& query,
                                          std::string_view first, std::string_view second) {
  validate(tmpl);
  std::string out = tmpl.system_preamble;
  out.reserve(out.size() + tmpl.body.size() + query.text.size() + first.size() + second.size());
  std::string_view body = tmpl.body;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto next = body.find('{', pos);
    if (next == std::string_view::npos) {
      out.append(body.substr(pos));
      break;
    }
    out.append(body.substr(pos, next - pos));
    auto rest = body.substr(next);
    if (rest.starts_with(kQueryPlaceholder)) {
      out.append(query.text);
      pos = next + kQueryPlaceholder.size();
    } else if (rest.starts_with(kResponse1Placeholder)) {
      out.append(first);
      pos = next + kResponse1Placeholder.size();
    } else if (rest.starts_with(kResponse2Placeholder)) {
      out.append(second);
      pos = next + kResponse2Placeholder.size();
    } else {
      out.push_back('{');
      pos = next + 1;
    }
  }
  return out;
}

/// Splits at the first terminator; the terminator belongs to neither part.
inline std::pair<std::string, std::string> split_thinking(
    std::string_view raw_output, std::string_view terminator = kDefaultThinkingTerminator) {
  if (terminator.empty()) throw Error(ErrorCode::kInvalidArgument, "thinking terminator is empty");
  auto pos = raw_output.find(terminator);
  if (pos == std::string_view::npos) return {std::string(raw_output), std::string()};
  return {std::string(raw_output.substr(0, pos)),
          std::string(raw_output.substr(pos + terminator.size()))};
}

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::size_t skip_space(std::string_view s, std::size_t pos) {
  while (pos < s.size() && is_space(s[pos])) ++pos;
  return pos;
}

// Matches `\boxed{Assistant N}` at `pos`, tolerating whitespace around the
// braces and any run of whitespace between "Assistant" and the digit.
inline std::optional<Side> match_marker(std::string_view s, std::size_t pos) {
  constexpr std::string_view kBoxed = "\\boxed";
  constexpr std::string_view kAssistant = "Assistant";
  if (s.substr(pos, kBoxed.size()) != kBoxed) return std::nullopt;
  pos = skip_space(s, pos + kBoxed.size());
  if (pos >= s.size() || s[pos] != '{') return std::nullopt;
  pos = skip_space(s, pos + 1);
  if (s.substr(pos, kAssistant.size()) != kAssistant) return std::nullopt;
  pos += kAssistant.size();
  auto after_word = skip_space(s, pos);
  if (after_word == pos || after_word >= s.size()) return std::nullopt;
  char digit = s[after_word];
  if (digit != '1' && digit != '2') return std::nullopt;
  pos = skip_space(s, after_word + 1);
  if (pos >= s.size() || s[pos] != '}') return std::nullopt;
  return digit == '1' ? Side::kFirst : Side::kSecond;
}

}  // namespace detail

/// Last `\boxed{Assistant 1|2}` marker wins. Throws kNoVerdict when absent.
inline Verdict parse_verdict(std::string_view raw_output,
                             std::string_view terminator = kDefaultThinkingTerminator) {
  std::optional<Side> winner;
  for (auto pos = raw_output.find('\\'); pos != std::string_view::npos;
       pos = raw_output.find('\\', pos + 1)) {
    if (auto side = detail::match_marker(raw_output, pos)) winner = side;
  }
  if (!winner) {
    constexpr std::size_t kExcerpt = 80;
    std::string tail(raw_output.size() > kExcerpt ? raw_output.substr(raw_output.size() - kExcerpt)
                                                  : raw_output);
    throw NoVerdictError("no \\boxed{Assistant 1|2} marker in output ending '" + tail + "'",
                         std::string(raw_output));
  }
  Verdict v;
  v.winner = *winner;
  v.raw_output = std::string(raw_output);
  auto [thinking, post] = split_thinking(raw_output, terminator);
  v.thinking = std::move(thinking);
  v.post = std::move(post);
  v.votes_first = *winner == Side::kFirst ? 1 : 0;
  v.votes_second = *winner == Side::kSecond ? 1 : 0;
  return v;
}

}  // namespace rrm

#endif  // RRM_CORE_HPP
