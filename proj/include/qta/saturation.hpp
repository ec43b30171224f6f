#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qta/coding.hpp"
#include "qta/gateway.hpp"

namespace qta {

struct QuoteRef {
  std::string quote;
  std::string source_doc;
  bool operator==(const QuoteRef&) const = default;
  auto operator<=>(const QuoteRef&) const = default;
};

// quotes[i] belongs to members[i].
struct UniqueCode {
  std::string code_name;
  std::string description;
  std::vector<QuoteRef> quotes;
  std::vector<std::string> members;  // InitialCode refs
  std::vector<std::string> merge_rationales;

  static UniqueCode from(const InitialCode& code);
};

enum class DecisionStatus { proposed, accepted, rejected };
std::string_view to_string(DecisionStatus s);
DecisionStatus parse_decision_status(std::string_view s);

// One applied merge: `target` (the code under comparison) was folded into
// `matched` (the earlier code already in the running list). Codes are named
// by their first member ref. Self-merges inside one document carry round 0.
struct MergeDecision {
  std::string id;
  std::string target;
  std::string matched;
  bool verdict = true;
  std::optional<std::string> rationale;
  int round = 0;
  std::optional<GenerationParams> params_used;
  std::string target_name;
  std::string target_description;
  std::string matched_name;
  std::vector<std::string> moved_members;
  std::size_t moved_quotes = 0;
  DecisionStatus status = DecisionStatus::proposed;
};

struct SaturationReport {
  std::size_t total_codes = 0;
  std::size_t unique_codes = 0;
  double ratio = 1.0;
  int rounds = 0;
  std::vector<std::size_t> per_round_sizes;
};

// unique / total; throws std::invalid_argument unless 0 < unique <= total.
double saturation_ratio(std::size_t total, std::size_t unique);

// Judges whether the target conveys the same meaning as each candidate.
// Implementations must be safe to call from several threads.
class DuplicateJudge {
 public:
  virtual ~DuplicateJudge() = default;
  virtual std::string kind() const = 0;
  virtual std::vector<bool> judge(const UniqueCode& target,
                                  std::span<const UniqueCode* const> candidates,
                                  CallLog* log, std::vector<std::string>& warnings) = 0;
  // Generation parameters when the judge is a model; recorded in decisions.
  virtual std::optional<GenerationParams> params() const { return std::nullopt; }
};

// Case-insensitive comparison of whitespace-collapsed names.
class StringEqualityJudge : public DuplicateJudge {
 public:
  std::string kind() const override { return "string_equality"; }
  std::vector<bool> judge(const UniqueCode& target, std::span<const UniqueCode* const> candidates,
                          CallLog* log, std::vector<std::string>& warnings) override;
  static std::string key(std::string_view name);
};

class AllFalseJudge : public DuplicateJudge {
 public:
  std::string kind() const override { return "all_false"; }
  std::vector<bool> judge(const UniqueCode&, std::span<const UniqueCode* const> candidates,
                          CallLog*, std::vector<std::string>&) override {
    return std::vector<bool>(candidates.size(), false);
  }
};

// Verdicts from a table of duplicate name pairs (symmetric, matched by
// StringEqualityJudge::key). Pairs absent from the table are false unless the
// names are equal.
class RecordedJudge : public DuplicateJudge {
 public:
  explicit RecordedJudge(std::vector<std::pair<std::string, std::string>> pairs);
  static RecordedJudge load(const std::filesystem::path& file);
  std::string kind() const override { return "recorded"; }
  std::vector<bool> judge(const UniqueCode& target, std::span<const UniqueCode* const> candidates,
                          CallLog* log, std::vector<std::string>& warnings) override;

 private:
  std::map<std::string, std::vector<std::string>> table_;
};

// Renders the duplicate-detection prompt and parses its `comparisons`
// object. Candidates are sent in batches of at most batch_size; a batch
// whose reply stays malformed after repair counts as all-false.
class LlmJudge : public DuplicateJudge {
 public:
  LlmJudge(Gateway& gateway, GenerationParams params, std::string prompt_template,
           std::size_t batch_size = 20);
  std::string kind() const override { return "llm"; }
  std::vector<bool> judge(const UniqueCode& target, std::span<const UniqueCode* const> candidates,
                          CallLog* log, std::vector<std::string>& warnings) override;
  std::optional<GenerationParams> params() const override { return params_; }

  std::string render_prompt(const UniqueCode& target,
                            std::span<const UniqueCode* const> batch) const;

 private:
  Gateway& gateway_;
  GenerationParams params_;
  std::string template_;
  std::size_t batch_size_;
};

struct RationaleOptions {
  Gateway* gateway = nullptr;  // null disables rationales
  GenerationParams params;
  std::string prompt_template;
};

struct MergeOutput {
  std::vector<UniqueCode> codes;
  std::vector<MergeDecision> decisions;  // ids left empty
  std::vector<std::string> warnings;
};

// Each code of b is compared with the running result (initially a) and
// folded into the first match, or appended. With a empty this removes
// duplicates inside b.
MergeOutput merge_lists(std::vector<UniqueCode> a, std::span<const UniqueCode> b,
                        DuplicateJudge& judge, int round, const RationaleOptions& rationale = {},
                        CallLog* log = nullptr);

struct TournamentOptions {
  RationaleOptions rationale;
  int workers = 1;
};

struct TournamentResult {
  std::vector<UniqueCode> codes;
  SaturationReport report;
  std::vector<MergeDecision> decisions;  // ids d0001, d0002, ... in execution order
  std::vector<std::string> warnings;
};

// Self-merges every code set, then reduces the lists pairwise in corpus
// order until one remains. An odd list carries over unchanged.
TournamentResult run_tournament(std::span<const CodeSet> codesets, DuplicateJudge& judge,
                                const TournamentOptions& options = {}, CallLog* log = nullptr);

std::size_t ceil_log2(std::size_t n);
std::size_t total_quotes(std::span<const UniqueCode> codes);

// Moves the members listed in `decision` out of whichever code holds them
// into a new code appended at the end. Throws PreconditionError when the
// members are no longer together in one code.
void split_merge(std::vector<UniqueCode>& codes, const MergeDecision& decision);

nlohmann::json to_json(const UniqueCode& code);
UniqueCode unique_code_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MergeDecision& d);
MergeDecision decision_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SaturationReport& r);
SaturationReport saturation_from_json(const nlohmann::json& j);

}  // namespace qta
