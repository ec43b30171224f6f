#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qta/corpus.hpp"

namespace qta::audit {

// Canonical form used for quote matching. `span_map[i]` is the byte offset in
// the original UTF-8 text of canonical code point i; the extra final entry is
// the original length.
struct NormalizedText {
  std::u32string text;
  std::vector<std::size_t> span_map;

  std::string utf8() const;
  // Original byte offset one past canonical code point `end - 1`.
  std::size_t source_end(std::size_t end) const;
};

// Collapses whitespace runs, straightens quotes, apostrophes and dashes, and
// rewrites "…", "[...]" and ". . ." as "...". Case is preserved. Idempotent.
NormalizedText normalize(std::string_view utf8);

enum class Verdict { verbatim, modified_ellipsis, modified_edit, fabricated };

std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view s);

struct Thresholds {
  std::size_t max_gap_chars = 1000;
  double edit_threshold = 0.85;
  double match_threshold = 0.8;
};

// Half-open range of canonical code points.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

struct QuoteAuditRecord {
  std::string code_ref;
  std::string quote;
  Verdict verdict = Verdict::fabricated;
  std::optional<std::string> matched_doc;
  std::vector<Span> spans;         // canonical offsets in matched_doc
  std::vector<Span> source_spans;  // byte offsets in the original document text
  double score = 0.0;              // 1 for exact matches, else best edit similarity
};

// Normalized documents of a corpus, built once and shared read-only.
class AuditIndex {
 public:
  struct Entry {
    std::string id;
    NormalizedText text;
  };

  explicit AuditIndex(const Corpus& corpus);
  const std::vector<Entry>& entries() const noexcept { return entries_; }

 private:
  std::vector<Entry> entries_;
};

// Canonical, trimmed form of a quote as matched against documents. A single
// pair of enclosing double quotes is removed.
std::u32string prepare_quote(std::string_view quote);

// Leftmost position >= from where `fragment` occurs in `haystack`. The first
// character of the fragment matches either ASCII case (quotes routinely
// capitalise their opening word); everything else is exact. An empty
// fragment is never found.
std::size_t find_fragment(std::u32string_view haystack, std::u32string_view fragment,
                          std::size_t from = 0);

// Splits a canonical quote on "..." into trimmed, non-empty fragments.
std::vector<std::u32string> ellipsis_fragments(std::u32string_view quote);

// Levenshtein distance over code points.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

// Window lengths considered for edit similarity: within 25% of the quote.
std::size_t min_window(std::size_t quote_len);
std::size_t max_window(std::size_t quote_len);
double edit_similarity(std::size_t distance, std::size_t quote_len, std::size_t window_len);

// Throws std::invalid_argument for an empty quote.
QuoteAuditRecord classify_quote(std::string_view quote, const AuditIndex& index,
                                const Thresholds& cfg = {});
QuoteAuditRecord classify_quote(std::string_view quote, const Corpus& corpus,
                                const Thresholds& cfg = {});

struct VerdictCounts {
  std::size_t verbatim = 0;
  std::size_t modified = 0;
  std::size_t fabricated = 0;

  std::size_t total() const noexcept { return verbatim + modified + fabricated; }
};

struct Percentages {
  double verbatim = 0.0;
  double modified = 0.0;
  double fabricated = 0.0;
};

// count / total * 100; all zero when total is zero.
Percentages percentages(const VerdictCounts& counts);

struct AuditSummary {
  std::size_t verbatim = 0;
  std::size_t modified_ellipsis = 0;
  std::size_t modified_edit = 0;
  std::size_t fabricated = 0;
  std::size_t sample_size = 0;

  VerdictCounts counts() const noexcept {
    return {verbatim, modified_ellipsis + modified_edit, fabricated};
  }
  Percentages percentages() const { return audit::percentages(counts()); }
  double ellipsis_share() const noexcept {
    return sample_size == 0 ? 0.0 : 100.0 * static_cast<double>(modified_ellipsis) /
                                        static_cast<double>(sample_size);
  }
};

AuditSummary summarize(std::span<const QuoteAuditRecord> records);

struct QuoteItem {
  std::string code_ref;
  std::string quote;
};

struct AuditResult {
  std::vector<QuoteAuditRecord> records;
  AuditSummary summary;
  std::optional<std::size_t> sample;
  std::uint64_t seed = 0;
  std::vector<std::size_t> sampled_indices;
};

// Seeded uniform sample of k distinct indices out of n, ascending.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

// Audits every quote, or a seeded uniform sample of `sample` quotes.
AuditResult audit_codeset(std::span<const QuoteItem> items, const Corpus& corpus,
                          std::optional<std::size_t> sample, std::uint64_t seed,
                          const Thresholds& cfg = {});

// Lowercased word tokens of the normalized text.
std::vector<std::string> tokens(std::string_view text);

// Shared token multiset size over the smaller quote's token count.
double token_overlap(std::string_view a, std::string_view b);

struct QuoteMatch {
  std::size_t system_index = 0;
  std::size_t external_index = 0;
  double score = 0.0;
};

inline constexpr std::size_t kMinExternalQuoteWords = 3;

// Pairs with score >= cfg.match_threshold, best first. External quotes with
// fewer than three words are skipped.
std::vector<QuoteMatch> match_published_quotes(std::span<const std::string> system_quotes,
                                               std::span<const std::string> external_quotes,
                                               const Thresholds& cfg = {});

nlohmann::json to_json(const QuoteAuditRecord& record);
QuoteAuditRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AuditSummary& summary);

}  // namespace qta::audit
