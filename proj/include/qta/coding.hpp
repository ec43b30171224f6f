#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qta/corpus.hpp"
#include "qta/gateway.hpp"

namespace qta {

struct InitialCode {
  std::string code_name;
  std::string description;
  std::string quote;
  std::string source_doc;
  std::size_t index = 0;

  // Stable reference used for lineage and audit records: "<doc>#<index>".
  std::string ref() const;
};

inline constexpr std::string_view kBaselineSource = "ALL";

struct CodeSet {
  std::string source_doc;
  std::vector<InitialCode> codes;
  GenerationParams params_used;
  std::vector<std::string> warnings;
};

struct CodeValidation {
  std::size_t max_name_words = 5;
  std::size_t min_description_words = 25;
  std::size_t max_description_words = 100;
  std::size_t min_quote_words = 150;
};

// Warnings only; an empty result means the code passed every check.
std::vector<std::string> validate_code(const InitialCode& code, const Document& doc,
                                       const CodeValidation& bounds = {});

struct CodingOptions {
  GenerationParams params;
  std::string prompt_template;
  CodeValidation validation;
  // Documents longer than this are coded in paragraph-aligned chunks; 0 disables chunking.
  std::size_t chunk_words = 0;
};

// Splits at blank lines so that each chunk holds at most max_words words,
// unless a single paragraph is longer on its own.
std::vector<std::string> chunk_paragraphs(std::string_view text, std::size_t max_words);

// Parses the `final_codes` array of a coding reply. Entries lacking a
// non-empty string quote are dropped with a warning.
CodeSet parse_codes(const nlohmann::json& reply, const Document& doc, std::size_t first_index,
                    std::vector<std::string>& warnings);

// One gateway call per document (or per chunk). Throws StageError when the
// reply stays malformed after the repair retry.
CodeSet code_document(const Document& doc, Gateway& gateway, const CodingOptions& options,
                      CallLog* log = nullptr);

struct CodingRun {
  std::vector<CodeSet> codesets;             // corpus order, failed documents omitted
  std::map<std::string, std::string> failed;  // doc id -> error
};

// Codes every document, `workers` at a time. Output order and call-log order
// follow the corpus regardless of completion order.
CodingRun code_corpus(const Corpus& corpus, Gateway& gateway, const CodingOptions& options,
                      int workers = 1, CallLog* log = nullptr);

struct BaselineOptions {
  GenerationParams params;
  std::string prompt_template;
  std::size_t context_limit_tokens = 16000;
};

struct BaselineResult {
  std::string raw_text;
  std::string digest;
  std::size_t estimated_tokens = 0;
  std::vector<std::string> warnings;
};

std::string render_dataset(const Corpus& corpus);
std::size_t estimate_tokens(std::string_view text);

// The whole corpus in a single request; the reply is returned unparsed.
BaselineResult run_monolithic_baseline(const Corpus& corpus, Gateway& gateway,
                                       const BaselineOptions& options, CallLog* log = nullptr);

// Spans between straight or curly double quotes with at least min_words words.
std::vector<std::string> extract_quoted_spans(std::string_view text, std::size_t min_words = 3);

nlohmann::json to_json(const InitialCode& code);
nlohmann::json to_json(const CodeSet& codeset);
CodeSet codeset_from_json(const nlohmann::json& j);

}  // namespace qta
