#include "qta/coding.hpp"

#include <cmath>
#include <stdexcept>

#include "qta/audit.hpp"
#include "qta/error.hpp"
#include "qta/parallel.hpp"
#include "qta/prompts.hpp"
#include "qta/text.hpp"

namespace qta {

using nlohmann::json;

std::string InitialCode::ref() const { return source_doc + "#" + std::to_string(index); }

std::vector<std::string> validate_code(const InitialCode& code, const Document& doc,
                                       const CodeValidation& b) {
  std::vector<std::string> out;
  const std::string where = code.ref() + ": ";
  if (text::word_count(code.code_name) > b.max_name_words) {
    out.push_back(where + "name exceeds " + std::to_string(b.max_name_words) + " words");
  }
  const std::size_t dw = text::word_count(code.description);
  if (dw < b.min_description_words || dw > b.max_description_words) {
    out.push_back(where + "description has " + std::to_string(dw) + " words, outside [" +
                  std::to_string(b.min_description_words) + ", " +
                  std::to_string(b.max_description_words) + "]");
  }
  const std::size_t qw = text::word_count(code.quote);
  if (qw < b.min_quote_words) {
    out.push_back(where + "quote has " + std::to_string(qw) + " words, below " +
                  std::to_string(b.min_quote_words));
  }
  const std::u32string q = audit::prepare_quote(code.quote);
  if (q.empty() ||
      audit::find_fragment(audit::normalize(doc.text).text, q) == std::u32string::npos) {
    out.push_back(where + "unverified quote");
  }
  return out;
}

std::vector<std::string> chunk_paragraphs(std::string_view s, std::size_t max_words) {
  std::vector<std::string> paragraphs;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find("\n\n", start);
    if (end == std::string_view::npos) end = s.size();
    const std::string p = text::trim(s.substr(start, end - start));
    if (!p.empty()) paragraphs.push_back(p);
    start = end + 2;
  }
  std::vector<std::string> chunks;
  std::string cur;
  std::size_t cur_words = 0;
  for (const auto& p : paragraphs) {
    const std::size_t w = text::word_count(p);
    if (!cur.empty() && max_words > 0 && cur_words + w > max_words) {
      chunks.push_back(std::move(cur));
      cur.clear();
      cur_words = 0;
    }
    if (!cur.empty()) cur += "\n\n";
    cur += p;
    cur_words += w;
  }
  if (!cur.empty()) chunks.push_back(std::move(cur));
  return chunks;
}

CodeSet parse_codes(const json& reply, const Document& doc, std::size_t first_index,
                    std::vector<std::string>& warnings) {
  const json* arr = nullptr;
  if (reply.is_object() && reply.contains("final_codes") && reply["final_codes"].is_array()) {
    arr = &reply["final_codes"];
  } else if (reply.is_array()) {
    arr = &reply;
  }
  if (arr == nullptr) {
    throw MalformedOutputError("reply has no final_codes array", reply.dump());
  }
  CodeSet set;
  set.source_doc = doc.id;
  std::size_t index = first_index;
  std::size_t position = 0;
  for (const auto& item : *arr) {
    ++position;
    const auto str = [&](const char* key) {
      if (!item.is_object() || !item.contains(key) || !item[key].is_string()) return std::string();
      return item[key].get<std::string>();
    };
    InitialCode c{str("code_name"), str("description"), str("quote"), doc.id, index};
    if (text::trim(c.quote).empty() || text::trim(c.code_name).empty()) {
      warnings.push_back(doc.id + ": dropped entry " + std::to_string(position) +
                         " without name or quote");
      continue;
    }
    set.codes.push_back(std::move(c));
    ++index;
  }
  return set;
}

CodeSet code_document(const Document& doc, Gateway& gateway, const CodingOptions& options,
                      CallLog* log) {
  static constexpr std::string_view kRequired[] = {"one_interview_data"};
  std::vector<std::string> parts;
  if (options.chunk_words > 0 && doc.word_count > options.chunk_words) {
    parts = chunk_paragraphs(doc.text, options.chunk_words);
  } else {
    parts.push_back(doc.text);
  }
  CodeSet result;
  result.source_doc = doc.id;
  result.params_used = options.params;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    ChatRequest req;
    req.params = options.params;
    req.user_text = render(options.prompt_template, {{"one_interview_data", parts[k]}}, kRequired);
    std::string purpose = "code:" + doc.id;
    if (parts.size() > 1) purpose += ":chunk" + std::to_string(k + 1);
    JsonReply reply;
    try {
      reply = gateway.complete_json(req, purpose, log);
    } catch (const MalformedOutputError& e) {
      throw StageError("document " + doc.id + ": " + e.what());
    }
    if (reply.repaired) result.warnings.push_back(doc.id + ": reply needed a repair retry");
    CodeSet part;
    try {
      part = parse_codes(reply.value, doc, result.codes.size(), result.warnings);
    } catch (const MalformedOutputError& e) {
      throw StageError("document " + doc.id + ": " + e.what());
    }
    for (auto& c : part.codes) result.codes.push_back(std::move(c));
  }
  for (const auto& c : result.codes) {
    for (auto& w : validate_code(c, doc, options.validation)) result.warnings.push_back(std::move(w));
  }
  return result;
}

CodingRun code_corpus(const Corpus& corpus, Gateway& gateway, const CodingOptions& options,
                      int workers, CallLog* log) {
  const auto& docs = corpus.documents();
  std::vector<std::optional<CodeSet>> sets(docs.size());
  std::vector<std::string> errors(docs.size());
  std::vector<CallLog> logs(docs.size());
  parallel_for(docs.size(), workers, [&](std::size_t i) {
    try {
      sets[i] = code_document(docs[i], gateway, options, &logs[i]);
    } catch (const StageError& e) {
      errors[i] = e.what();
    } catch (const TransportError& e) {
      errors[i] = e.what();
    }
  });
  CodingRun run;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (log) log->append(logs[i]);
    if (sets[i]) {
      run.codesets.push_back(std::move(*sets[i]));
    } else {
      run.failed[docs[i].id] = errors[i];
    }
  }
  return run;
}

std::string render_dataset(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus.documents()) {
    if (!out.empty()) out += "\n\n";
    out += "Participant " + d.id + " (" + d.group + "):\n" + d.text;
  }
  return out;
}

std::size_t estimate_tokens(std::string_view s) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(text::word_count(s)) * 1.3));
}

BaselineResult run_monolithic_baseline(const Corpus& corpus, Gateway& gateway,
                                       const BaselineOptions& options, CallLog* log) {
  if (corpus.empty()) throw std::invalid_argument("corpus is empty");
  static constexpr std::string_view kRequired[] = {"dataset"};
  ChatRequest req;
  req.params = options.params;
  req.user_text = render(options.prompt_template, {{"dataset", render_dataset(corpus)}}, kRequired);
  BaselineResult result;
  result.estimated_tokens = estimate_tokens(req.user_text);
  if (result.estimated_tokens > options.context_limit_tokens) {
    result.warnings.push_back("input likely exceeds context (" +
                              std::to_string(result.estimated_tokens) + " estimated tokens, limit " +
                              std::to_string(options.context_limit_tokens) + ")");
  }
  ChatResponse resp = gateway.complete(req, "baseline", log);
  if (resp.finish_reason != FinishReason::complete) {
    result.warnings.push_back("baseline reply finished with " +
                              std::string(to_string(resp.finish_reason)));
  }
  result.raw_text = std::move(resp.raw_text);
  result.digest = std::move(resp.digest);
  return result;
}

std::vector<std::string> extract_quoted_spans(std::string_view s, std::size_t min_words) {
  // Work on code points so curly quotes count as single delimiters.
  const std::u32string u = text::utf8_decode(s);
  const auto is_open = [](char32_t c) { return c == U'"' || c == 0x201C; };
  const auto is_close = [](char32_t c) { return c == U'"' || c == 0x201D; };
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < u.size()) {
    if (!is_open(u[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < u.size() && !is_close(u[j])) ++j;
    if (j >= u.size()) break;
    const std::string span = text::trim(text::utf8_encode(std::u32string_view(u).substr(i + 1, j - i - 1)));
    if (text::word_count(span) >= min_words) out.push_back(span);
    i = j + 1;
  }
  return out;
}

json to_json(const InitialCode& c) {
  return {{"code_name", c.code_name},
          {"description", c.description},
          {"quote", c.quote},
          {"source_doc", c.source_doc},
          {"index", c.index}};
}

json to_json(const CodeSet& s) {
  json codes = json::array();
  for (const auto& c : s.codes) codes.push_back(to_json(c));
  return {{"source_doc", s.source_doc},
          {"codes", codes},
          {"params_used", to_json(s.params_used)},
          {"warnings", s.warnings}};
}

CodeSet codeset_from_json(const json& j) {
  CodeSet s;
  s.source_doc = j.at("source_doc").get<std::string>();
  for (const auto& c : j.at("codes")) {
    s.codes.push_back({c.at("code_name").get<std::string>(), c.at("description").get<std::string>(),
                       c.at("quote").get<std::string>(), c.at("source_doc").get<std::string>(),
                       c.at("index").get<std::size_t>()});
  }
  s.params_used = params_from_json(j.at("params_used"));
  s.warnings = j.value("warnings", std::vector<std::string>{});
  for (std::size_t i = 0; i < s.codes.size(); ++i) {
    if (s.codes[i].index != i) throw std::invalid_argument("code indices are not contiguous");
  }
  return s;
}

}  // namespace qta
