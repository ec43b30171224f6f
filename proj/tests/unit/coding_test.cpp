#include <gtest/gtest.h>

#include "qta/coding.hpp"
#include "qta/error.hpp"
#include "qta/prompts.hpp"
#include "qta/text.hpp"
#include "support.hpp"

using namespace qta;
using nlohmann::json;
using qta::testing::FnTransport;

namespace {

Document doc(std::string id, std::string t) {
  const auto n = text::word_count(t);
  return {std::move(id), "g", std::move(t), n};
}

const std::string kDesc =
    "The participant describes keeping careful written records of every contact with services so that "
    "nothing is lost between appointments and the family can show what was promised and when.";

GatewayOptions live_options(const std::filesystem::path& cache) {
  GatewayOptions o;
  o.mode = GatewayMode::record;
  o.cache_dir = cache;
  o.initial_backoff = std::chrono::milliseconds(1);
  return o;
}

CodingOptions coding_options() {
  CodingOptions o;
  o.params = coding_params("gpt-4o");
  o.prompt_template = std::string(default_template(PromptId::initial_coding));
  o.validation.min_quote_words = 3;
  return o;
}

std::string codes_reply(const std::vector<std::pair<std::string, std::string>>& codes) {
  json arr = json::array();
  for (const auto& [n, q] : codes) arr.push_back({{"code_name", n}, {"description", kDesc}, {"quote", q}});
  return "Here you go:\n```json\n" + json{{"final_codes", arr}}.dump() + "\n```";
}

}  // namespace

TEST(Coding, ValidateCodeWarnings) {
  const Document d = doc("p1", "I kept a notebook of every call I made.");
  InitialCode ok{"Keeping records", kDesc, "I kept a notebook", "p1", 0};
  CodeValidation b;
  b.min_quote_words = 3;
  EXPECT_TRUE(validate_code(ok, d, b).empty());
  InitialCode bad{"One two three four five six", "too short", "A notebook of calls nobody made", "p1", 2};
  const auto w = validate_code(bad, d, b);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0], "p1#2: name exceeds 5 words");
  EXPECT_EQ(w[1], "p1#2: description has 2 words, outside [25, 100]");
  EXPECT_EQ(w[2], "p1#2: unverified quote");
  EXPECT_EQ(validate_code(ok, d, {}).at(0), "p1#0: quote has 4 words, below 150");
}

TEST(Coding, ParseCodesAcceptsBothShapesAndDropsIncomplete) {
  const Document d = doc("p1", "text");
  std::vector<std::string> warnings;
  const json obj = {{"final_codes", json::array({{{"code_name", "A"}, {"quote", "q"}},
                                                 {{"code_name", "B"}},
                                                 {{"code_name", "C"}, {"quote", "r"}}})}};
  const CodeSet s = parse_codes(obj, d, 4, warnings);
  ASSERT_EQ(s.codes.size(), 2u);
  EXPECT_EQ(s.codes[1].code_name, "C");
  EXPECT_EQ(s.codes[1].index, 5u);
  EXPECT_EQ(s.codes[1].ref(), "p1#5");
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_EQ(warnings[0], "p1: dropped entry 2 without name or quote");
  EXPECT_EQ(parse_codes(json::array({{{"code_name", "A"}, {"quote", "q"}}}), d, 0, warnings).codes.size(), 1u);
  EXPECT_THROW(parse_codes(json{{"codes", 1}}, d, 0, warnings), MalformedOutputError);
}

TEST(Coding, ChunkParagraphs) {
  const std::string t = "a b c\n\nd e\n\n\n\nf g h i\n\nj";
  EXPECT_EQ(chunk_paragraphs(t, 5), (std::vector<std::string>{"a b c\n\nd e", "f g h i\n\nj"}));
  EXPECT_EQ(chunk_paragraphs(t, 0).size(), 1u);
  EXPECT_EQ(chunk_paragraphs("one two three four", 2), (std::vector<std::string>{"one two three four"}));
}

TEST(Coding, CodeDocumentUsesPromptAndValidates) {
  qta::testing::TempDir dir;
  const Document d = doc("p1", "Participant: I kept a notebook of every call I made.");
  auto t = std::make_shared<FnTransport>([](const std::string&) {
    return codes_reply({{"Keeping records", "\"I kept a notebook of every call\""}, {"Invented", "never said this"}});
  });
  Gateway gw(live_options(dir.path()), t);
  CallLog log;
  const CodeSet s = code_document(d, gw, coding_options(), &log);
  ASSERT_EQ(s.codes.size(), 2u);
  EXPECT_EQ(s.source_doc, "p1");
  EXPECT_EQ(s.params_used, coding_params("gpt-4o"));
  EXPECT_NE(t->prompts().at(0).find(d.text), std::string::npos);
  EXPECT_EQ(log.records().at(0).purpose, "code:p1");
  EXPECT_EQ(s.warnings, (std::vector<std::string>{"p1#1: unverified quote"}));
}

TEST(Coding, RepairRetryAndPersistentFailure) {
  qta::testing::TempDir dir;
  const Document d = doc("p1", "I kept a notebook of every call.");
  auto t = std::make_shared<FnTransport>([](const std::string& prompt) {
    if (prompt.ends_with(kRepairInstruction)) return codes_reply({{"Keeping records", "I kept a notebook"}});
    return std::string("{\"final_codes\": [ {\"code_name\": ");
  });
  Gateway gw(live_options(dir / "a"), t);
  const CodeSet s = code_document(d, gw, coding_options());
  EXPECT_EQ(s.codes.size(), 1u);
  EXPECT_EQ(s.warnings.at(0), "p1: reply needed a repair retry");

  auto never = std::make_shared<FnTransport>([](const std::string&) { return std::string("no codes today"); });
  Gateway gw2(live_options(dir / "b"), never);
  EXPECT_THROW(code_document(d, gw2, coding_options()), StageError);
  EXPECT_EQ(never->calls(), 2u);
}

TEST(Coding, ChunkedDocumentsContinueIndices) {
  qta::testing::TempDir dir;
  const Document d = doc("p1", "first part has five words\n\nsecond part also five words");
  auto t = std::make_shared<FnTransport>([](const std::string& prompt) {
    if (prompt.find("first part") != std::string::npos) return codes_reply({{"First", "first part has"}});
    return codes_reply({{"Second", "second part also"}, {"Third", "five words"}});
  });
  Gateway gw(live_options(dir.path()), t);
  auto o = coding_options();
  o.chunk_words = 6;
  CallLog log;
  const CodeSet s = code_document(d, gw, o, &log);
  ASSERT_EQ(s.codes.size(), 3u);
  EXPECT_EQ(s.codes[2].index, 2u);
  EXPECT_EQ(log.records().at(1).purpose, "code:p1:chunk2");
}

TEST(Coding, CorpusOrderIsIndependentOfWorkers) {
  qta::testing::TempDir dir;
  std::vector<Document> docs;
  for (int i = 0; i < 9; ++i) docs.push_back(doc("d" + std::to_string(i), "doc " + std::to_string(i) + " words here"));
  docs.push_back(doc("bad", "this one fails"));
  const Corpus corpus(docs);
  auto t = std::make_shared<FnTransport>([](const std::string& prompt) {
    if (prompt.find("this one fails") != std::string::npos) return std::string("nothing");
    const auto p = prompt.find("doc ");
    return codes_reply({{"Code", prompt.substr(p, 5)}});
  });
  Gateway gw(live_options(dir.path()), t);
  CallLog serial_log;
  const CodingRun serial = code_corpus(corpus, gw, coding_options(), 1, &serial_log);
  GatewayOptions replay;
  replay.cache_dir = dir.path();
  Gateway gw2(replay, nullptr);
  CallLog par_log;
  const CodingRun parallel = code_corpus(corpus, gw2, coding_options(), 4, &par_log);
  ASSERT_EQ(serial.codesets.size(), 9u);
  EXPECT_EQ(serial.failed.count("bad"), 1u);
  ASSERT_EQ(parallel.codesets.size(), serial.codesets.size());
  for (std::size_t i = 0; i < serial.codesets.size(); ++i) {
    EXPECT_EQ(to_json(parallel.codesets[i]), to_json(serial.codesets[i]));
  }
  ASSERT_EQ(par_log.size(), serial_log.size());
  for (std::size_t i = 0; i < par_log.size(); ++i) {
    EXPECT_EQ(par_log.records()[i].purpose, serial_log.records()[i].purpose);
  }
}

TEST(Coding, CodesetJsonRoundTrip) {
  CodeSet s{"p1", {{"A", "desc", "q", "p1", 0}, {"B", "desc", "r", "p1", 1}}, coding_params("m"), {"w"}};
  EXPECT_EQ(to_json(codeset_from_json(to_json(s))), to_json(s));
  json broken = to_json(s);
  broken["codes"][1]["index"] = 5;
  EXPECT_THROW(codeset_from_json(broken), std::invalid_argument);
}

TEST(Baseline, RendersWholeDatasetInOneCall) {
  qta::testing::TempDir dir;
  const Corpus corpus({{"p1", "parents", "first interview", 2}, {"p2", "parents", "second interview", 2}});
  EXPECT_EQ(render_dataset(corpus), "Participant p1 (parents):\nfirst interview\n\nParticipant p2 (parents):\nsecond interview");
  auto t = std::make_shared<FnTransport>([](const std::string&) { return std::string("Theme 1: \"a quoted claim here\""); });
  Gateway gw(live_options(dir.path()), t);
  BaselineOptions o;
  o.params = coding_params("gpt-4o");
  o.prompt_template = std::string(default_template(PromptId::baseline));
  CallLog log;
  auto r = run_monolithic_baseline(corpus, gw, o, &log);
  EXPECT_EQ(t->calls(), 1u);
  EXPECT_EQ(log.records().at(0).purpose, "baseline");
  EXPECT_TRUE(r.warnings.empty());
  o.context_limit_tokens = 5;
  GatewayOptions replay;
  replay.cache_dir = dir.path();
  Gateway gw2(replay, nullptr);
  r = run_monolithic_baseline(corpus, gw2, o);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_TRUE(r.warnings[0].starts_with("input likely exceeds context"));
  EXPECT_EQ(estimate_tokens("one two three"), 4u);
}

TEST(Baseline, ExtractQuotedSpans) {
  const std::string t = "As one said, \xE2\x80\x9Cwe were never told\xE2\x80\x9D and \"ok\" then \"this one counts too\".";
  EXPECT_EQ(extract_quoted_spans(t), (std::vector<std::string>{"we were never told", "this one counts too"}));
  EXPECT_EQ(extract_quoted_spans(t, 1).size(), 3u);
  EXPECT_TRUE(extract_quoted_spans("no quotes at all").empty());
  EXPECT_TRUE(extract_quoted_spans("an \"unterminated quote here").empty());
}
