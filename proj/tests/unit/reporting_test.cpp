#include <gtest/gtest.h>

#include "qta/reporting.hpp"

using namespace qta;
using nlohmann::json;

namespace {

audit::AuditSummary summary(std::size_t v, std::size_t e, std::size_t ed, std::size_t f) {
  return {v, e, ed, f, v + e + ed + f};
}

}  // namespace

TEST(Coreq, ItemsWithAndWithoutReview) {
  CoreqInputs in;
  in.model = "gpt-4o";
  in.participant_checking = "Not applicable, secondary data";
  in.audit = summary(17, 4, 0, 0);
  in.total_codes = 146;
  in.unique_codes = 52;
  in.theme_count = 8;
  in.unassigned = 0;
  auto items = coreq_report(in);
  ASSERT_EQ(items.size(), 9u);
  EXPECT_EQ(items.front().number, 24);
  EXPECT_EQ(items.back().number, 32);
  EXPECT_EQ(items[0].text, "1 hybrid artificial system");
  EXPECT_EQ(items[2].text, "Inductive");
  EXPECT_EQ(items[3].text, "gpt-4o, via API");
  EXPECT_EQ(items[4].text, "Not applicable, secondary data");
  EXPECT_NE(items[5].text.find("17 verbatim (81.0%)"), std::string::npos);
  EXPECT_NE(items[5].text.find("4 modified (19.0%, 4 by ellipsis)"), std::string::npos);
  EXPECT_NE(items[6].text.find("146 initial codes reduced to 52"), std::string::npos);

  in.human_reviewers = 1;
  in.human_actions = 3;
  in.audit.reset();
  in.subtheme_count = 16;
  in.overrides[26] = "Inductive, then refined by the analyst";
  items = coreq_report(in);
  EXPECT_EQ(items[0].text, "1 hybrid artificial system with human review (1 reviewer, 3 recorded actions)");
  EXPECT_EQ(items[5].text, "not audited");
  EXPECT_EQ(items[2].text, "Inductive, then refined by the analyst");
  EXPECT_NE(items[8].text.find("16 sub-themes"), std::string::npos);
  const std::string md = render_coreq_markdown(items);
  EXPECT_NE(md.find("| 24 | Number of data coders |"), std::string::npos);
  EXPECT_NE(md.find("out of scope"), std::string::npos);
}

TEST(CodingTree, LeavesCarryVerdicts) {
  std::vector<UniqueCode> codes = {UniqueCode::from({"A", "d", "qa", "p1", 0}),
                                   UniqueCode::from({"B", "d", "qb", "p2", 0}),
                                   UniqueCode::from({"C", "d", "qc", "p3", 0})};
  codes[0].quotes.push_back({"qa2", "p2"});
  codes[0].members.push_back("p2#1");
  ThemeSet themes;
  themes.themes = {{"T1", "One", "", {0, 1}}};
  themes.unassigned = {2};
  std::vector<audit::QuoteAuditRecord> recs(1);
  recs[0].code_ref = "p2#1";
  recs[0].verdict = audit::Verdict::modified_edit;
  const CodingTree tree = build_coding_tree(themes, codes, recs);
  EXPECT_EQ(tree.leaf_count(), 3u);
  ASSERT_EQ(tree.themes.at(0).codes.size(), 2u);
  EXPECT_FALSE(tree.themes[0].codes[0].quotes[0].verdict);
  EXPECT_EQ(tree.themes[0].codes[0].quotes[1].verdict, audit::Verdict::modified_edit);
  const std::string md = render_coding_tree_markdown(tree, codes);
  EXPECT_NE(md.find("## T1 One"), std::string::npos);
  EXPECT_NE(md.find("\"qa2\" (p2; modified_edit)"), std::string::npos);
  EXPECT_NE(md.find("\"qa\" (p1; not audited)"), std::string::npos);
  EXPECT_NE(md.find("## Unassigned codes\n\n- [2] C"), std::string::npos);
  const json j = to_json(tree);
  EXPECT_EQ(j["leaf_count"], 3);
  EXPECT_EQ(j["themes"][0]["codes"][0]["quotes"][1]["verdict"], "modified_edit");
}

TEST(Tables, FormatsAndEscaping) {
  EXPECT_EQ(parse_table_format("md"), TableFormat::markdown);
  EXPECT_EQ(parse_table_format("csv"), TableFormat::csv);
  EXPECT_EQ(extension(TableFormat::json), "json");
  EXPECT_THROW(parse_table_format("xlsx"), std::invalid_argument);
  const Table t{{"a", "b"}, {{"x|y", "line\nbreak"}, {"q\"uote", "c,d"}}};
  EXPECT_EQ(render_table(t, TableFormat::markdown),
            "| a | b |\n| --- | --- |\n| x\\|y | line break |\n| q\"uote | c,d |\n");
  EXPECT_EQ(render_table(t, TableFormat::csv), "a,b\nx|y,\"line\nbreak\"\n\"q\"\"uote\",\"c,d\"\n");
  const json j = json::parse(render_table(t, TableFormat::json));
  EXPECT_EQ(j["columns"], json({"a", "b"}));
  EXPECT_EQ(j["rows"][1]["b"], "c,d");
  EXPECT_EQ(format_percent(12.5), "12.5%");
  EXPECT_EQ(format_percent(95.0), "95.0%");
  EXPECT_EQ(format_percent(100.0 / 3.0), "33.3%");
}

TEST(Tables, QuoteTablesLayout) {
  const Table a = audit_table(summary(57, 2, 1, 0));
  EXPECT_EQ(a.headers, (std::vector<std::string>{"Quotes", "n", "%"}));
  EXPECT_EQ(a.rows[0], (std::vector<std::string>{"Verbatim", "57", "95.0%"}));
  EXPECT_EQ(a.rows[1], (std::vector<std::string>{"Modified", "3", "5.0%"}));
  EXPECT_EQ(a.rows[3], (std::vector<std::string>{"Total", "60", "100.0%"}));
  const Table c = comparison_table(summary(57, 3, 0, 0), summary(0, 1, 0, 7));
  EXPECT_EQ(c.headers, (std::vector<std::string>{"Quotes", "Staged n", "Baseline n", "Staged %", "Baseline %"}));
  ASSERT_EQ(c.rows.size(), 3u);
  EXPECT_EQ(c.rows[0], (std::vector<std::string>{"Verbatim", "57", "0", "95.0%", "0.0%"}));
  EXPECT_EQ(c.rows[1], (std::vector<std::string>{"Modified", "3", "1", "5.0%", "12.5%"}));
  EXPECT_EQ(c.rows[2], (std::vector<std::string>{"Fabricated", "0", "7", "0.0%", "87.5%"}));
  const Table empty = audit_table(summary(0, 0, 0, 0));
  EXPECT_EQ(empty.rows[3][2], "0.0%");
}

TEST(Tables, ThemeHierarchyAndSaturation) {
  ThemeSet s;
  s.themes = {{"T1", "Name", "Desc", {0, 1, 2}}};
  EXPECT_EQ(theme_table(s).headers.back(), "Nr of Codes in the theme");
  EXPECT_EQ(theme_table(s).rows[0][3], "3");
  ThemeHierarchy h;
  h.subthemes.themes = {{"S0", "Zero", "", {}}, {"S1", "One", "", {}}};
  h.parents = {{"H1", "Top", "d", {0, 1}, false}};
  EXPECT_EQ(hierarchy_table(h).rows[0][3], "[0] Zero; [1] One");
  const Table sat = saturation_table({146, 52, 52.0 / 146.0, 4, {}});
  EXPECT_EQ(sat.rows[0], (std::vector<std::string>{"146", "52", "0.356", "4"}));
}
