#include <gtest/gtest.h>

#include "qta/error.hpp"
#include "qta/prompts.hpp"
#include "qta/theming.hpp"
#include "support.hpp"

using namespace qta;
using nlohmann::json;
using qta::testing::FnTransport;

namespace {

std::vector<UniqueCode> codes(std::size_t n) {
  std::vector<UniqueCode> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(UniqueCode::from({"Code " + std::to_string(i), "Description " + std::to_string(i), "q", "d", i}));
  }
  return out;
}

GatewayOptions record_options(const std::filesystem::path& cache) {
  GatewayOptions o;
  o.mode = GatewayMode::record;
  o.cache_dir = cache;
  return o;
}

ThemingOptions theming_options() {
  ThemingOptions o;
  o.params = theming_params("gpt-4o");
  o.research_question = "What helps?";
  o.prompt_template = std::string(default_template(PromptId::themes));
  return o;
}

}  // namespace

TEST(Themes, RenderCodeList) {
  EXPECT_EQ(render_code_list(codes(2)), "\n[0] Code 0: Description 0\n[1] Code 1: Description 1");
}

TEST(Themes, ParseDropsBadIndicesAndComputesUnassigned) {
  const json reply = {{"themes", json::array({{{"name", "One"}, {"description", "d"}, {"codes", {0, 1, 1, 9, -1}}},
                                              {{"name", "Two"}, {"codes", {"2", "x"}}},
                                              {{"name", "Three"}}})}};
  const ThemeSet s = parse_themes(reply, 5, "T", "codes");
  ASSERT_EQ(s.themes.size(), 3u);
  EXPECT_EQ(s.themes[0].id, "T1");
  EXPECT_EQ(s.themes[0].code_indices, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(s.themes[1].code_indices, (std::vector<std::size_t>{2}));
  EXPECT_TRUE(s.themes[2].code_indices.empty());
  EXPECT_EQ(s.unassigned, (std::vector<std::size_t>{3, 4}));
  EXPECT_EQ(s.warnings, (std::vector<std::string>{"T1: repeated index 1", "T1: dropped out-of-range index 9",
                                                  "T1: dropped out-of-range index -1",
                                                  "T2: dropped out-of-range index \"x\""}));
  EXPECT_THROW(parse_themes(json::array(), 5, "T", "codes"), MalformedOutputError);
}

TEST(Themes, ValidateAssignment) {
  ThemeSet s;
  s.themes = {{"T1", "a", "", {0, 1}}, {"T2", "b", "", {1, 2, 7}}};
  const auto r = validate_assignment(s, 5);
  EXPECT_EQ(r.unassigned, (std::vector<std::size_t>{3, 4}));
  EXPECT_EQ(r.sizes, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(r.overlap_count, 1u);
  EXPECT_EQ(r.assigned_distinct, 3u);
  ASSERT_EQ(r.out_of_range.size(), 1u);
  EXPECT_EQ(r.out_of_range[0], (std::pair<std::string, std::size_t>{"T2", 7}));
}

TEST(Themes, GenerateWithTargetCountAndStrictAssign) {
  qta::testing::TempDir dir;
  auto t = std::make_shared<FnTransport>([](const std::string& prompt) {
    if (prompt.find("were not assigned") != std::string::npos) {
      return std::string(R"({"themes": [{"name": "A", "description": "x", "codes": [0, 1, 2]}]})");
    }
    return std::string(R"(```json
{"themes": [{"name": "A", "description": "x", "codes": [0, 1]}]}
```)");
  });
  Gateway gw(record_options(dir.path()), t);
  auto o = theming_options();
  o.n_themes = 4;
  CallLog log;
  ThemeSet s = generate_themes(codes(3), gw, o, &log);
  EXPECT_EQ(s.unassigned, (std::vector<std::size_t>{2}));
  EXPECT_EQ(s.requested, 4u);
  EXPECT_EQ(s.params_used, theming_params("gpt-4o"));
  EXPECT_NE(t->prompts().at(0).find("4 themes"), std::string::npos);
  EXPECT_NE(t->prompts().at(0).find("What helps?"), std::string::npos);
  EXPECT_NE(t->prompts().at(0).find("[2] Code 2: Description 2"), std::string::npos);
  o.strict_assign = true;
  s = generate_themes(codes(3), gw, o, &log);
  EXPECT_TRUE(s.unassigned.empty());
  EXPECT_EQ(s.warnings.at(0), "strict-assign re-prompt for 1 unassigned codes");
  EXPECT_EQ(log.records().back().purpose, "themes:strict-assign");
  EXPECT_THROW(generate_themes({}, gw, o), std::invalid_argument);
  o.n_themes = 0;
  EXPECT_THROW(generate_themes(codes(3), gw, o), std::invalid_argument);
}

TEST(Themes, MalformedReplyIsStageError) {
  qta::testing::TempDir dir;
  auto t = std::make_shared<FnTransport>([](const std::string&) { return std::string("{\"groups\": []}"); });
  Gateway gw(record_options(dir.path()), t);
  EXPECT_THROW(generate_themes(codes(2), gw, theming_options()), StageError);
}

TEST(Hierarchy, TwoCallsAndValidation) {
  qta::testing::TempDir dir;
  auto t = std::make_shared<FnTransport>([](const std::string& prompt) {
    if (prompt.find("list of sub-themes") != std::string::npos) {
      return std::string(R"({"themes": [{"name": "P1", "subthemes": [0, 1]}, {"name": "P2", "subthemes": [1]}]})");
    }
    return std::string(R"({"themes": [{"name": "S a", "codes": [0]}, {"name": "S b", "codes": [1]},
                                       {"name": "S c", "codes": [2]}]})");
  });
  Gateway gw(record_options(dir.path()), t);
  HierarchyOptions o;
  o.theming = theming_options();
  o.n_sub = 3;
  o.n_top = 2;
  o.subtheme_template = std::string(default_template(PromptId::subthemes));
  CallLog log;
  ThemeHierarchy h = generate_hierarchy(codes(3), gw, o, &log);
  ASSERT_EQ(h.subthemes.themes.size(), 3u);
  EXPECT_EQ(h.subthemes.themes[2].id, "S2");
  ASSERT_EQ(h.parents.size(), 2u);
  EXPECT_EQ(h.parents[1].id, "H2");
  EXPECT_EQ(h.validation.duplicated, (std::vector<std::size_t>{1}));
  EXPECT_EQ(h.validation.orphaned, (std::vector<std::size_t>{2}));
  EXPECT_EQ(h.validation.flags, (std::vector<std::string>{"duplicate sub-theme 1", "unplaced sub-theme 2"}));
  EXPECT_EQ(log.records().at(1).purpose, "hierarchy");
  const std::string second = t->prompts().at(1);
  EXPECT_NE(second.find("[2] S c"), std::string::npos);
  EXPECT_NE(t->prompts().at(0).find("3 themes"), std::string::npos);

  promote_subtheme(h, 1);
  EXPECT_EQ(h.parents.size(), 2u);  // P2 emptied and removed
  EXPECT_EQ(h.parents.back().id, "H2");
  EXPECT_TRUE(h.parents.back().promoted);
  EXPECT_EQ(h.parents.back().subtheme_indices, (std::vector<std::size_t>{1}));
  EXPECT_EQ(h.validation.duplicated.size(), 0u);
  EXPECT_THROW(promote_subtheme(h, 3), std::out_of_range);

  const ThemeHierarchy back = hierarchy_from_json(to_json(h));
  EXPECT_EQ(to_json(back), to_json(h));
}

TEST(Themes, JsonRoundTrip) {
  ThemeSet s;
  s.themes = {{"T1", "a", "d", {0, 2}}};
  s.unassigned = {1};
  s.params_used = theming_params("m");
  s.requested = 3;
  s.warnings = {"w"};
  EXPECT_EQ(to_json(themeset_from_json(to_json(s))), to_json(s));
}
