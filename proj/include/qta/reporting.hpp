#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qta/audit.hpp"
#include "qta/saturation.hpp"
#include "qta/theming.hpp"

namespace qta {

struct CoreqItem {
  int number = 0;
  std::string topic;
  std::string text;
};

struct CoreqInputs {
  std::string model;
  std::size_t human_reviewers = 0;
  std::size_t human_actions = 0;
  std::string participant_checking;
  std::optional<audit::AuditSummary> audit;  // absent: not audited
  std::size_t total_codes = 0;
  std::size_t unique_codes = 0;
  std::size_t theme_count = 0;
  std::size_t unassigned = 0;
  std::optional<std::size_t> subtheme_count;
  std::string coding_tree_ref = "report/coding_tree.md";
  std::string themes_ref = "report/themes.md";
  std::map<int, std::string> overrides;
};

// Items 24 to 32 in order.
std::vector<CoreqItem> coreq_report(const CoreqInputs& in);
std::string render_coreq_markdown(std::span<const CoreqItem> items);

struct QuoteLeaf {
  std::string member;
  std::string quote;
  std::string source;
  std::optional<audit::Verdict> verdict;  // absent when not sampled or not audited
};

struct CodeNode {
  std::size_t index = 0;
  std::string name;
  std::vector<QuoteLeaf> quotes;
};

struct ThemeNode {
  std::string id;
  std::string name;
  std::vector<CodeNode> codes;
};

struct CodingTree {
  std::vector<ThemeNode> themes;
  std::vector<std::size_t> unassigned;

  std::size_t leaf_count() const;
};

// Theme order, then code order within each theme. `audit_records` is matched
// by member ref.
CodingTree build_coding_tree(const ThemeSet& themes, std::span<const UniqueCode> codes,
                             std::span<const audit::QuoteAuditRecord> audit_records = {});
std::string render_coding_tree_markdown(const CodingTree& tree, std::span<const UniqueCode> codes);
nlohmann::json to_json(const CodingTree& tree);

enum class TableFormat { markdown, csv, json };
TableFormat parse_table_format(std::string_view s);
std::string_view extension(TableFormat f);

struct Table {
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;
};

std::string render_table(const Table& table, TableFormat format);

std::string format_percent(double pct);  // one decimal, e.g. "12.5%"

Table theme_table(const ThemeSet& themes);
Table hierarchy_table(const ThemeHierarchy& h);
Table audit_table(const audit::AuditSummary& s);
Table comparison_table(const audit::AuditSummary& staged, const audit::AuditSummary& baseline);
Table saturation_table(const SaturationReport& r);

}  // namespace qta
