#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qta/gateway.hpp"
#include "qta/saturation.hpp"

namespace qta {

struct Theme {
  std::string id;
  std::string name;
  std::string description;
  std::vector<std::size_t> code_indices;  // into the list the theme was built over
};

struct ThemeSet {
  std::vector<Theme> themes;
  std::vector<std::size_t> unassigned;
  GenerationParams params_used;
  std::optional<std::size_t> requested;  // --themes N, if given
  std::vector<std::string> warnings;
};

struct ThemingOptions {
  GenerationParams params;
  std::string research_question;
  std::optional<std::size_t> n_themes;
  std::string prompt_template;
  bool strict_assign = false;
  std::string id_prefix = "T";
};

// "[i] name: description" per line.
std::string render_code_list(std::span<const UniqueCode> codes);

// Builds a ThemeSet from a parsed reply: out-of-range indices are dropped
// with a warning, repeated indices within one theme collapse, and codes in no
// theme become unassigned. `member_key` names the index list ("codes").
ThemeSet parse_themes(const nlohmann::json& reply, std::size_t n_items, const std::string& id_prefix,
                      const std::string& member_key);

ThemeSet generate_themes(std::span<const UniqueCode> codes, Gateway& gateway,
                         const ThemingOptions& options, CallLog* log = nullptr);

struct AssignmentReport {
  std::vector<std::size_t> unassigned;
  std::vector<std::pair<std::string, std::size_t>> out_of_range;  // theme id, index
  std::vector<std::size_t> sizes;
  std::size_t overlap_count = 0;  // codes in more than one theme
  std::size_t assigned_distinct = 0;
};

AssignmentReport validate_assignment(const ThemeSet& themes, std::size_t n_codes);

struct ParentTheme {
  std::string id;
  std::string name;
  std::string description;
  std::vector<std::size_t> subtheme_indices;
  bool promoted = false;  // created by a reviewer from a single sub-theme
};

struct HierarchyReport {
  std::vector<std::string> flags;
  std::vector<std::size_t> duplicated;  // sub-themes under more than one parent
  std::vector<std::size_t> orphaned;    // sub-themes under no parent
};

struct ThemeHierarchy {
  ThemeSet subthemes;
  std::vector<ParentTheme> parents;
  GenerationParams params_used;
  HierarchyReport validation;
  std::vector<std::string> warnings;
};

struct HierarchyOptions {
  ThemingOptions theming;  // n_themes is overridden by n_sub
  std::size_t n_sub = 14;
  std::size_t n_top = 10;
  std::string subtheme_template;
};

ThemeHierarchy generate_hierarchy(std::span<const UniqueCode> codes, Gateway& gateway,
                                  const HierarchyOptions& options, CallLog* log = nullptr);

// Flags every sub-theme whose parent count is not exactly one.
HierarchyReport validate_hierarchy(const ThemeHierarchy& h);

// Moves sub-theme i out of every parent into a new parent of its own.
void promote_subtheme(ThemeHierarchy& h, std::size_t index);

nlohmann::json to_json(const Theme& t);
nlohmann::json to_json(const ThemeSet& s);
ThemeSet themeset_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ThemeHierarchy& h);
ThemeHierarchy hierarchy_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AssignmentReport& r);

}  // namespace qta
